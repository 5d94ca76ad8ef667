#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nstp {

/// Base of every error the library throws. `kind()` is the stable,
/// machine-readable name used in JSON reports and CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define NSTP_DEFINE_ERROR(Name, Base)                                   \
  class Name : public Base {                                            \
   public:                                                              \
    explicit Name(const std::string& message) : Base(#Name, message) {} \
                                                                        \
   protected:                                                           \
    Name(std::string kind, const std::string& message)                  \
        : Base(std::move(kind), message) {}                             \
  };

// Parsing. SyntaxError carries a location.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, std::size_t column, const std::string& message)
      : Error("SyntaxError", "line " + std::to_string(line) + ", column " +
                                 std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class UnsupportedFeature : public Error {
 public:
  explicit UnsupportedFeature(std::string feature)
      : Error("UnsupportedFeature", "unsupported PDDL feature: " + feature),
        feature_(std::move(feature)) {}

  const std::string& feature() const noexcept { return feature_; }

 private:
  std::string feature_;
};

NSTP_DEFINE_ERROR(SemanticError, Error)
NSTP_DEFINE_ERROR(NotApplicable, Error)
NSTP_DEFINE_ERROR(ConfigError, Error)
NSTP_DEFINE_ERROR(IoError, Error)
NSTP_DEFINE_ERROR(FormatError, Error)

// External planner adapter.
NSTP_DEFINE_ERROR(ExternalUnavailable, Error)
NSTP_DEFINE_ERROR(ExternalFailure, Error)

// Samplers.
NSTP_DEFINE_ERROR(SamplerUnavailable, Error)
NSTP_DEFINE_ERROR(InsufficientPlans, SamplerUnavailable)
NSTP_DEFINE_ERROR(OracleUnsolvable, Error)

// LLM gateway.
NSTP_DEFINE_ERROR(TransportError, Error)
NSTP_DEFINE_ERROR(MalformedOutput, Error)
NSTP_DEFINE_ERROR(BudgetExceeded, Error)
NSTP_DEFINE_ERROR(FinalSubgoalMismatch, Error)

// Pipeline.
NSTP_DEFINE_ERROR(UnknownDomainKind, Error)

#undef NSTP_DEFINE_ERROR

}  // namespace nstp
