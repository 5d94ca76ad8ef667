#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "nstp/error.hpp"
#include "nstp/search.hpp"

namespace nstp {

namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class ScratchDir {
 public:
  ScratchDir() {
    std::string tmpl = (fs::temp_directory_path() / "nstp-external-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw IoError("cannot create scratch directory");
    path_ = tmpl;
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// Picks "sas_plan", or the last "sas_plan.N" an anytime configuration wrote.
std::optional<fs::path> find_plan_file(const fs::path& dir) {
  if (fs::exists(dir / "sas_plan")) return dir / "sas_plan";
  std::optional<fs::path> best;
  int best_n = -1;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("sas_plan.", 0) != 0) continue;
    const int n = std::atoi(name.c_str() + 9);
    if (n > best_n) {
      best_n = n;
      best = entry.path();
    }
  }
  return best;
}

}  // namespace

SearchResult solve_via_external(const fs::path& domain_path, const fs::path& problem_path,
                                const fs::path& binary_path, std::chrono::milliseconds budget,
                                const std::string& search_config) {
  if (budget.count() <= 0) throw ConfigError("external planner budget must be > 0");
  std::error_code ec;
  if (!fs::is_regular_file(binary_path, ec) || ::access(binary_path.c_str(), X_OK) != 0) {
    throw ExternalUnavailable("planner binary not found or not executable: " +
                              binary_path.string());
  }
  const fs::path domain_abs = fs::absolute(domain_path);
  const fs::path problem_abs = fs::absolute(problem_path);
  const fs::path binary_abs = fs::absolute(binary_path);

  ScratchDir scratch;
  const fs::path log_path = scratch.path() / "planner.log";
  const auto start = std::chrono::steady_clock::now();

  const pid_t pid = ::fork();
  if (pid < 0) throw ExternalFailure("fork failed");
  if (pid == 0) {
    if (::chdir(scratch.path().c_str()) != 0) ::_exit(127);
    const int fd = ::open(log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd >= 0) {
      ::dup2(fd, STDOUT_FILENO);
      ::dup2(fd, STDERR_FILENO);
      ::close(fd);
    }
    ::setpgid(0, 0);
    std::vector<std::string> args = {binary_abs.string(), domain_abs.string(),
                                     problem_abs.string(), "--search", search_config};
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    ::execv(argv[0], argv.data());
    ::_exit(127);
  }

  int status = 0;
  bool timed_out = false;
  for (;;) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw ExternalFailure("waitpid failed");
    if (std::chrono::steady_clock::now() - start >= budget) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }

  SearchResult result;
  result.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  if (timed_out) {
    result.outcome = Outcome::kBudgetExhausted;
    return result;
  }
  const std::string output = read_file(log_path);
  if (!WIFEXITED(status)) {
    throw ExternalFailure("planner terminated abnormally\n" + output);
  }
  const int code = WEXITSTATUS(status);
  if (code == 10 || code == 11) {
    result.outcome = Outcome::kProvenUnsolvable;
    return result;
  }
  if (code == 12 || (code >= 22 && code <= 24)) {
    result.outcome = Outcome::kBudgetExhausted;
    return result;
  }
  if (code > 3) {
    throw ExternalFailure("planner exited with code " + std::to_string(code) + "\n" + output);
  }
  const auto plan_file = find_plan_file(scratch.path());
  if (!plan_file) {
    throw ExternalFailure("planner exited with code " + std::to_string(code) +
                          " but wrote no plan file\n" + output);
  }

  Plan plan = parse_plan_file(read_file(*plan_file));
  const DomainDef domain = parse_domain(read_file(domain_abs));
  const ProblemDef problem = parse_problem(read_file(problem_abs), domain);
  const ValidationReport report = validate(domain, problem, plan);
  if (!report.valid) {
    throw ExternalFailure("external plan rejected by the validator at step " +
                          std::to_string(report.failure_step.value_or(0)) + " (" +
                          to_string(*report.failure_kind) + ")");
  }
  result.plan = std::move(plan);
  result.outcome = Outcome::kSolved;
  return result;
}

}  // namespace nstp
