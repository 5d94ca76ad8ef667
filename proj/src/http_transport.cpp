#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <regex>

#include "nstp/error.hpp"
#include "nstp/llm.hpp"

namespace nstp {

namespace {

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(const LlmConfig& config) : config_(config) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint_url, m, url)) {
      throw ConfigError("endpoint URL must look like http(s)://host/path");
    }
    origin_ = m[1];
    path_ = m[2].matched ? std::string(m[2]) : "/";
  }

  HttpResponse post(const nlohmann::json& request) override {
    httplib::Client client(origin_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.request_timeout);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_write_timeout(secs);
    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto res = client.Post(path_, headers, request.dump(), "application/json");
    if (!res) throw TransportError("POST " + config_.endpoint_url + ": " + httplib::to_string(res.error()));
    HttpResponse out;
    out.status = res->status;
    if (res->status == 200) {
      try {
        out.body = nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw MalformedOutput(std::string("response is not JSON: ") + e.what());
      }
    }
    return out;
  }

 private:
  LlmConfig config_;
  std::string origin_;
  std::string path_;
};

}  // namespace

std::shared_ptr<Transport> http_transport(const LlmConfig& config) {
  config.check();
  return std::make_shared<HttpTransport>(config);
}

}  // namespace nstp
