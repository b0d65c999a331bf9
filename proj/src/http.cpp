#include "sentirag/http.hpp"

#include <httplib.h>

#include <fmt/format.h>

#include "sentirag/error.hpp"

namespace sentirag {

std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError(fmt::format("URL lacks a scheme: `{}`", url));
  if (url.compare(0, scheme, "http") != 0)
    throw ConfigError(fmt::format("only http:// endpoints are supported: `{}`", url));
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body) {
  auto [origin, path] = split_url(endpoint.url);
  if (endpoint.retries < 0) throw ConfigError("retries must be >= 0");
  // Connect and transfer share the per-attempt budget.
  auto half = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout) / 2;
  std::string payload = body.dump();
  std::string last_error;
  for (int attempt = 0; attempt <= endpoint.retries; ++attempt) {
    httplib::Client client(origin);
    client.set_connection_timeout(half);
    client.set_read_timeout(half);
    client.set_write_timeout(half);
    auto res = client.Post(path, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = fmt::format("HTTP {}", res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300)
      throw Error(fmt::format("{} returned HTTP {}", endpoint.url, res->status));
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(fmt::format("{} returned invalid JSON: {}", endpoint.url, e.what()));
    }
  }
  throw RetryableError(fmt::format("{} unavailable after {} attempts: {}", endpoint.url,
                                   endpoint.retries + 1, last_error));
}

}  // namespace sentirag
