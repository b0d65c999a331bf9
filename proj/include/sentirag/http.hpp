#pragma once

#include <chrono>
#include <string>

#include <json.hpp>

namespace sentirag {

struct HttpEndpoint {
  std::string url;  // http://host:port/path
  std::chrono::milliseconds timeout{10000};
  int retries = 2;
};

// POSTs a JSON body and parses the JSON reply. Connection failures, timeouts
// and 5xx replies are retried up to `retries` times, then surface as
// RetryableError. Other non-2xx statuses and unparseable bodies throw Error.
// Each attempt is bounded by `timeout`, so a call ends within
// timeout * (retries + 1).
nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body);

// Splits "http://host:port/path" into origin and path ("/" when absent).
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace sentirag
