#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace sparqlgen {

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string content_type;
};

struct HttpRequest {
  std::string url;  // absolute: scheme://host[:port]/path
  std::string body;
  std::string content_type;
  std::vector<std::pair<std::string, std::string>> headers;
  std::chrono::milliseconds timeout{30000};
  size_t max_response_bytes = 0;  // 0 = unlimited
};

// POSTs `req`. Any HTTP status is returned as a response; connection
// failures throw TransportError, an exceeded deadline throws TimeoutError and
// an oversized body throws TransportError.
HttpResponse http_post(const HttpRequest& req);

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // always starts with '/'
};

SplitUrl split_url(const std::string& url);

}  // namespace sparqlgen
