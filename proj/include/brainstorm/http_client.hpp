#pragma once

#include <chrono>
#include <map>
#include <string>

namespace brainstorm::net {

struct HttpResponse {
  int status = 0;
  std::string body;
};

struct HttpRequest {
  std::string method = "POST";
  std::string url;  // absolute: scheme://host[:port]/path
  std::map<std::string, std::string> headers;
  std::string body;
  std::string content_type = "application/json";
  std::chrono::milliseconds timeout{std::chrono::seconds{60}};
};

// Transport failures (connect, read timeout) are reported as
// Error(ProviderTimeout); any HTTP status is returned to the caller.
HttpResponse send(const HttpRequest& request);

}  // namespace brainstorm::net
