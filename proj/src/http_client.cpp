#include "brainstorm/http_client.hpp"

#include <httplib.h>

#include "brainstorm/error.hpp"

namespace brainstorm::net {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host:port
  std::string path;
};

SplitUrl split(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::ProviderFailure, "not an absolute URL: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResponse send(const HttpRequest& request) {
  const auto [origin, path] = split(request.url);
  httplib::Client client(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);

  httplib::Result result = request.method == "GET"
                               ? client.Get(path, headers)
                               : client.Post(path, headers, request.body, request.content_type);
  if (!result) {
    throw Error(ErrorCode::ProviderTimeout,
                "HTTP " + request.method + " " + request.url + " failed: " +
                    httplib::to_string(result.error()));
  }
  return {result->status, result->body};
}

}  // namespace brainstorm::net
