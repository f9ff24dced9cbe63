#include "affect/core/http_json.hpp"

#include "affect/core/error.hpp"
#include "httplib.h"

namespace affect {

namespace {

struct SplitUrl {
  std::string origin;
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos || url.compare(0, scheme, "http") != 0)
    throw ProviderUnavailable("unsupported endpoint url: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body) {
  const auto [origin, path] = split_url(endpoint.url);
  httplib::Client client(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!endpoint.token.empty()) headers.emplace("Authorization", "Bearer " + endpoint.token);

  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    throw NetworkTimeout("request to " + endpoint.url + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300)
    throw ProviderUnavailable("endpoint " + endpoint.url + " replied " + std::to_string(res->status));
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("endpoint returned invalid JSON: ") + e.what());
  }
}

}  // namespace affect
