#pragma once

#include <chrono>
#include <string>

#include "json.hpp"

namespace affect {

struct HttpEndpoint {
  std::string url;    // http://host[:port]/path
  std::string token;  // sent as a bearer token when non-empty
  std::chrono::milliseconds timeout{2000};
  bool operator==(const HttpEndpoint&) const = default;
};

/// POSTs a JSON document and returns the parsed JSON response.
/// Throws NetworkTimeout when the server cannot be reached in time and
/// ProviderUnavailable on non-2xx replies; ParseError on a non-JSON body.
nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body);

}  // namespace affect
