#pragma once

#include <string>

#include "affect/core/http_json.hpp"

namespace affect {

/// Selects a provider implementation for one model boundary.
struct ProviderConfig {
  std::string kind = "mock";  // mock | http | none
  HttpEndpoint endpoint;
  bool operator==(const ProviderConfig&) const = default;
};

}  // namespace affect
