#pragma once

#include <stdexcept>
#include <string>

namespace affect {

/// Root of every error raised by the library. `code()` is a stable
/// machine-readable name (it also travels on the bus error line).
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

#define AFFECT_DEFINE_ERROR(Name, code_str)                                   \
  class Name : public ::affect::Error {                                       \
  public:                                                                     \
    explicit Name(const std::string& what) : ::affect::Error(code_str, what) {} \
  }

AFFECT_DEFINE_ERROR(UnknownStream, "unknown_stream");
AFFECT_DEFINE_ERROR(NonMonotonicTimestamp, "non_monotonic_timestamp");
AFFECT_DEFINE_ERROR(CyclicGraph, "cyclic_graph");
AFFECT_DEFINE_ERROR(ProviderUnavailable, "provider_unavailable");
AFFECT_DEFINE_ERROR(NetworkTimeout, "network_timeout");
AFFECT_DEFINE_ERROR(ParseError, "parse_error");

}  // namespace affect
