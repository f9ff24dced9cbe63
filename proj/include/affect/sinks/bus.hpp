#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "affect/core/pipeline.hpp"
#include "affect/sinks/payloads.hpp"

namespace affect::sinks {

AFFECT_DEFINE_ERROR(NotServing, "not_serving");

/// "*" matches every topic, "face.*" every topic starting with "face.",
/// anything else only itself.
bool topic_matches(std::string_view pattern, std::string_view topic);
/// True when the pattern matches at least one registered topic.
bool pattern_resolves(std::string_view pattern);

/// {"topic":...,"t":<microseconds>,"payload":{...}}, no trailing newline.
std::string bus_line(std::string_view topic, Timestamp t, const Json& payload);

struct BusOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  /// Required in the subscribe line when non-empty.
  std::string token;
  /// Messages waiting for one subscriber before it is disconnected.
  std::size_t queue_limit = 1024;
};

struct BusStats {
  std::uint64_t published = 0;
  std::uint64_t subscribers = 0;  // currently subscribed
  std::uint64_t rejected = 0;     // failed subscribe handshakes
  std::uint64_t slow_disconnects = 0;
};

/// Newline-delimited JSON pub/sub over TCP. A client sends one line
///   {"type":"subscribe","topics":["face.*","audio.vad"],"token":"..."}
/// and then receives one bus_line per matching publish, in publish order.
/// Errors are reported as {"type":"error","code":"..."} before the server
/// closes the connection.
class BusServer {
public:
  explicit BusServer(BusOptions options = {});
  ~BusServer();
  BusServer(const BusServer&) = delete;
  BusServer& operator=(const BusServer&) = delete;

  /// Binds and starts serving on a background thread.
  void start();
  /// Delivers what is queued (up to `drain`), then closes every connection.
  void stop(std::chrono::milliseconds drain = std::chrono::milliseconds(2000));
  bool serving() const;
  std::uint16_t port() const;

  /// Throws NotServing, SchemaViolation, or SanitizeViolation when the
  /// payload carries raw data.
  void publish(std::string_view topic, Timestamp t, const Json& payload);

  BusStats stats() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Subscribes a "bus_publisher" component to streams and publishes each
/// message under the stream's name.
class BusPublisher {
public:
  BusPublisher(Pipeline& pipeline, std::shared_ptr<BusServer> bus);

  template <class T>
  BusPublisher& tap(const Stream<T>& stream, SubscriptionOptions delivery = {}) {
    if (!stream.valid()) return *this;
    const std::string topic = stream.descriptor().name;
    component_.input(stream, [bus = bus_, topic](const Message<T>& m) {
      publish_or_skip(*bus, topic, m.originating_time(), to_json(m.payload()));
    }, delivery);
    return *this;
  }

private:
  static void publish_or_skip(BusServer& bus, const std::string& topic, Timestamp t, const Json& payload);
  Component component_;
  std::shared_ptr<BusServer> bus_;
};

}  // namespace affect::sinks
