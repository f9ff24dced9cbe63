#include "affect/sinks/bus.hpp"

#include <atomic>
#include <deque>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <sodium.h>

#include "affect/sinks/metrics.hpp"

namespace affect::sinks {

namespace asio = boost::asio;
using tcp = asio::ip::tcp;

bool topic_matches(std::string_view pattern, std::string_view topic) {
  if (pattern == "*") return true;
  if (pattern.size() >= 2 && pattern.ends_with(".*"))
    return topic.size() > pattern.size() - 1 && topic.starts_with(pattern.substr(0, pattern.size() - 1));
  return pattern == topic;
}

std::string bus_line(std::string_view topic, Timestamp t, const Json& payload) {
  Json j;
  j["topic"] = topic;
  j["t"] = to_micros(t);
  j["payload"] = payload;
  return j.dump();
}

bool pattern_resolves(std::string_view pattern) {
  for (const auto& s : topic_schemas())
    if (topic_matches(pattern, s.topic)) return true;
  return false;
}

namespace {

constexpr std::size_t kMaxSubscribeLine = 64 * 1024;

std::string error_line(std::string_view code) {
  Json j;
  j["type"] = "error";
  j["code"] = code;
  return j.dump() + "\n";
}

bool token_equal(const std::string& a, const std::string& b) {
  return a.size() == b.size() && (a.empty() || sodium_memcmp(a.data(), b.data(), a.size()) == 0);
}

}  // namespace

struct BusServer::Impl {
  struct Session : std::enable_shared_from_this<Session> {
    Session(Impl& owner, tcp::socket s) : impl(owner), socket(std::move(s)) {}

    Impl& impl;
    tcp::socket socket;
    std::string inbox;
    std::array<char, 512> discard{};
    std::vector<std::string> patterns;
    std::deque<std::shared_ptr<const std::string>> queue;
    bool writing = false;
    bool closing = false;  // no further messages; close once the queue drains
    bool subscribed = false;

    bool wants(std::string_view topic) const {
      return std::any_of(patterns.begin(), patterns.end(), [&](const auto& p) { return topic_matches(p, topic); });
    }

    void begin() {
      auto self = shared_from_this();
      asio::async_read_until(socket, asio::dynamic_buffer(inbox, kMaxSubscribeLine), '\n',
                             [self](boost::system::error_code ec, std::size_t n) { self->on_subscribe(ec, n); });
    }

    void on_subscribe(boost::system::error_code ec, std::size_t n) {
      if (ec) {
        if (ec == asio::error::not_found) reject("bad_request");  // line too long
        else close();
        return;
      }
      const std::string line = inbox.substr(0, n);
      inbox.erase(0, n);
      const Json req = Json::parse(line, nullptr, false);
      if (req.is_discarded() || !req.is_object() || req.value("type", "") != "subscribe" || !req.contains("topics") ||
          !req.at("topics").is_array()) {
        reject("bad_request");
        return;
      }
      const std::string token = req.contains("token") && req.at("token").is_string() ? req.at("token").get<std::string>() : "";
      if (!impl.options.token.empty() && !token_equal(token, impl.options.token)) {
        reject("auth_rejected");
        return;
      }
      for (const auto& t : req.at("topics")) {
        if (!t.is_string() || !pattern_resolves(t.get<std::string>())) {
          reject("unknown_topic");
          return;
        }
        patterns.push_back(t.get<std::string>());
      }
      subscribed = true;
      impl.stats.subscribers++;
      watch();
    }

    // Reads and ignores client bytes so a hang-up is noticed.
    void watch() {
      auto self = shared_from_this();
      socket.async_read_some(asio::buffer(discard), [self](boost::system::error_code ec, std::size_t) {
        if (ec) self->close();
        else self->watch();
      });
    }

    void reject(std::string_view code) {
      impl.stats.rejected++;
      closing = true;
      queue.push_back(std::make_shared<const std::string>(error_line(code)));
      flush();
    }

    void enqueue(const std::shared_ptr<const std::string>& line) {
      if (closing || !subscribed) return;
      if (queue.size() >= impl.options.queue_limit) {
        impl.stats.slow_disconnects++;
        queue.clear();
        queue.push_back(std::make_shared<const std::string>(error_line("slow_consumer")));
        closing = true;
        // a writer blocked on a full socket would never reach the error line
        if (writing) {
          close();
          return;
        }
      } else {
        queue.push_back(line);
      }
      flush();
    }

    void flush() {
      if (writing) return;
      if (queue.empty()) {
        if (closing) close();
        return;
      }
      writing = true;
      auto self = shared_from_this();
      asio::async_write(socket, asio::buffer(*queue.front()), [self](boost::system::error_code ec, std::size_t) {
        self->writing = false;
        if (ec) {
          self->close();
          return;
        }
        if (!self->queue.empty()) self->queue.pop_front();
        self->flush();
      });
    }

    void close() {
      if (!socket.is_open()) return;
      boost::system::error_code ignored;
      socket.shutdown(tcp::socket::shutdown_both, ignored);
      socket.close(ignored);
      if (subscribed) impl.stats.subscribers--;
      subscribed = false;
      queue.clear();
      impl.sessions.erase(shared_from_this());
      impl.maybe_finish();
    }
  };

  struct Counters {
    std::atomic<std::uint64_t> published{0}, subscribers{0}, rejected{0}, slow_disconnects{0};
  };

  explicit Impl(BusOptions o) : options(std::move(o)), acceptor(io), drain_timer(io) {}

  void accept() {
    acceptor.async_accept([this](boost::system::error_code ec, tcp::socket s) {
      if (ec) return;  // acceptor closed
      auto session = std::make_shared<Session>(*this, std::move(s));
      sessions.insert(session);
      session->begin();
      accept();
    });
  }

  void maybe_finish() {
    if (stopping && sessions.empty()) drain_timer.cancel();
  }

  BusOptions options;
  asio::io_context io;
  tcp::acceptor acceptor;
  asio::steady_timer drain_timer;
  std::optional<asio::executor_work_guard<asio::io_context::executor_type>> work;
  std::set<std::shared_ptr<Session>> sessions;  // io thread only
  std::thread thread;
  std::atomic<bool> running{false};
  bool stopping = false;  // io thread only
  std::uint16_t bound_port = 0;
  Counters stats;
  std::mutex publish_mu;
};

BusServer::BusServer(BusOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

BusServer::~BusServer() { stop(std::chrono::milliseconds(0)); }

void BusServer::start() {
  if (impl_->running) return;
  auto& im = *impl_;
  const tcp::endpoint ep(asio::ip::make_address(im.options.host), im.options.port);
  im.acceptor.open(ep.protocol());
  im.acceptor.set_option(tcp::acceptor::reuse_address(true));
  im.acceptor.bind(ep);
  im.acceptor.listen();
  im.bound_port = im.acceptor.local_endpoint().port();
  im.work.emplace(im.io.get_executor());
  im.accept();
  im.running = true;
  im.thread = std::thread([&im] { im.io.run(); });
}

void BusServer::stop(std::chrono::milliseconds drain) {
  auto& im = *impl_;
  {
    std::lock_guard lk(im.publish_mu);
    if (!im.running.exchange(false)) return;
  }
  asio::post(im.io, [&im, drain] {
    im.stopping = true;
    boost::system::error_code ignored;
    im.acceptor.close(ignored);
    auto sessions = im.sessions;
    for (const auto& s : sessions) {
      s->closing = true;
      s->flush();
    }
    im.drain_timer.expires_after(drain);
    im.drain_timer.async_wait([&im](boost::system::error_code) {
      auto left = im.sessions;
      for (const auto& s : left) s->close();
    });
    im.maybe_finish();
  });
  im.work.reset();
  if (im.thread.joinable()) im.thread.join();
}

bool BusServer::serving() const { return impl_->running; }

std::uint16_t BusServer::port() const { return impl_->bound_port; }

void BusServer::publish(std::string_view topic, Timestamp t, const Json& payload) {
  validate_payload(topic, payload);
  auto line = std::make_shared<const std::string>(bus_line(topic, t, sanitize(payload, SanitizeMode::strict)) + "\n");
  auto& im = *impl_;
  std::lock_guard lk(im.publish_mu);  // keeps per-topic order across publishing threads
  if (!im.running) throw NotServing("bus is not serving");
  im.stats.published++;
  asio::post(im.io, [&im, line, topic = std::string(topic)] {
    auto sessions = im.sessions;
    for (const auto& s : sessions)
      if (s->subscribed && s->wants(topic)) s->enqueue(line);
  });
}

BusStats BusServer::stats() const {
  const auto& c = impl_->stats;
  return {c.published.load(), c.subscribers.load(), c.rejected.load(), c.slow_disconnects.load()};
}

BusPublisher::BusPublisher(Pipeline& pipeline, std::shared_ptr<BusServer> bus)
    : component_(pipeline.add_component("bus_publisher")), bus_(std::move(bus)) {}

void BusPublisher::publish_or_skip(BusServer& bus, const std::string& topic, Timestamp t, const Json& payload) {
  try {
    bus.publish(topic, t, payload);
  } catch (const NotServing&) {
    // nobody can listen once the bus is down
  }
}

}  // namespace affect::sinks
