#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <typeindex>
#include <utility>
#include <vector>

#include "affect/core/error.hpp"
#include "affect/core/message.hpp"
#include "affect/core/time.hpp"
#include "affect/core/window.hpp"

namespace affect {

enum class PayloadKind {
  video_frame,
  audio_buffer,
  face_tracks,
  emotion_scores,
  hr_estimate,
  resp_estimate,
  vad_flag,
  transcript,
  prosody,
  valence,
  app_event,
  calendar_event,
  email_score,
  input_activity,
  metrics_row,
};

std::string_view to_string(PayloadKind kind);

struct StreamDescriptor {
  std::size_t id = 0;
  std::string name;
  PayloadKind kind = PayloadKind::metrics_row;
};

enum class DeliveryPolicy {
  drop_oldest,  // live capture: freshness over completeness
  block,        // replay: the producer waits, nothing is lost
};

struct SubscriptionOptions {
  std::size_t capacity = 256;
  DeliveryPolicy policy = DeliveryPolicy::drop_oldest;
};

struct SubscriptionStats {
  std::string subscriber;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
};

struct StreamStats {
  std::string name;
  PayloadKind kind = PayloadKind::metrics_row;
  std::uint64_t emitted = 0;
  /// Drops made by the producing operator itself (e.g. unmatched join inputs).
  std::uint64_t dropped = 0;
  std::vector<SubscriptionStats> subscriptions;

  std::uint64_t delivered() const;
  std::uint64_t queue_dropped() const;
};

struct RunReport {
  std::vector<StreamStats> streams;

  const StreamStats* find(std::string_view name) const;
  const StreamStats& at(std::string_view name) const;
};

class ComponentFailure : public Error {
public:
  ComponentFailure(std::string component, const std::string& what, RunReport report)
      : Error("component_failure", "component '" + component + "' failed: " + what),
        component_(std::move(component)), report_(std::move(report)) {}
  const std::string& component() const noexcept { return component_; }
  const RunReport& report() const noexcept { return report_; }

private:
  std::string component_;
  RunReport report_;
};

namespace detail {
class PipelineCore;
class Node;
struct StreamState;
using ErasedHandler = std::function<void(const std::shared_ptr<const void>&, Timestamp)>;
}  // namespace detail

template <class A, class B>
struct Joined {
  Message<A> primary;
  Message<B> secondary;
};

/// Read handle to a stream carrying payloads of type T.
template <class T>
class Stream {
public:
  Stream() = default;
  const StreamDescriptor& descriptor() const;
  bool valid() const { return state_ != nullptr; }

private:
  friend class Pipeline;
  friend class Component;
  template <class>
  friend class Emitter;
  explicit Stream(detail::StreamState* s) : state_(s) {}
  detail::StreamState* state_ = nullptr;
};

/// Write handle held by the single producer of a stream.
template <class T>
class Emitter {
public:
  Emitter() = default;

  std::uint64_t emit(T value, Timestamp originating_time) const {
    return emit_shared(std::make_shared<const T>(std::move(value)), originating_time);
  }
  std::uint64_t emit_shared(std::shared_ptr<const T> value, Timestamp originating_time) const;
  /// Promise that nothing earlier than `t` will be emitted (no message is sent).
  void advance(Timestamp t) const;

  Stream<T> stream() const { return Stream<T>(state_); }
  const StreamDescriptor& descriptor() const { return stream().descriptor(); }
  bool valid() const { return state_ != nullptr; }

private:
  friend class Component;
  friend class Source;
  Emitter(detail::PipelineCore* core, detail::StreamState* s) : core_(core), state_(s) {}
  detail::PipelineCore* core_ = nullptr;
  detail::StreamState* state_ = nullptr;
};

/// Builder handle for a processing node. Every registered callback runs on
/// the node's own worker, one at a time.
class Component {
public:
  template <class T>
  Emitter<T> output(std::string name, PayloadKind kind) {
    return Emitter<T>(core_, make_output(std::move(name), kind, typeid(T)));
  }

  /// Subscribes to `stream`; returns the input index.
  template <class T, class F>
  std::size_t input(const Stream<T>& stream, F&& on_message, SubscriptionOptions options = {}) {
    check_type(stream.state_, typeid(T));
    return add_input(stream.state_, options,
                     [fn = std::forward<F>(on_message)](const std::shared_ptr<const void>& p,
                                                        Timestamp t) mutable {
                       fn(Message<T>(std::static_pointer_cast<const T>(p), t));
                     });
  }

  /// Called after every message, watermark advance or input close.
  void on_progress(std::function<void()> fn);
  /// Called once after all inputs have closed, before outputs close.
  void on_close(std::function<void()> fn);
  /// Earliest time this component may still emit at (for buffered state).
  void hold(std::function<std::optional<Timestamp>()> fn);

  Timestamp input_watermark(std::size_t input) const;
  bool input_closed(std::size_t input) const;
  /// Records an operator-level drop against one of this component's outputs.
  void count_drop(const StreamDescriptor& output, std::uint64_t n = 1);
  const std::string& name() const;

private:
  friend class Pipeline;
  Component(detail::PipelineCore* core, detail::Node* node) : core_(core), node_(node) {}
  detail::StreamState* make_output(std::string name, PayloadKind kind, std::type_index type);
  std::size_t add_input(detail::StreamState* s, SubscriptionOptions options, detail::ErasedHandler h);
  static void check_type(detail::StreamState* s, std::type_index type);

  detail::PipelineCore* core_;
  detail::Node* node_;
};

class SourceContext {
public:
  bool stop_requested() const;
  /// Sleeps until `deadline` or until a stop is requested; returns false on stop.
  bool sleep_until(std::chrono::steady_clock::time_point deadline) const;

private:
  friend class detail::PipelineCore;
  explicit SourceContext(const detail::PipelineCore* core) : core_(core) {}
  const detail::PipelineCore* core_;
};

/// Builder handle for a node with no inputs that produces data on its own
/// thread. Outputs close when the body returns.
class Source {
public:
  template <class T>
  Emitter<T> output(std::string name, PayloadKind kind) {
    return Emitter<T>(core_, make_output(std::move(name), kind, typeid(T)));
  }
  void body(std::function<void(const SourceContext&)> fn);
  const std::string& name() const;

private:
  friend class Pipeline;
  Source(detail::PipelineCore* core, detail::Node* node) : core_(core), node_(node) {}
  detail::StreamState* make_output(std::string name, PayloadKind kind, std::type_index type);

  detail::PipelineCore* core_;
  detail::Node* node_;
};

/// A graph of sources and components connected by named, timestamped
/// streams. Build the graph, then call run() once.
class Pipeline {
public:
  Pipeline();
  ~Pipeline();
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  Source add_source(std::string name);
  Component add_component(std::string name);

  template <class T>
  Stream<T> stream(std::string_view name) const {
    auto* s = find_state(name);
    if (!s) throw UnknownStream(std::string(name));
    Component::check_type(s, typeid(T));
    return Stream<T>(s);
  }
  std::optional<StreamDescriptor> find_stream(std::string_view name) const;

  /// Emits on a stream addressed by descriptor. Intended for source bodies
  /// that only hold descriptors.
  template <class T>
  std::uint64_t emit(const StreamDescriptor& stream, T payload, Timestamp originating_time) {
    auto* s = state_by_id(stream.id);
    if (!s) throw UnknownStream(stream.name);
    Component::check_type(s, typeid(T));
    return emit_erased(s, std::make_shared<const T>(std::move(payload)), originating_time);
  }

  /// Pairs each `a` message with the `b` message nearest in time (within
  /// `tolerance`, ties to the earlier). Unmatched `a` messages are dropped
  /// and counted on the output stream.
  template <class A, class B>
  Stream<Joined<A, B>> join(const Stream<A>& a, const Stream<B>& b, Duration tolerance,
                            std::string name = {}, SubscriptionOptions options = {});

  /// Groups messages into windows; each output carries the window's
  /// messages and is stamped at window_start + length.
  template <class T>
  Stream<WindowContents<T>> window(const Stream<T>& in, WindowSpec spec, std::string name = {},
                                   SubscriptionOptions options = {});

  RunReport run();
  /// Asks every source to stop; safe to call from any thread or a signal
  /// handler's watcher thread.
  void request_stop();
  bool running() const;

private:
  detail::StreamState* find_state(std::string_view name) const;
  detail::StreamState* state_by_id(std::size_t id) const;
  std::uint64_t emit_erased(detail::StreamState* s, std::shared_ptr<const void> p, Timestamp t);

  std::unique_ptr<detail::PipelineCore> core_;
};

// --- implementation of the typed templates -------------------------------

namespace detail {
const StreamDescriptor& descriptor_of(const StreamState* s);
std::uint64_t emit(PipelineCore* core, StreamState* s, std::shared_ptr<const void> p, Timestamp t);
void advance(PipelineCore* core, StreamState* s, Timestamp t);
}  // namespace detail

template <class T>
const StreamDescriptor& Stream<T>::descriptor() const {
  return detail::descriptor_of(state_);
}

template <class T>
std::uint64_t Emitter<T>::emit_shared(std::shared_ptr<const T> value, Timestamp t) const {
  return detail::emit(core_, state_, std::move(value), t);
}

template <class T>
void Emitter<T>::advance(Timestamp t) const {
  detail::advance(core_, state_, t);
}

template <class A, class B>
Stream<Joined<A, B>> Pipeline::join(const Stream<A>& a, const Stream<B>& b, Duration tolerance,
                                    std::string name, SubscriptionOptions options) {
  if (name.empty()) name = a.descriptor().name + "+" + b.descriptor().name;
  auto c = add_component("join:" + name);
  auto out = c.output<Joined<A, B>>(name, a.descriptor().kind);

  struct State {
    std::deque<Message<A>> pending;
    std::deque<Message<B>> candidates;
    std::size_t a_in = 0;
    std::size_t b_in = 0;
  };
  auto st = std::make_shared<State>();
  st->a_in = c.input(a, [st](const Message<A>& m) { st->pending.push_back(m); }, options);
  st->b_in = c.input(b, [st](const Message<B>& m) { st->candidates.push_back(m); }, options);

  c.on_progress([st, c, out, tolerance]() mutable {
    const bool b_done = c.input_closed(st->b_in);
    const Timestamp b_wm = c.input_watermark(st->b_in);
    while (!st->pending.empty()) {
      const Timestamp ta = st->pending.front().originating_time();
      // A later b message could still land within tolerance.
      if (!b_done && !(b_wm > ta + tolerance)) break;
      const Message<B>* best = nullptr;
      Duration best_dist{};
      for (const auto& mb : st->candidates) {
        const Duration d = mb.originating_time() > ta ? mb.originating_time() - ta
                                                      : ta - mb.originating_time();
        if (d > tolerance) continue;
        if (!best || d < best_dist) {  // strict: equidistant keeps the earlier
          best = &mb;
          best_dist = d;
        }
      }
      if (best) {
        out.emit(Joined<A, B>{st->pending.front(), *best}, ta);
      } else {
        c.count_drop(out.descriptor());
      }
      st->pending.pop_front();
    }
    const Timestamp horizon =
        st->pending.empty() ? c.input_watermark(st->a_in) : st->pending.front().originating_time();
    while (!st->candidates.empty() && st->candidates.front().originating_time() + tolerance < horizon)
      st->candidates.pop_front();
  });
  c.hold([st]() -> std::optional<Timestamp> {
    if (st->pending.empty()) return std::nullopt;
    return st->pending.front().originating_time();
  });
  return out.stream();
}

template <class T>
Stream<WindowContents<T>> Pipeline::window(const Stream<T>& in, WindowSpec spec, std::string name,
                                           SubscriptionOptions options) {
  spec.validate();
  if (name.empty()) name = in.descriptor().name + ".window";
  auto c = add_component("window:" + name);
  auto out = c.output<WindowContents<T>>(name, in.descriptor().kind);
  auto buf = std::make_shared<WindowBuffer<T>>(spec);
  const std::size_t idx = c.input(in, [buf](const Message<T>& m) { buf->push(m); }, options);
  c.on_progress([buf, c, out, idx]() {
    if (c.input_closed(idx)) return;  // flushed in on_close
    for (auto& w : buf->advance(c.input_watermark(idx))) {
      const Timestamp end = w.end;
      out.emit(std::move(w), end);
    }
  });
  c.on_close([buf, out]() {
    for (auto& w : buf->finish()) {
      const Timestamp end = w.end;
      out.emit(std::move(w), end);
    }
  });
  return out.stream();
}

}  // namespace affect
