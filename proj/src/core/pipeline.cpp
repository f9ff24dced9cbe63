#include "affect/core/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>

namespace affect {

std::string_view to_string(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::video_frame: return "video_frame";
    case PayloadKind::audio_buffer: return "audio_buffer";
    case PayloadKind::face_tracks: return "face_tracks";
    case PayloadKind::emotion_scores: return "emotion_scores";
    case PayloadKind::hr_estimate: return "hr_estimate";
    case PayloadKind::resp_estimate: return "resp_estimate";
    case PayloadKind::vad_flag: return "vad_flag";
    case PayloadKind::transcript: return "transcript";
    case PayloadKind::prosody: return "prosody";
    case PayloadKind::valence: return "valence";
    case PayloadKind::app_event: return "app_event";
    case PayloadKind::calendar_event: return "calendar_event";
    case PayloadKind::email_score: return "email_score";
    case PayloadKind::input_activity: return "input_activity";
    case PayloadKind::metrics_row: return "metrics_row";
  }
  return "unknown";
}

std::uint64_t StreamStats::delivered() const {
  std::uint64_t n = 0;
  for (const auto& s : subscriptions) n += s.delivered;
  return n;
}

std::uint64_t StreamStats::queue_dropped() const {
  std::uint64_t n = 0;
  for (const auto& s : subscriptions) n += s.dropped;
  return n;
}

const StreamStats* RunReport::find(std::string_view name) const {
  for (const auto& s : streams)
    if (s.name == name) return &s;
  return nullptr;
}

const StreamStats& RunReport::at(std::string_view name) const {
  if (const auto* s = find(name)) return *s;
  throw UnknownStream(std::string(name));
}

namespace detail {

struct Envelope {
  enum class Kind : std::uint8_t { message, punctuation, close };
  Kind kind;
  Timestamp time;
  std::shared_ptr<const void> payload;
};

struct Subscription {
  StreamState* stream = nullptr;
  Node* node = nullptr;
  SubscriptionOptions options;
  ErasedHandler handler;

  // Guarded by node->mu.
  std::deque<Envelope> queue;
  std::size_t queued_messages = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;

  // Owned by the node worker.
  Timestamp watermark = kTimeMin;
  bool closed = false;
};

struct StreamState {
  StreamState(StreamDescriptor d, std::type_index t, Node* p)
      : desc(std::move(d)), type(t), producer(p) {}

  StreamDescriptor desc;
  std::type_index type;
  Node* producer;
  std::vector<Subscription*> subscribers;

  std::mutex mu;
  Timestamp last_time = kTimeMin;
  Timestamp watermark = kTimeMin;
  bool closed = false;
  std::uint64_t emitted = 0;
  std::atomic<std::uint64_t> operator_dropped{0};
};

class Node {
public:
  std::string name;
  bool is_source = false;
  std::vector<std::unique_ptr<Subscription>> inputs;
  std::vector<StreamState*> outputs;

  std::function<void()> progress;
  std::function<void()> close_fn;
  std::function<std::optional<Timestamp>()> hold_fn;
  std::function<void(const SourceContext&)> body;

  std::mutex mu;
  std::condition_variable cv_data;
  std::condition_variable cv_space;
  bool discard = false;

  std::thread thread;
};

class PipelineCore {
public:
  enum class Phase { building, running, done };

  std::vector<std::unique_ptr<Node>> nodes;
  std::vector<std::unique_ptr<StreamState>> streams;
  std::atomic<Phase> phase{Phase::building};

  mutable std::mutex stop_mu;
  mutable std::condition_variable stop_cv;
  std::atomic<bool> stop{false};

  std::mutex failure_mu;
  std::optional<std::pair<std::string, std::string>> failure;

  void require_building() const {
    if (phase.load() != Phase::building)
      throw std::logic_error("pipeline graph cannot change after run()");
  }

  Node* add_node(std::string name, bool source) {
    require_building();
    auto n = std::make_unique<Node>();
    n->name = std::move(name);
    n->is_source = source;
    nodes.push_back(std::move(n));
    return nodes.back().get();
  }

  StreamState* add_stream(Node* producer, std::string name, PayloadKind kind, std::type_index type) {
    require_building();
    for (const auto& s : streams)
      if (s->desc.name == name) throw std::invalid_argument("duplicate stream name: " + name);
    StreamDescriptor d{streams.size(), std::move(name), kind};
    streams.push_back(std::make_unique<StreamState>(std::move(d), type, producer));
    producer->outputs.push_back(streams.back().get());
    return streams.back().get();
  }

  void request_stop() {
    {
      std::lock_guard lk(stop_mu);
      stop = true;
    }
    stop_cv.notify_all();
  }

  void record_failure(const std::string& node, const std::string& what) {
    {
      std::lock_guard lk(failure_mu);
      if (!failure) failure.emplace(node, what);
    }
    request_stop();
  }

  static void deliver(Subscription* sub, Envelope env) {
    Node* n = sub->node;
    std::unique_lock lk(n->mu);
    if (env.kind == Envelope::Kind::message) {
      if (n->discard) {
        ++sub->dropped;
        return;
      }
      if (sub->queued_messages >= sub->options.capacity) {
        if (sub->options.policy == DeliveryPolicy::block) {
          n->cv_space.wait(lk, [&] { return sub->queued_messages < sub->options.capacity || n->discard; });
          if (n->discard) {
            ++sub->dropped;
            return;
          }
        } else {
          auto it = std::find_if(sub->queue.begin(), sub->queue.end(),
                                 [](const Envelope& e) { return e.kind == Envelope::Kind::message; });
          sub->queue.erase(it);
          --sub->queued_messages;
          ++sub->dropped;
        }
      }
      ++sub->queued_messages;
      sub->queue.push_back(std::move(env));
    } else if (env.kind == Envelope::Kind::punctuation && !sub->queue.empty() &&
               sub->queue.back().kind == Envelope::Kind::punctuation) {
      sub->queue.back().time = env.time;
    } else {
      sub->queue.push_back(std::move(env));
    }
    n->cv_data.notify_one();
  }

  std::uint64_t emit(StreamState* s, std::shared_ptr<const void> p, Timestamp t) {
    std::lock_guard lk(s->mu);
    if (s->closed) throw std::logic_error("emit on closed stream: " + s->desc.name);
    if (t < s->last_time || t < s->watermark)
      throw NonMonotonicTimestamp("stream '" + s->desc.name + "': originating time " +
                                  std::to_string(to_micros(t)) + " precedes " +
                                  std::to_string(to_micros(std::max(s->last_time, s->watermark))));
    s->last_time = t;
    const std::uint64_t seq = s->emitted++;
    for (auto* sub : s->subscribers) deliver(sub, Envelope{Envelope::Kind::message, t, p});
    return seq;
  }

  void advance(StreamState* s, Timestamp t) {
    std::lock_guard lk(s->mu);
    if (s->closed || t <= s->last_time || t <= s->watermark) return;
    s->watermark = t;
    for (auto* sub : s->subscribers) deliver(sub, Envelope{Envelope::Kind::punctuation, t, nullptr});
  }

  void close(StreamState* s) {
    std::lock_guard lk(s->mu);
    if (s->closed) return;
    s->closed = true;
    for (auto* sub : s->subscribers) deliver(sub, Envelope{Envelope::Kind::close, kTimeMax, nullptr});
  }

  void propagate(Node& n) {
    Timestamp wm = kTimeMax;
    for (const auto& in : n.inputs) wm = std::min(wm, in->closed ? kTimeMax : in->watermark);
    if (n.hold_fn)
      if (auto h = n.hold_fn()) wm = std::min(wm, *h);
    if (wm == kTimeMax || wm == kTimeMin) return;
    for (auto* out : n.outputs) advance(out, wm);
  }

  void enter_discard(Node& n) {
    std::lock_guard lk(n.mu);
    n.discard = true;
    for (auto& in : n.inputs) {
      std::deque<Envelope> kept;
      for (auto& e : in->queue) {
        if (e.kind == Envelope::Kind::message)
          ++in->dropped;
        else
          kept.push_back(std::move(e));
      }
      in->queue = std::move(kept);
      in->queued_messages = 0;
    }
    n.cv_space.notify_all();
  }

  void run_component(Node& n) {
    std::size_t open = n.inputs.size();
    bool failed = false;
    while (open > 0) {
      Subscription* sub = nullptr;
      Envelope env;
      {
        std::unique_lock lk(n.mu);
        n.cv_data.wait(lk, [&] {
          return std::any_of(n.inputs.begin(), n.inputs.end(),
                             [](const auto& in) { return !in->queue.empty(); });
        });
        for (auto& in : n.inputs) {
          if (in->queue.empty()) continue;
          if (!sub || in->queue.front().time < sub->queue.front().time) sub = in.get();
        }
        env = std::move(sub->queue.front());
        sub->queue.pop_front();
        if (env.kind == Envelope::Kind::message) {
          --sub->queued_messages;
          if (failed)
            ++sub->dropped;
          else
            ++sub->delivered;
          n.cv_space.notify_all();
        }
      }
      switch (env.kind) {
        case Envelope::Kind::close:
          sub->closed = true;
          --open;
          break;
        case Envelope::Kind::punctuation:
          sub->watermark = std::max(sub->watermark, env.time);
          break;
        case Envelope::Kind::message:
          sub->watermark = env.time;
          break;
      }
      if (failed) continue;
      try {
        if (env.kind == Envelope::Kind::message) sub->handler(env.payload, env.time);
        if (n.progress) n.progress();
        propagate(n);
      } catch (const std::exception& e) {
        failed = true;
        record_failure(n.name, e.what());
        enter_discard(n);
      }
    }
    if (!failed && n.close_fn) {
      try {
        n.close_fn();
      } catch (const std::exception& e) {
        record_failure(n.name, e.what());
      }
    }
    for (auto* out : n.outputs) close(out);
  }

  void run_source(Node& n) {
    if (n.body) {
      try {
        n.body(SourceContext(this));
      } catch (const std::exception& e) {
        record_failure(n.name, e.what());
      }
    }
    for (auto* out : n.outputs) close(out);
  }

  void check_acyclic() const {
    // 0 = unvisited, 1 = on stack, 2 = done
    std::vector<int> color(nodes.size(), 0);
    auto index_of = [&](const Node* p) {
      for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].get() == p) return i;
      return nodes.size();
    };
    std::function<void(std::size_t)> visit = [&](std::size_t i) {
      color[i] = 1;
      for (auto* out : nodes[i]->outputs) {
        for (auto* sub : out->subscribers) {
          const std::size_t j = index_of(sub->node);
          if (color[j] == 1)
            throw CyclicGraph("cycle through '" + nodes[j]->name + "' via stream '" + out->desc.name + "'");
          if (color[j] == 0) visit(j);
        }
      }
      color[i] = 2;
    };
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (color[i] == 0) visit(i);
  }

  RunReport report() const {
    RunReport r;
    for (const auto& s : streams) {
      StreamStats st;
      st.name = s->desc.name;
      st.kind = s->desc.kind;
      st.emitted = s->emitted;
      st.dropped = s->operator_dropped.load();
      for (auto* sub : s->subscribers)
        st.subscriptions.push_back({sub->node->name, sub->delivered, sub->dropped});
      r.streams.push_back(std::move(st));
    }
    return r;
  }
};

const StreamDescriptor& descriptor_of(const StreamState* s) {
  if (!s) throw UnknownStream("<invalid stream handle>");
  return s->desc;
}

std::uint64_t emit(PipelineCore* core, StreamState* s, std::shared_ptr<const void> p, Timestamp t) {
  if (!core || !s) throw UnknownStream("<invalid emitter>");
  return core->emit(s, std::move(p), t);
}

void advance(PipelineCore* core, StreamState* s, Timestamp t) {
  if (!core || !s) throw UnknownStream("<invalid emitter>");
  core->advance(s, t);
}

}  // namespace detail

// --- Component ----------------------------------------------------------

detail::StreamState* Component::make_output(std::string name, PayloadKind kind, std::type_index type) {
  return core_->add_stream(node_, std::move(name), kind, type);
}

std::size_t Component::add_input(detail::StreamState* s, SubscriptionOptions options,
                                 detail::ErasedHandler h) {
  core_->require_building();
  if (options.capacity == 0) throw std::invalid_argument("subscription capacity must be positive");
  auto sub = std::make_unique<detail::Subscription>();
  sub->stream = s;
  sub->node = node_;
  sub->options = options;
  sub->handler = std::move(h);
  s->subscribers.push_back(sub.get());
  node_->inputs.push_back(std::move(sub));
  return node_->inputs.size() - 1;
}

void Component::check_type(detail::StreamState* s, std::type_index type) {
  if (!s) throw UnknownStream("<invalid stream handle>");
  if (s->type != type)
    throw std::invalid_argument("payload type mismatch on stream '" + s->desc.name + "'");
}

void Component::on_progress(std::function<void()> fn) { node_->progress = std::move(fn); }
void Component::on_close(std::function<void()> fn) { node_->close_fn = std::move(fn); }
void Component::hold(std::function<std::optional<Timestamp>()> fn) { node_->hold_fn = std::move(fn); }

Timestamp Component::input_watermark(std::size_t input) const {
  const auto& in = node_->inputs.at(input);
  return in->closed ? kTimeMax : in->watermark;
}

bool Component::input_closed(std::size_t input) const { return node_->inputs.at(input)->closed; }

void Component::count_drop(const StreamDescriptor& output, std::uint64_t n) {
  for (auto* out : node_->outputs) {
    if (out->desc.id == output.id) {
      out->operator_dropped += n;
      return;
    }
  }
  throw UnknownStream(output.name);
}

const std::string& Component::name() const { return node_->name; }

// --- Source / SourceContext ------------------------------------------------

detail::StreamState* Source::make_output(std::string name, PayloadKind kind, std::type_index type) {
  return core_->add_stream(node_, std::move(name), kind, type);
}

void Source::body(std::function<void(const SourceContext&)> fn) {
  core_->require_building();
  node_->body = std::move(fn);
}

const std::string& Source::name() const { return node_->name; }

bool SourceContext::stop_requested() const { return core_->stop.load(); }

bool SourceContext::sleep_until(std::chrono::steady_clock::time_point deadline) const {
  std::unique_lock lk(core_->stop_mu);
  return !core_->stop_cv.wait_until(lk, deadline, [this] { return core_->stop.load(); });
}

// --- Pipeline ------------------------------------------------------------

Pipeline::Pipeline() : core_(std::make_unique<detail::PipelineCore>()) {}

Pipeline::~Pipeline() {
  core_->request_stop();
  for (auto& n : core_->nodes)
    if (n->thread.joinable()) n->thread.join();
}

Source Pipeline::add_source(std::string name) { return Source(core_.get(), core_->add_node(std::move(name), true)); }

Component Pipeline::add_component(std::string name) {
  return Component(core_.get(), core_->add_node(std::move(name), false));
}

std::optional<StreamDescriptor> Pipeline::find_stream(std::string_view name) const {
  if (auto* s = find_state(name)) return s->desc;
  return std::nullopt;
}

detail::StreamState* Pipeline::find_state(std::string_view name) const {
  for (const auto& s : core_->streams)
    if (s->desc.name == name) return s.get();
  return nullptr;
}

detail::StreamState* Pipeline::state_by_id(std::size_t id) const {
  return id < core_->streams.size() ? core_->streams[id].get() : nullptr;
}

std::uint64_t Pipeline::emit_erased(detail::StreamState* s, std::shared_ptr<const void> p, Timestamp t) {
  return core_->emit(s, std::move(p), t);
}

RunReport Pipeline::run() {
  core_->require_building();
  core_->check_acyclic();
  core_->phase = detail::PipelineCore::Phase::running;

  for (auto& n : core_->nodes) {
    detail::Node* node = n.get();
    if (node->is_source)
      node->thread = std::thread([this, node] { core_->run_source(*node); });
    else
      node->thread = std::thread([this, node] { core_->run_component(*node); });
  }
  for (auto& n : core_->nodes) n->thread.join();
  core_->phase = detail::PipelineCore::Phase::done;

  RunReport report = core_->report();
  if (core_->failure) throw ComponentFailure(core_->failure->first, core_->failure->second, std::move(report));
  return report;
}

void Pipeline::request_stop() { core_->request_stop(); }

bool Pipeline::running() const { return core_->phase.load() == detail::PipelineCore::Phase::running; }

}  // namespace affect
