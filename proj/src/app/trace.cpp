#include "affect/app/trace.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "affect/audio/providers.hpp"
#include "affect/core/base64.hpp"

namespace affect::app {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxLine = 64u << 20;

template <class T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("field '") + key + "' has the wrong type");
  }
}

TracePayload from_context(context::ContextEvent ev) {
  return std::visit([](auto&& p) -> TracePayload { return std::move(p); }, std::move(ev.payload));
}

}  // namespace

TraceRecord parse_trace_record(std::string_view line, const context::EventLogOptions& options) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
  if (!j.is_object()) throw ParseError("expected a JSON object");
  const auto kind = required<std::string>(j, "kind");
  TraceRecord r;
  if (kind == "video") {
    r.time = from_micros(required<std::int64_t>(j, "t"));
    const int w = required<int>(j, "width"), h = required<int>(j, "height");
    if (w <= 0 || h <= 0 || w > 8192 || h > 8192) throw ParseError("frame size out of range");
    vision::VideoFrame frame(w, h);
    auto bytes = base64_decode(required<std::string>(j, "rgb_b64"));
    if (bytes.size() != frame.pixels.size())
      throw ParseError("frame has " + std::to_string(bytes.size()) + " bytes, expected " + std::to_string(frame.pixels.size()));
    frame.pixels = std::move(bytes);
    r.payload = std::move(frame);
  } else if (kind == "audio") {
    r.time = from_micros(required<std::int64_t>(j, "t"));
    audio::AudioBuffer buffer;
    buffer.sample_rate = required<int>(j, "sample_rate");
    const auto bytes = base64_decode(required<std::string>(j, "pcm_b64"));
    if (bytes.size() % 2) throw ParseError("odd PCM byte count");
    buffer.samples = audio::from_pcm16le(bytes);
    r.payload = std::move(buffer);
  } else {
    auto ev = context::parse_event(j, options);
    r.time = ev.time;
    r.payload = from_context(std::move(ev));
  }
  return r;
}

std::string trace_line(Timestamp t, const vision::VideoFrame& frame) {
  json j;
  j["t"] = to_micros(t);
  j["kind"] = "video";
  j["width"] = frame.width;
  j["height"] = frame.height;
  j["rgb_b64"] = base64_encode(frame.pixels);
  return j.dump();
}

std::string trace_line(Timestamp t, const audio::AudioBuffer& buffer) {
  json j;
  j["t"] = to_micros(t);
  j["kind"] = "audio";
  j["sample_rate"] = buffer.sample_rate;
  j["pcm_b64"] = base64_encode(audio::to_pcm16le(buffer.samples));
  return j.dump();
}

// --- file ----------------------------------------------------------------------

TraceFileReader::TraceFileReader(const std::filesystem::path& path, context::EventLogOptions options)
    : in_(path), name_(path.string()), options_(std::move(options)) {
  if (!in_) throw ParseError("cannot read trace " + name_);
}

std::optional<TraceRecord> TraceFileReader::next(const SourceContext& ctx) {
  std::string line;
  while (!ctx.stop_requested() && std::getline(in_, line)) {
    ++line_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = name_ + " line " + std::to_string(line_) + ": ";
    TraceRecord r;
    try {
      r = parse_trace_record(line, options_);
    } catch (const ParseError& e) {
      throw ParseError(where + e.what());
    }
    if (last_ && r.time < *last_)
      throw NonMonotonicTimestamp(where + "t=" + std::to_string(to_micros(r.time)) + " precedes " +
                                  std::to_string(to_micros(*last_)));
    last_ = r.time;
    return r;
  }
  return std::nullopt;
}

// --- network ingestion -----------------------------------------------------------

TraceIngestServer::TraceIngestServer(const std::string& host, std::uint16_t port, context::EventLogOptions options)
    : options_(std::move(options)) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw ProviderUnavailable("bad ingest address " + host);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (listen_fd_ < 0 || ::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, 1) != 0) {
    const std::string why = std::strerror(errno);
    if (listen_fd_ >= 0) ::close(listen_fd_);
    throw ProviderUnavailable("cannot listen on " + host + ":" + std::to_string(port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TraceIngestServer::~TraceIngestServer() {
  if (conn_fd_ >= 0) ::close(conn_fd_);
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

// Waits for bytes in short slices so a stop request is noticed promptly.
bool TraceIngestServer::fill(const SourceContext& ctx) {
  while (!ctx.stop_requested()) {
    const int fd = conn_fd_ >= 0 ? conn_fd_ : listen_fd_;
    pollfd p{fd, POLLIN, 0};
    const int ready = ::poll(&p, 1, 100);
    if (ready < 0 && errno != EINTR) return false;
    if (ready <= 0) continue;
    if (conn_fd_ < 0) {
      conn_fd_ = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
      continue;
    }
    char chunk[65536];
    const ssize_t n = ::recv(conn_fd_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    buffer_.append(chunk, std::size_t(n));
    return true;
  }
  return false;
}

std::optional<TraceRecord> TraceIngestServer::next(const SourceContext& ctx) {
  while (!eof_) {
    const auto nl = buffer_.find('\n');
    if (nl == std::string::npos) {
      if (buffer_.size() > kMaxLine) throw ParseError("ingest line exceeds 64 MiB");
      if (!fill(ctx)) {
        if (buffer_.empty() || ctx.stop_requested()) eof_ = true;
        else buffer_ += '\n';  // final line without a terminator
      }
      continue;
    }
    const std::string line = buffer_.substr(0, nl);
    buffer_.erase(0, nl + 1);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto r = parse_trace_record(line, options_);
    if (last_ && r.time < *last_)
      throw NonMonotonicTimestamp("ingest t=" + std::to_string(to_micros(r.time)) + " precedes " +
                                  std::to_string(to_micros(*last_)));
    last_ = r.time;
    return r;
  }
  return std::nullopt;
}

// --- source --------------------------------------------------------------------

TraceStreams add_trace_source(Pipeline& pipeline, std::shared_ptr<TraceReader> reader, TraceSourceOptions options) {
  auto src = pipeline.add_source("trace");
  auto frames = src.output<vision::VideoFrame>("video.frames", PayloadKind::video_frame);
  auto audio = src.output<audio::AudioBuffer>("audio.buffers", PayloadKind::audio_buffer);
  auto apps = src.output<context::AppEvent>("context.app", PayloadKind::app_event);
  auto calendar = src.output<context::CalendarEvent>("context.calendar", PayloadKind::calendar_event);
  auto email = src.output<context::EmailSendEvent>("context.email", PayloadKind::email_score);
  auto raw = src.output<context::RawInputEvent>("context.raw_input", PayloadKind::input_activity);
  const double speed = options.speed;
  src.body([=](const SourceContext& ctx) {
    const auto wall_start = std::chrono::steady_clock::now();
    std::optional<Timestamp> first;
    while (auto rec = reader->next(ctx)) {
      const Timestamp t = rec->time;
      if (!first) first = t;
      if (speed > 0.0) {
        const auto offset = std::chrono::duration<double, std::micro>(double(to_micros(t - *first)) / speed);
        if (!ctx.sleep_until(wall_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(offset))) return;
      }
      std::visit(
          [&](auto&& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, vision::VideoFrame>) frames.emit(std::move(p), t);
            else if constexpr (std::is_same_v<P, audio::AudioBuffer>) audio.emit(std::move(p), t);
            else if constexpr (std::is_same_v<P, context::AppEvent>) apps.emit(std::move(p), t);
            else if constexpr (std::is_same_v<P, context::CalendarEvent>) calendar.emit(std::move(p), t);
            else if constexpr (std::is_same_v<P, context::EmailSendEvent>) email.emit(std::move(p), t);
            else raw.emit(std::move(p), t);
          },
          std::move(rec->payload));
      frames.advance(t);
      audio.advance(t);
      apps.advance(t);
      calendar.advance(t);
      email.advance(t);
      raw.advance(t);
    }
  });
  return {frames.stream(), audio.stream(), {apps.stream(), calendar.stream(), email.stream(), raw.stream()}};
}

}  // namespace affect::app
