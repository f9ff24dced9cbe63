#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "affect/audio/types.hpp"
#include "affect/context/replay.hpp"
#include "affect/core/pipeline.hpp"
#include "affect/vision/types.hpp"

namespace affect::app {

/// A session trace is NDJSON, one record per line, in non-decreasing t:
///   {"t":<us>,"kind":"video","width":W,"height":H,"rgb_b64":"<W*H*3 bytes>"}
///   {"t":<us>,"kind":"audio","sample_rate":16000,"pcm_b64":"<int16 LE>"}
///   any context event-log line (kind app|calendar|email|key|mouse)
/// The same lines feed live ingestion over TCP.
using TracePayload = std::variant<vision::VideoFrame, audio::AudioBuffer, context::AppEvent, context::CalendarEvent,
                                  context::EmailSendEvent, context::RawInputEvent>;

struct TraceRecord {
  Timestamp time{};
  TracePayload payload;
};

/// Throws ParseError (no line prefix) on a malformed record.
TraceRecord parse_trace_record(std::string_view line, const context::EventLogOptions& options = {});
std::string trace_line(Timestamp t, const vision::VideoFrame& frame);
std::string trace_line(Timestamp t, const audio::AudioBuffer& buffer);

/// Pull interface over a record sequence. next() returns nullopt at the end
/// or once the source context asks to stop.
class TraceReader {
public:
  virtual ~TraceReader() = default;
  virtual std::optional<TraceRecord> next(const SourceContext& ctx) = 0;
};

/// Reads a trace file lazily. ParseError and NonMonotonicTimestamp name the
/// line.
class TraceFileReader final : public TraceReader {
public:
  TraceFileReader(const std::filesystem::path& path, context::EventLogOptions options = {});
  std::optional<TraceRecord> next(const SourceContext& ctx) override;

private:
  std::ifstream in_;
  std::string name_;
  context::EventLogOptions options_;
  std::size_t line_ = 0;
  std::optional<Timestamp> last_;
};

/// Listens on host:port at construction and serves one producer connection
/// that streams trace lines. The session ends when the producer hangs up.
class TraceIngestServer final : public TraceReader {
public:
  TraceIngestServer(const std::string& host, std::uint16_t port, context::EventLogOptions options = {});
  ~TraceIngestServer() override;
  TraceIngestServer(const TraceIngestServer&) = delete;
  TraceIngestServer& operator=(const TraceIngestServer&) = delete;

  std::uint16_t port() const { return port_; }
  std::optional<TraceRecord> next(const SourceContext& ctx) override;

private:
  bool fill(const SourceContext& ctx);

  int listen_fd_ = -1;
  int conn_fd_ = -1;
  std::uint16_t port_ = 0;
  std::string buffer_;
  bool eof_ = false;
  context::EventLogOptions options_;
  std::optional<Timestamp> last_;
};

struct TraceStreams {
  Stream<vision::VideoFrame> frames;  // "video.frames"
  Stream<audio::AudioBuffer> audio;   // "audio.buffers"
  context::ContextStreams context;
};

struct TraceSourceOptions {
  /// Wall-clock pacing multiplier; <= 0 emits as fast as possible.
  double speed = 0.0;
};

/// Source "trace" emitting each record at its recorded time and advancing
/// every output after each record.
TraceStreams add_trace_source(Pipeline& pipeline, std::shared_ptr<TraceReader> reader, TraceSourceOptions options = {});

}  // namespace affect::app
