#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>

#include "affect/app/config.hpp"
#include "affect/core/pipeline.hpp"
#include "affect/sinks/bus.hpp"

namespace affect::app {

AFFECT_DEFINE_ERROR(ConsentRequired, "consent_required");
AFFECT_DEFINE_ERROR(SessionLogExists, "session_log_exists");

/// Live capture gate. Replay needs no consent. For live capture, consent
/// comes from the flag, the config field, or an earlier acknowledgment in
/// the consent record. Given consent, the record is written (or kept);
/// without it, a pending record is written and ConsentRequired is thrown.
void check_consent(const PipelineConfig& config, bool consent_flag);

struct SessionOptions {
  bool consent = false;
  /// Receives render_metrics for every row (--print-metrics).
  std::ostream* metrics_out = nullptr;
};

struct SessionResult {
  RunReport report;
  std::uint64_t rows = 0;
  bool stopped = false;  // ended by request_stop rather than end of input
};

/// One daemon run: builds the pipeline from the config, opens the sources,
/// the row store and the bus, then runs until the input ends or a stop is
/// requested. Every row reaches the store before run() returns.
class Session {
public:
  Session(PipelineConfig config, SessionOptions options = {});
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  /// Bound ports, known once constructed (useful with port 0).
  std::optional<std::uint16_t> bus_port() const;
  std::optional<std::uint16_t> ingest_port() const;
  const sinks::BusServer* bus() const { return bus_.get(); }

  /// Throws ComponentFailure when a component fails.
  SessionResult run();
  /// Safe from any thread.
  void request_stop();

private:
  PipelineConfig config_;
  SessionOptions options_;
  std::unique_ptr<Pipeline> pipeline_;
  std::shared_ptr<sinks::BusServer> bus_;
  std::optional<std::uint16_t> ingest_port_;
  std::shared_ptr<std::uint64_t> rows_;
  std::atomic<bool> stop_requested_{false};
};

}  // namespace affect::app
