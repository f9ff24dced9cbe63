#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "affect/core/http_json.hpp"
#include "affect/sinks/metrics.hpp"

namespace affect::sinks {

AFFECT_DEFINE_ERROR(StorageFull, "storage_full");

class RowStore {
public:
  virtual ~RowStore() = default;
  /// Sanitizes (strict) and appends; rows must have strictly increasing
  /// window_start (NonMonotonicTimestamp otherwise).
  virtual void append(const MetricsRow& row) = 0;
  /// Makes every appended row durable.
  virtual void flush() = 0;
};

struct NdjsonStoreOptions {
  /// Refuse rows that would grow the file past this size.
  std::optional<std::uintmax_t> max_bytes;
  /// fsync after every row instead of only on flush.
  bool sync_every_row = false;
};

/// Append-only session log, one JSON row per line.
class NdjsonRowStore final : public RowStore {
public:
  explicit NdjsonRowStore(std::filesystem::path path, NdjsonStoreOptions options = {});
  ~NdjsonRowStore() override;
  NdjsonRowStore(const NdjsonRowStore&) = delete;
  NdjsonRowStore& operator=(const NdjsonRowStore&) = delete;

  void append(const MetricsRow& row) override;
  void flush() override;
  std::uint64_t rows() const { return rows_; }

private:
  std::filesystem::path path_;
  NdjsonStoreOptions options_;
  int fd_ = -1;
  std::uintmax_t size_ = 0;
  std::uint64_t rows_ = 0;
  std::optional<Timestamp> last_;
};

/// POSTs {"row": {...}} per row to a remote collector.
class HttpRowStore final : public RowStore {
public:
  explicit HttpRowStore(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  void append(const MetricsRow& row) override;
  void flush() override {}

private:
  HttpEndpoint endpoint_;
  std::optional<Timestamp> last_;
};

/// Reads a session log back; throws ParseError naming the line.
std::vector<MetricsRow> read_session_log(const std::filesystem::path& path);

}  // namespace affect::sinks
