#include "affect/sinks/store.hpp"

#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <unistd.h>

namespace affect::sinks {

namespace {

std::string checked_line(const MetricsRow& row, std::optional<Timestamp>& last) {
  if (last && row.window_start <= *last)
    throw NonMonotonicTimestamp("row window_start " + std::to_string(to_micros(row.window_start)) +
                                " does not follow " + std::to_string(to_micros(*last)));
  std::string line = sanitize(to_json(row), SanitizeMode::strict).dump();
  last = row.window_start;
  return line;
}

[[noreturn]] void io_failure(const std::filesystem::path& path, int err) {
  if (err == ENOSPC || err == EDQUOT) throw StorageFull(path.string() + ": " + std::strerror(err));
  throw std::system_error(err, std::generic_category(), path.string());
}

}  // namespace

NdjsonRowStore::NdjsonRowStore(std::filesystem::path path, NdjsonStoreOptions options)
    : path_(std::move(path)), options_(options) {
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0600);
  if (fd_ < 0) io_failure(path_, errno);
  std::error_code ec;
  size_ = std::filesystem::file_size(path_, ec);
}

NdjsonRowStore::~NdjsonRowStore() {
  if (fd_ >= 0) {
    ::fsync(fd_);
    ::close(fd_);
  }
}

void NdjsonRowStore::append(const MetricsRow& row) {
  auto probe = last_;
  std::string line = checked_line(row, probe);
  line += '\n';
  if (options_.max_bytes && size_ + line.size() > *options_.max_bytes)
    throw StorageFull(path_.string() + ": quota of " + std::to_string(*options_.max_bytes) + " bytes reached");
  // a single write keeps every line whole; partial writes are retried
  std::size_t done = 0;
  while (done < line.size()) {
    const ssize_t n = ::write(fd_, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_failure(path_, errno);
    }
    done += std::size_t(n);
  }
  size_ += line.size();
  last_ = probe;
  ++rows_;
  if (options_.sync_every_row) flush();
}

void NdjsonRowStore::flush() {
  if (::fsync(fd_) != 0) io_failure(path_, errno);
}

void HttpRowStore::append(const MetricsRow& row) {
  auto probe = last_;
  const std::string line = checked_line(row, probe);
  nlohmann::json body;
  body["row"] = nlohmann::json::parse(line);
  post_json(endpoint_, body);
  last_ = probe;
}

std::vector<MetricsRow> read_session_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read session log " + path.string());
  std::vector<MetricsRow> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    try {
      rows.push_back(row_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ParseError("line " + std::to_string(number) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace affect::sinks
