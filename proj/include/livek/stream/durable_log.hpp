#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "livek/stream/record.hpp"

namespace livek {

class LogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Points inside append() where a simulated crash (std::_Exit) can be
// injected. Used by the crash-safety harness only.
enum class CrashPhase {
  before_write,   // nothing written
  torn_frame,     // half a frame written
  after_write,    // full frame written, not synced
  after_sync,     // frame durable, index not updated, not acknowledged
  after_index,    // everything written, not acknowledged
};

inline constexpr int kInjectedCrashExitCode = 86;

struct LogOptions {
  std::uint64_t segment_bytes = 64ull << 20;
  bool sync_on_append = true;
  struct Fault {
    std::uint64_t at_offset = 0;
    CrashPhase phase = CrashPhase::before_write;
  };
  std::optional<Fault> fault;
};

struct RecoveryReport {
  std::uint64_t truncated_bytes = 0;
  std::uint64_t truncated_records = 0;  // torn or unindexed frames dropped
  std::uint64_t segments = 0;
};

class DurableLog;

// Sequential reader over a log. By default it stops at the end offset
// observed when it was created; a following reader sees later appends.
class LogReader {
 public:
  std::optional<std::string> next_bytes();
  std::optional<JsonRecord> next();
  std::uint64_t position() const { return next_; }

 private:
  friend class DurableLog;
  LogReader(const DurableLog* log, std::uint64_t from,
            std::optional<std::uint64_t> end)
      : log_(log), next_(from), end_(end) {}

  const DurableLog* log_;
  std::uint64_t next_;
  std::optional<std::uint64_t> end_;
};

// Single-node segmented append-only log. Each segment is a pair of files:
// `<base>.log` holding frames [magic u32][length u32][crc32 u32][body] and
// `<base>.idx` holding one u64 file position per record. An append is
// acknowledged (offset returned) only after the frame is on disk.
// Reopening truncates a torn tail back to the last valid frame.
class DurableLog {
 public:
  explicit DurableLog(std::filesystem::path dir, LogOptions options = {});
  ~DurableLog();
  DurableLog(const DurableLog&) = delete;
  DurableLog& operator=(const DurableLog&) = delete;

  std::uint64_t append(std::string_view body);
  std::uint64_t append(const JsonRecord& record) {
    return append(encode_record(record));
  }

  std::uint64_t next_offset() const;
  std::optional<std::string> read(std::uint64_t offset) const;

  // Records offset..next_offset()-1 as of this call. Offsets past the end
  // give an empty reader.
  LogReader replay_from(std::uint64_t offset) const;
  LogReader follow_from(std::uint64_t offset) const;

  const RecoveryReport& recovery() const { return recovery_; }
  const std::filesystem::path& path() const { return dir_; }

 private:
  struct Segment {
    std::uint64_t base = 0;
    int fd = -1;
    int idx_fd = -1;
    std::uint64_t size = 0;
    std::vector<std::uint64_t> positions;
  };

  void recover();
  void scan_segment(Segment& seg, bool is_last);
  Segment open_segment(std::uint64_t base, bool create);
  void roll();
  void maybe_crash(std::uint64_t offset, CrashPhase phase) const;

  std::filesystem::path dir_;
  LogOptions options_;
  RecoveryReport recovery_;
  mutable std::shared_mutex mutex_;
  std::vector<Segment> segments_;
  std::uint64_t next_offset_ = 0;
};

}  // namespace livek
