#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "livek/ingest/post.hpp"
#include "livek/stream/clock.hpp"
#include "livek/stream/record.hpp"

namespace livek {

class ArchiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Replay pacing: `max` emits as fast as the consumer accepts; otherwise
// gaps in created_at are slept through scaled down by `multiplier`.
struct ReplaySpeed {
  bool max = true;
  double multiplier = 1.0;

  static ReplaySpeed parse(std::string_view text);  // "max" or a positive number
  std::string to_string() const;
};

struct ReplayStats {
  std::uint64_t lines = 0;
  std::uint64_t emitted = 0;
  std::uint64_t rejected = 0;
  std::map<Rejection, std::uint64_t> by_reason;
};

using PostRecord = StreamRecord<Post>;

// Streams an archive file in file order. Parse rejections are counted and
// skipped. Offsets count emitted records from 0.
class ArchiveReplay {
 public:
  using Sleeper = std::function<void(std::chrono::duration<double>)>;

  // Throws ArchiveError when the file cannot be opened.
  ArchiveReplay(const std::filesystem::path& path, ReplaySpeed speed = {},
                std::shared_ptr<const Clock> clock = nullptr,
                Sleeper sleeper = nullptr);

  std::optional<PostRecord> next();
  const ReplayStats& stats() const { return stats_; }

  // Replay stops (as if exhausted) once a post is newer than `t`.
  void stop_after(TimePoint t) { until_ = t; }

 private:
  std::ifstream in_;
  ReplaySpeed speed_;
  std::shared_ptr<const Clock> clock_;
  Sleeper sleeper_;
  ReplayStats stats_;
  std::optional<TimePoint> last_event_;
  std::optional<TimePoint> until_;
  std::string line_;
  bool done_ = false;
};

}  // namespace livek
