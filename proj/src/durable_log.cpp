#include "livek/stream/durable_log.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace livek {
namespace {

constexpr std::uint32_t kMagic = 0x4C4B5231;  // "LKR1"
constexpr std::size_t kHeaderBytes = 12;
constexpr std::uint32_t kMaxFrameBody = 256u << 20;

std::uint32_t checksum(std::string_view body) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
            static_cast<uInt>(body.size())));
}

std::string errno_text(const std::string& what) {
  return what + ": " + std::strerror(errno);
}

void write_all(int fd, const char* data, std::size_t n) {
  while (n > 0) {
    ssize_t w = ::write(fd, data, n);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw LogError(errno_text("write"));
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

bool pread_all(int fd, char* data, std::size_t n, std::uint64_t pos) {
  while (n > 0) {
    ssize_t r = ::pread(fd, data, n, static_cast<off_t>(pos));
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    if (r == 0) return false;
    data += r;
    n -= static_cast<std::size_t>(r);
    pos += static_cast<std::uint64_t>(r);
  }
  return true;
}

std::string segment_name(std::uint64_t base, const char* ext) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%020llu.%s",
                static_cast<unsigned long long>(base), ext);
  return buf;
}

void sync_dir(const std::filesystem::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

std::uint64_t file_size(int fd) {
  struct stat st {};
  if (::fstat(fd, &st) != 0) throw LogError(errno_text("fstat"));
  return static_cast<std::uint64_t>(st.st_size);
}

}  // namespace

// ---------------------------------------------------------------- reader

std::optional<std::string> LogReader::next_bytes() {
  auto end = end_ ? *end_ : log_->next_offset();
  if (next_ >= end) return std::nullopt;
  auto body = log_->read(next_);
  if (!body) return std::nullopt;
  ++next_;
  return body;
}

std::optional<JsonRecord> LogReader::next() {
  auto offset = next_;
  auto body = next_bytes();
  if (!body) return std::nullopt;
  return decode_record(*body, offset);
}

// ------------------------------------------------------------------- log

DurableLog::DurableLog(std::filesystem::path dir, LogOptions options)
    : dir_(std::move(dir)), options_(options) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw LogError("cannot create log directory " + dir_.string());
  recover();
}

DurableLog::~DurableLog() {
  for (auto& s : segments_) {
    if (s.fd >= 0) ::close(s.fd);
    if (s.idx_fd >= 0) ::close(s.idx_fd);
  }
}

DurableLog::Segment DurableLog::open_segment(std::uint64_t base, bool create) {
  Segment seg;
  seg.base = base;
  int flags = O_RDWR | O_APPEND | O_CLOEXEC | (create ? O_CREAT : 0);
  auto log_path = dir_ / segment_name(base, "log");
  auto idx_path = dir_ / segment_name(base, "idx");
  seg.fd = ::open(log_path.c_str(), flags, 0644);
  if (seg.fd < 0) throw LogError(errno_text("open " + log_path.string()));
  seg.idx_fd = ::open(idx_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (seg.idx_fd < 0) throw LogError(errno_text("open " + idx_path.string()));
  seg.size = file_size(seg.fd);
  return seg;
}

void DurableLog::scan_segment(Segment& seg, bool is_last) {
  std::string data(seg.size, '\0');
  if (seg.size > 0 && !pread_all(seg.fd, data.data(), data.size(), 0))
    throw LogError("cannot read segment " + std::to_string(seg.base));

  std::uint64_t pos = 0;
  seg.positions.clear();
  while (pos + kHeaderBytes <= data.size()) {
    std::uint32_t magic, len, crc;
    std::memcpy(&magic, data.data() + pos, 4);
    std::memcpy(&len, data.data() + pos + 4, 4);
    std::memcpy(&crc, data.data() + pos + 8, 4);
    if (magic != kMagic || len > kMaxFrameBody ||
        pos + kHeaderBytes + len > data.size())
      break;
    std::string_view body(data.data() + pos + kHeaderBytes, len);
    if (checksum(body) != crc) break;
    seg.positions.push_back(pos);
    pos += kHeaderBytes + len;
  }

  std::uint64_t indexed = file_size(seg.idx_fd) / sizeof(std::uint64_t);
  if (pos != data.size()) {
    if (!is_last)
      throw LogError("corrupt sealed segment " + std::to_string(seg.base));
    recovery_.truncated_bytes += data.size() - pos;
    std::uint64_t dropped =
        indexed > seg.positions.size() ? indexed - seg.positions.size() : 0;
    recovery_.truncated_records += std::max<std::uint64_t>(dropped, 1);
    if (::ftruncate(seg.fd, static_cast<off_t>(pos)) != 0)
      throw LogError(errno_text("ftruncate"));
    ::fdatasync(seg.fd);
    seg.size = pos;
  }

  // The index is derived data; rewrite it whenever it disagrees.
  bool index_ok = indexed == seg.positions.size();
  if (index_ok && !seg.positions.empty()) {
    std::vector<std::uint64_t> on_disk(indexed);
    index_ok = pread_all(seg.idx_fd, reinterpret_cast<char*>(on_disk.data()),
                         indexed * sizeof(std::uint64_t), 0) &&
               on_disk == seg.positions;
  }
  if (!index_ok) {
    if (::ftruncate(seg.idx_fd, 0) != 0) throw LogError(errno_text("ftruncate"));
    if (!seg.positions.empty()) {
      ssize_t want = static_cast<ssize_t>(seg.positions.size() * sizeof(std::uint64_t));
      if (::pwrite(seg.idx_fd, seg.positions.data(), static_cast<std::size_t>(want), 0) != want)
        throw LogError(errno_text("index rewrite"));
    }
    ::fdatasync(seg.idx_fd);
  }
  // Keep later appends from landing after a stale index tail.
  ::lseek(seg.idx_fd, 0, SEEK_END);
}

void DurableLog::recover() {
  std::vector<std::uint64_t> bases;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    auto name = entry.path().filename().string();
    if (name.size() == 24 && name.ends_with(".log"))
      bases.push_back(std::stoull(name.substr(0, 20)));
  }
  std::sort(bases.begin(), bases.end());
  if (bases.empty()) {
    segments_.push_back(open_segment(0, true));
    sync_dir(dir_);
  } else {
    for (auto b : bases) segments_.push_back(open_segment(b, false));
  }
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    auto& seg = segments_[i];
    if (i > 0 && seg.base != segments_[i - 1].base + segments_[i - 1].positions.size())
      throw LogError("segment offsets are not contiguous at " +
                     std::to_string(seg.base));
    scan_segment(seg, i + 1 == segments_.size());
  }
  const auto& last = segments_.back();
  next_offset_ = last.base + last.positions.size();
  recovery_.segments = segments_.size();
}

void DurableLog::roll() {
  segments_.push_back(open_segment(next_offset_, true));
  sync_dir(dir_);
}

void DurableLog::maybe_crash(std::uint64_t offset, CrashPhase phase) const {
  if (options_.fault && options_.fault->at_offset == offset &&
      options_.fault->phase == phase)
    std::_Exit(kInjectedCrashExitCode);
}

std::uint64_t DurableLog::append(std::string_view body) {
  if (body.size() > kMaxFrameBody) throw LogError("record too large");
  std::unique_lock lock(mutex_);
  auto& seg = segments_.back();
  const std::uint64_t offset = next_offset_;
  maybe_crash(offset, CrashPhase::before_write);

  std::string frame(kHeaderBytes + body.size(), '\0');
  std::uint32_t magic = kMagic;
  auto len = static_cast<std::uint32_t>(body.size());
  std::uint32_t crc = checksum(body);
  std::memcpy(frame.data(), &magic, 4);
  std::memcpy(frame.data() + 4, &len, 4);
  std::memcpy(frame.data() + 8, &crc, 4);
  std::memcpy(frame.data() + kHeaderBytes, body.data(), body.size());

  if (options_.fault && options_.fault->at_offset == offset &&
      options_.fault->phase == CrashPhase::torn_frame) {
    write_all(seg.fd, frame.data(), frame.size() / 2);
    std::_Exit(kInjectedCrashExitCode);
  }

  const std::uint64_t position = seg.size;
  try {
    write_all(seg.fd, frame.data(), frame.size());
    maybe_crash(offset, CrashPhase::after_write);
    if (options_.sync_on_append && ::fdatasync(seg.fd) != 0)
      throw LogError(errno_text("fdatasync"));
  } catch (...) {
    // No partial record may stay visible.
    if (::ftruncate(seg.fd, static_cast<off_t>(position)) != 0) {
    }
    throw;
  }
  maybe_crash(offset, CrashPhase::after_sync);
  write_all(seg.idx_fd, reinterpret_cast<const char*>(&position),
            sizeof position);
  maybe_crash(offset, CrashPhase::after_index);

  seg.positions.push_back(position);
  seg.size = position + frame.size();
  ++next_offset_;
  if (seg.size >= options_.segment_bytes) roll();
  return offset;
}

std::uint64_t DurableLog::next_offset() const {
  std::shared_lock lock(mutex_);
  return next_offset_;
}

std::optional<std::string> DurableLog::read(std::uint64_t offset) const {
  std::shared_lock lock(mutex_);
  if (offset >= next_offset_) return std::nullopt;
  auto it = std::upper_bound(
      segments_.begin(), segments_.end(), offset,
      [](std::uint64_t o, const Segment& s) { return o < s.base; });
  const auto& seg = *std::prev(it);
  auto pos = seg.positions.at(offset - seg.base);
  char header[kHeaderBytes];
  if (!pread_all(seg.fd, header, kHeaderBytes, pos))
    throw LogError("short read at offset " + std::to_string(offset));
  std::uint32_t magic, len, crc;
  std::memcpy(&magic, header, 4);
  std::memcpy(&len, header + 4, 4);
  std::memcpy(&crc, header + 8, 4);
  if (magic != kMagic) throw LogError("bad frame at offset " + std::to_string(offset));
  std::string body(len, '\0');
  if (len > 0 && !pread_all(seg.fd, body.data(), len, pos + kHeaderBytes))
    throw LogError("short read at offset " + std::to_string(offset));
  if (checksum(body) != crc)
    throw LogError("checksum mismatch at offset " + std::to_string(offset));
  return body;
}

LogReader DurableLog::replay_from(std::uint64_t offset) const {
  return LogReader(this, offset, next_offset());
}

LogReader DurableLog::follow_from(std::uint64_t offset) const {
  return LogReader(this, offset, std::nullopt);
}

}  // namespace livek
