#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "livek/stream/durable_log.hpp"

using namespace livek;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("livek_log_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  return d;
}

fs::path only_segment(const fs::path& dir) {
  return dir / "00000000000000000000.log";
}

}  // namespace

TEST(DurableLog, AppendsAndReplaysInOrder) {
  auto dir = fresh_dir("basic");
  {
    DurableLog log(dir);
    for (int i = 0; i < 50; ++i) EXPECT_EQ(log.append("rec" + std::to_string(i)), static_cast<std::uint64_t>(i));
    EXPECT_EQ(log.read(7), "rec7");
    EXPECT_FALSE(log.read(50));
  }
  DurableLog again(dir);
  EXPECT_EQ(again.next_offset(), 50u);
  auto r = again.replay_from(48);
  EXPECT_EQ(r.next_bytes(), "rec48");
  EXPECT_EQ(r.next_bytes(), "rec49");
  EXPECT_FALSE(r.next_bytes());
  fs::remove_all(dir);
}

TEST(DurableLog, JsonRecordsKeepEnvelope) {
  auto dir = fresh_dir("json");
  DurableLog log(dir);
  JsonRecord rec;
  rec.payload = {{"text", "hello"}};
  rec.key = "k1";
  rec.event_time = from_epoch(1583002796);
  rec.ingest_time = from_epoch(1583002800);
  log.append(rec);
  auto r = log.replay_from(0);
  auto back = r.next();
  ASSERT_TRUE(back);
  EXPECT_EQ(back->payload, rec.payload);
  EXPECT_EQ(back->key, rec.key);
  EXPECT_EQ(back->event_time, rec.event_time);
  EXPECT_EQ(back->offset, 0u);
  fs::remove_all(dir);
}

TEST(DurableLog, TruncatesTornTail) {
  auto dir = fresh_dir("torn");
  {
    DurableLog log(dir);
    log.append("one");
    log.append("two");
  }
  {
    std::ofstream f(only_segment(dir), std::ios::binary | std::ios::app);
    f << "\x31\x52\x4b\x4cgarbage";
  }
  DurableLog log(dir);
  EXPECT_EQ(log.next_offset(), 2u);
  EXPECT_GT(log.recovery().truncated_bytes, 0u);
  EXPECT_EQ(log.append("three"), 2u);
  EXPECT_EQ(log.read(2), "three");
  fs::remove_all(dir);
}

TEST(DurableLog, CorruptBodyIsDropped) {
  auto dir = fresh_dir("crc");
  {
    DurableLog log(dir);
    log.append("aaaa");
    log.append("bbbb");
  }
  {
    std::fstream f(only_segment(dir), std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(-1, std::ios::end);
    f.put('X');
  }
  DurableLog log(dir);
  EXPECT_EQ(log.next_offset(), 1u);
  EXPECT_EQ(log.read(0), "aaaa");
  fs::remove_all(dir);
}

TEST(DurableLog, RollsSegments) {
  auto dir = fresh_dir("roll");
  LogOptions opt;
  opt.segment_bytes = 64;
  opt.sync_on_append = false;
  {
    DurableLog log(dir, opt);
    for (int i = 0; i < 40; ++i) log.append(std::string(20, static_cast<char>('a' + i % 26)));
  }
  DurableLog log(dir, opt);
  EXPECT_GT(log.recovery().segments, 5u);
  EXPECT_EQ(log.next_offset(), 40u);
  auto r = log.replay_from(0);
  for (int i = 0; i < 40; ++i) EXPECT_EQ(r.next_bytes(), std::string(20, static_cast<char>('a' + i % 26)));
  fs::remove_all(dir);
}

TEST(DurableLog, FollowReaderSeesLaterAppends) {
  auto dir = fresh_dir("follow");
  DurableLog log(dir);
  auto bounded = log.replay_from(0);
  auto follower = log.follow_from(0);
  log.append("late");
  EXPECT_FALSE(bounded.next_bytes());
  EXPECT_EQ(follower.next_bytes(), "late");
  fs::remove_all(dir);
}

// Every crash point: acknowledged records survive, unacknowledged ones may
// or may not, and nothing is duplicated.
TEST(DurableLog, InjectedCrashPhases) {
  for (auto phase : {CrashPhase::before_write, CrashPhase::torn_frame, CrashPhase::after_write,
                     CrashPhase::after_sync, CrashPhase::after_index}) {
    auto dir = fresh_dir("crash" + std::to_string(static_cast<int>(phase)));
    pid_t pid = ::fork();
    ASSERT_GE(pid, 0);
    if (pid == 0) {
      LogOptions opt;
      opt.fault = LogOptions::Fault{5, phase};
      DurableLog log(dir, opt);
      for (int i = 0; i < 10; ++i) log.append("r" + std::to_string(i));
      std::_Exit(0);
    }
    int status = 0;
    ::waitpid(pid, &status, 0);
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), kInjectedCrashExitCode);
    DurableLog log(dir);
    auto n = log.next_offset();
    EXPECT_GE(n, 5u);
    EXPECT_LE(n, 6u);
    auto r = log.replay_from(0);
    for (std::uint64_t i = 0; i < n; ++i) EXPECT_EQ(r.next_bytes(), "r" + std::to_string(i));
    EXPECT_EQ(log.append("after"), n);
    fs::remove_all(dir);
  }
}
