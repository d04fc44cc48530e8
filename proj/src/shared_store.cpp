#include "livek/stream/shared_store.hpp"

#include <mutex>

namespace livek {

SharedStore::SharedStore(std::shared_ptr<const Clock> clock)
    : clock_(clock ? std::move(clock) : std::make_shared<SystemClock>()) {}

void SharedStore::put(std::string key, std::string value,
                      std::optional<Duration> ttl) {
  std::optional<TimePoint> expiry;
  if (ttl) expiry = clock_->now() + *ttl;
  std::unique_lock lock(mutex_);
  entries_.insert_or_assign(std::move(key), Entry{std::move(value), expiry});
}

std::optional<std::string> SharedStore::get(std::string_view key) const {
  auto now = clock_->now();
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end() || !live(it->second, now)) return std::nullopt;
  return it->second.value;
}

bool SharedStore::erase(std::string_view key) {
  std::unique_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return false;
  entries_.erase(it);
  return true;
}

std::optional<std::string> SharedStore::update(std::string_view key,
                                               const Updater& fn,
                                               std::optional<Duration> ttl) {
  auto now = clock_->now();
  std::unique_lock lock(mutex_);
  auto it = entries_.find(key);
  std::optional<std::string> current;
  if (it != entries_.end() && live(it->second, now)) current = it->second.value;
  auto next = fn(current);
  if (!next) {
    if (it != entries_.end()) entries_.erase(it);
    return std::nullopt;
  }
  std::optional<TimePoint> expiry;
  if (ttl) expiry = now + *ttl;
  if (it == entries_.end())
    entries_.emplace(std::string(key), Entry{*next, expiry});
  else
    it->second = Entry{*next, expiry};
  return next;
}

std::vector<std::pair<std::string, std::string>> SharedStore::scan_prefix(
    std::string_view prefix) const {
  auto now = clock_->now();
  std::vector<std::pair<std::string, std::string>> out;
  std::shared_lock lock(mutex_);
  for (auto it = entries_.lower_bound(prefix); it != entries_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    if (live(it->second, now)) out.emplace_back(it->first, it->second.value);
  }
  return out;
}

std::size_t SharedStore::purge_expired() {
  auto now = clock_->now();
  std::unique_lock lock(mutex_);
  return std::erase_if(entries_,
                       [&](const auto& kv) { return !live(kv.second, now); });
}

std::size_t SharedStore::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

}  // namespace livek
