#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "livek/stream/clock.hpp"

namespace livek {

// Key-value store shared between jobs. Values are opaque strings; each
// key may carry an expiry computed from the store's clock at put time.
// Every operation is atomic per key.
class SharedStore {
 public:
  explicit SharedStore(std::shared_ptr<const Clock> clock = nullptr);

  void put(std::string key, std::string value,
           std::optional<Duration> ttl = std::nullopt);
  std::optional<std::string> get(std::string_view key) const;
  bool erase(std::string_view key);

  // Atomic read-modify-write. `fn` sees the current unexpired value (or
  // nullopt) and returns the new value, or nullopt to delete the key. The
  // returned value is what the store holds afterwards.
  using Updater =
      std::function<std::optional<std::string>(const std::optional<std::string>&)>;
  std::optional<std::string> update(std::string_view key, const Updater& fn,
                                    std::optional<Duration> ttl = std::nullopt);

  // Unexpired entries whose key starts with `prefix`, sorted by key.
  std::vector<std::pair<std::string, std::string>> scan_prefix(
      std::string_view prefix) const;

  std::size_t purge_expired();
  // Number of stored entries, expired ones included until purged.
  std::size_t size() const;

  const Clock& clock() const { return *clock_; }

 private:
  struct Entry {
    std::string value;
    std::optional<TimePoint> expiry;
  };

  bool live(const Entry& e, TimePoint now) const {
    return !e.expiry || now < *e.expiry;
  }

  std::shared_ptr<const Clock> clock_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Entry, std::less<>> entries_;
};

}  // namespace livek
