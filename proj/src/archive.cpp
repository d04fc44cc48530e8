#include "livek/ingest/archive.hpp"

#include <sstream>
#include <thread>

namespace livek {

ReplaySpeed ReplaySpeed::parse(std::string_view text) {
  if (text == "max") return {};
  double v = 0;
  std::string s(text);
  std::istringstream is(s);
  if (!(is >> v) || !is.eof() || !(v > 0))
    throw std::invalid_argument("speed must be 'max' or a positive number, got '" +
                                s + "'");
  return {false, v};
}

std::string ReplaySpeed::to_string() const {
  if (max) return "max";
  std::ostringstream os;
  os << multiplier;
  return os.str();
}

ArchiveReplay::ArchiveReplay(const std::filesystem::path& path,
                             ReplaySpeed speed,
                             std::shared_ptr<const Clock> clock,
                             Sleeper sleeper)
    : in_(path),
      speed_(speed),
      clock_(clock ? std::move(clock) : std::make_shared<SystemClock>()),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](auto d) {
        std::this_thread::sleep_for(d);
      })) {
  if (!in_) throw ArchiveError("cannot open archive " + path.string());
}

std::optional<PostRecord> ArchiveReplay::next() {
  while (!done_ && std::getline(in_, line_)) {
    ++stats_.lines;
    auto parsed = parse_post(line_);
    if (auto* r = std::get_if<Rejection>(&parsed)) {
      ++stats_.rejected;
      ++stats_.by_reason[*r];
      continue;
    }
    auto& post = std::get<Post>(parsed);
    if (until_ && post.created_at > *until_) {
      done_ = true;
      break;
    }
    if (!speed_.max && last_event_ && post.created_at > *last_event_) {
      std::chrono::duration<double> gap = post.created_at - *last_event_;
      sleeper_(gap / speed_.multiplier);
    }
    last_event_ = post.created_at;
    PostRecord rec;
    rec.event_time = post.created_at;
    rec.ingest_time = clock_->now();
    rec.key = std::to_string(post.id);
    rec.offset = stats_.emitted++;
    rec.payload = std::move(post);
    return rec;
  }
  return std::nullopt;
}

}  // namespace livek
