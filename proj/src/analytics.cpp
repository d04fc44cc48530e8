#include "livek/analytics/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "livek/core/text.hpp"

namespace livek {

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::month: return "month";
    case Dimension::language: return "language";
    case Dimension::region_day: return "region_day";
    case Dimension::topic_region_day: return "topic_region_day";
  }
  return "month";
}

namespace {

std::string regions_key(const EnrichedPost& p) {
  return p.locations.empty() ? "unknown" : join(p.locations, "+");
}

}  // namespace

std::string bucket_key(const EnrichedPost& p, Dimension d) {
  switch (d) {
    case Dimension::month: return format_month(p.post.created_at);
    case Dimension::language: return p.post.lang.empty() ? "und" : p.post.lang;
    case Dimension::region_day:
      return regions_key(p) + "|" + format_day(p.post.created_at);
    case Dimension::topic_region_day:
      return (p.topic_groups.empty() ? "none" : join(p.topic_groups, "+")) + "|" +
             regions_key(p) + "|" + format_day(p.post.created_at);
  }
  return {};
}

CountTable bucket_counts(const std::vector<EnrichedPost>& posts, Dimension d) {
  CountTable t;
  for (const auto& p : posts) ++t[bucket_key(p, d)];
  return t;
}

void CountAccumulator::add(const EnrichedPost& post) {
  ++total_;
  for (int d = 0; d < 4; ++d) ++tables_[d][bucket_key(post, static_cast<Dimension>(d))];
  if (post.relevance) {
    auto day = floor_to(post.post.created_at, std::chrono::hours(24));
    for (const auto& loc : post.locations) social_[loc][day] += 1.0;
  }
}

void TimeSeries::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].second < 0) throw std::invalid_argument("negative count in series");
    if (i && points[i].first <= points[i - 1].first)
      throw std::invalid_argument("series buckets must be strictly increasing");
  }
}

TimeSeries TimeSeries::daily(std::string region, const std::map<TimePoint, double>& counts) {
  TimeSeries s;
  s.region = std::move(region);
  s.granularity = Granularity::day;
  for (const auto& [t, v] : counts)
    s.points.emplace_back(floor_to(t, std::chrono::hours(24)), v);
  s.validate();
  return s;
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  const auto n = x.size();
  if (n < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0 || syy <= 0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

nlohmann::json CorrelationResult::to_json() const {
  nlohmann::json j = {{"region", region}, {"defined", defined}, {"n", n}};
  if (defined) {
    j["best_lag"] = best_lag;
    j["r"] = r;
  } else {
    j["best_lag"] = nullptr;
    j["r"] = nullptr;
    j["reason"] = reason;
  }
  return j;
}

namespace {

constexpr std::int64_t kDay = 86400;

std::int64_t day_index(TimePoint t) {
  auto s = to_epoch(t);
  return s >= 0 ? s / kDay : -((-s + kDay - 1) / kDay);
}

struct Dense {
  std::int64_t first = 0;
  std::vector<double> values;

  double at(std::int64_t day) const { return values[static_cast<std::size_t>(day - first)]; }
  std::int64_t last() const { return first + static_cast<std::int64_t>(values.size()) - 1; }
};

Dense densify(const TimeSeries& s) {
  Dense d;
  if (s.points.empty()) return d;
  d.first = day_index(s.points.front().first);
  d.values.assign(static_cast<std::size_t>(day_index(s.points.back().first) - d.first + 1), 0.0);
  for (const auto& [t, v] : s.points)
    d.values[static_cast<std::size_t>(day_index(t) - d.first)] += v;
  return d;
}

}  // namespace

CorrelationResult lagged_correlation(const TimeSeries& social, const TimeSeries& cases,
                                     int max_lag) {
  if (max_lag < 0) throw std::invalid_argument("max_lag must be >= 0");
  social.validate();
  cases.validate();
  CorrelationResult res;
  res.region = social.region.empty() ? cases.region : social.region;
  if (social.points.empty() || cases.points.empty()) {
    res.reason = "empty series";
    return res;
  }
  auto s = densify(social);
  auto c = densify(cases);
  auto overlap = std::min(s.last(), c.last()) - std::max(s.first, c.first) + 1;
  if (overlap < max_lag + 3) {
    res.reason = "overlap shorter than max_lag + 3 days";
    return res;
  }
  bool any = false;
  for (int mag = 0; mag <= max_lag; ++mag) {
    for (int lag : {mag, -mag}) {
      if (mag == 0 && lag != 0) continue;
      std::vector<double> x, y;
      auto lo = std::max(s.first, c.first - lag);
      auto hi = std::min(s.last(), c.last() - lag);
      for (auto d = lo; d <= hi; ++d) {
        x.push_back(s.at(d));
        y.push_back(c.at(d + lag));
      }
      if (x.size() < 3) continue;
      auto r = pearson(x, y);
      if (!r) continue;
      if (!any || *r > res.r + 1e-12) {
        any = true;
        res.r = *r;
        res.best_lag = lag;
        res.n = x.size();
      }
    }
  }
  res.defined = any;
  if (!any) {
    res.r = 0;
    res.reason = "zero variance";
  }
  return res;
}

std::vector<LanguageRow> language_rows(const CountTable& languages) {
  std::uint64_t total = 0;
  for (const auto& [_, n] : languages) total += n;
  std::vector<LanguageRow> rows;
  for (const auto& [lang, n] : languages) {
    double pct = total ? static_cast<double>(n * 1000 / total) / 10.0 : 0.0;
    rows.push_back({lang, n, pct});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.count > b.count; });
  return rows;
}

std::string table_csv(const CountTable& table, const std::string& key_header) {
  std::string out = key_header + ",count\n";
  for (const auto& [k, n] : table) out += k + "," + std::to_string(n) + "\n";
  return out;
}

std::string month_csv(const CountTable& months) { return table_csv(months, "month"); }

std::string language_csv(const CountTable& languages) {
  std::string out = "language,count,pct\n";
  char buf[32];
  for (const auto& row : language_rows(languages)) {
    std::snprintf(buf, sizeof buf, "%.1f", row.pct);
    out += row.language + "," + std::to_string(row.count) + "," + buf + "\n";
  }
  return out;
}

std::string correlation_jsonl(const std::vector<CorrelationResult>& results) {
  std::string out;
  for (const auto& r : results) out += r.to_json().dump() + "\n";
  return out;
}

ReportBundle make_report(const CountAccumulator& acc, const std::vector<CaseReport>& cases,
                         int max_lag) {
  ReportBundle b;
  b.months = acc.table(Dimension::month);
  b.languages = acc.table(Dimension::language);
  b.region_day = acc.table(Dimension::region_day);
  b.topic_region_day = acc.table(Dimension::topic_region_day);
  std::map<std::string, std::map<TimePoint, double>> case_series;
  for (const auto& c : cases)
    if (!c.region.empty())
      case_series[c.region][floor_to(c.date, std::chrono::hours(24))] +=
          static_cast<double>(c.new_cases);
  for (const auto& [region, series] : case_series) {
    auto social_it = acc.social_daily().find(region);
    std::map<TimePoint, double> social_counts;
    if (social_it != acc.social_daily().end()) social_counts = social_it->second;
    b.correlations.push_back(lagged_correlation(TimeSeries::daily(region, social_counts),
                                                TimeSeries::daily(region, series), max_lag));
  }
  return b;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle,
                                               const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> files = {
      dir / "months.csv", dir / "languages.csv", dir / "region_day.csv",
      dir / "topic_region_day.csv", dir / "correlation.jsonl"};
  write_text_file(files[0], month_csv(bundle.months));
  write_text_file(files[1], language_csv(bundle.languages));
  write_text_file(files[2], table_csv(bundle.region_day, "region_day"));
  write_text_file(files[3], table_csv(bundle.topic_region_day, "topic_region_day"));
  write_text_file(files[4], correlation_jsonl(bundle.correlations));
  return files;
}

}  // namespace livek
