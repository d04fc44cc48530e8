#include "livek/pipeline/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>

#include "livek/core/text.hpp"
#include "livek/enrich/enrich.hpp"

namespace livek {
namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out = "invalid configuration";
  for (const auto& p : problems) out += "\n  " + p;
  return out;
}

class Reader {
 public:
  Reader(const nlohmann::json& root, std::filesystem::path base)
      : root_(root), base_(std::move(base)) {}

  const nlohmann::json* at(const std::string& path) const {
    const nlohmann::json* cur = &root_;
    std::size_t pos = 0;
    while (pos <= path.size()) {
      auto dot = path.find('.', pos);
      auto key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
      if (!cur->is_object() || !cur->contains(key)) return nullptr;
      cur = &cur->at(key);
      if (dot == std::string::npos) break;
      pos = dot + 1;
    }
    return cur->is_null() ? nullptr : cur;
  }

  template <typename T>
  void get(const std::string& path, T& out) {
    const auto* v = at(path);
    if (!v) return;
    try {
      out = v->get<T>();
    } catch (const nlohmann::json::exception&) {
      problem(path, "wrong type");
    }
  }

  template <typename T>
  void positive(const std::string& path, T& out) {
    get(path, out);
    if (!(out > T{})) problem(path, "must be positive");
  }

  void duration(const std::string& path, Duration unit, Duration& out) {
    const auto* v = at(path);
    if (!v) return;
    if (!v->is_number()) return problem(path, "must be a number");
    auto n = v->get<double>();
    if (!(n > 0)) return problem(path, "must be positive");
    out = Duration{static_cast<std::int64_t>(n * static_cast<double>(unit.count()))};
  }

  std::filesystem::path resolve(const std::filesystem::path& p) const {
    if (p.empty() || p.is_absolute()) return p;
    return (base_ / p).lexically_normal();
  }

  // Reads a path; `required` paths must be present, present ones must exist.
  std::filesystem::path file(const std::string& path, bool required) {
    const auto* v = at(path);
    if (!v) {
      if (required) problem(path, "is required");
      return {};
    }
    if (!v->is_string()) {
      problem(path, "must be a path string");
      return {};
    }
    auto p = resolve(v->get<std::string>());
    if (!std::filesystem::exists(p)) problem(path, "file not found: " + p.string());
    return p;
  }

  void problem(const std::string& path, const std::string& what) {
    problems.push_back(path + ": " + what);
  }

  std::vector<std::string> problems;

 private:
  const nlohmann::json& root_;
  std::filesystem::path base_;
};

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

TopologySpec TopologySpec::from_json(const nlohmann::json& j,
                                     const std::filesystem::path& base) {
  TopologySpec t;
  for (const auto& l : j.value("links", nlohmann::json::array())) {
    LinkSpec s;
    s.name = l.at("name").get<std::string>();
    s.kind = l.value("kind", s.kind);
    s.capacity = l.value("capacity", s.capacity);
    s.sync = l.value("sync", s.sync);
    if (l.contains("path")) {
      s.path = l.at("path").get<std::string>();
      if (s.path.is_relative() && !base.empty()) s.path = (base / s.path).lexically_normal();
    }
    t.links.push_back(std::move(s));
  }
  for (const auto& js : j.at("jobs")) t.jobs.push_back(JobSpec::from_json(js));
  return t;
}

nlohmann::json default_topology_json() {
  auto link = [](const char* name) {
    return nlohmann::json{{"name", name}, {"kind", "queue"}, {"capacity", 1024}};
  };
  auto ref = [](const char* type, const char* name) {
    return nlohmann::json{{"type", type}, {"link", name}};
  };
  auto p = [](const char* type) { return nlohmann::json{{"type", type}}; };
  nlohmann::json links = {link("raw"),       link("enriched"), link("annotated"),
                          link("tagged"),    link("checked"),  link("documents")};
  nlohmann::json jobs = nlohmann::json::array();
  jobs.push_back({{"name", "misinfo_fetch"},
                  {"phase", "bootstrap"},
                  {"ingest", p("document_snapshot")},
                  {"processors", nlohmann::json::array()},
                  {"emit", ref("link", "documents")}});
  jobs.push_back({{"name", "misinfo_extract"},
                  {"phase", "bootstrap"},
                  {"ingest", ref("link", "documents")},
                  {"processors", {p("extract_misinfo_terms")}},
                  {"emit", p("misinfo_keyword_store")}});
  jobs.push_back({{"name", "ingest"},
                  {"ingest", p("archive")},
                  {"processors", nlohmann::json::array()},
                  {"emit", ref("link", "raw")}});
  jobs.push_back({{"name", "metadata"},
                  {"ingest", ref("link", "raw")},
                  {"processors",
                   {p("normalize"), p("drift_adapt"), p("relevance"), p("case_reports"),
                    p("locations")}},
                  {"emit", ref("link", "enriched")}});
  jobs.push_back({{"name", "annotate"},
                  {"ingest", ref("link", "enriched")},
                  {"processors", {p("sentiment"), p("topic_groups")}},
                  {"emit", ref("link", "annotated")}});
  jobs.push_back({{"name", "authoritative"},
                  {"ingest", ref("link", "annotated")},
                  {"processors", {p("authoritative")}},
                  {"emit", ref("link", "tagged")}});
  jobs.push_back({{"name", "misinfo_window"},
                  {"ingest", ref("window_batch", "tagged")},
                  {"processors", {p("misinfo_tag"), p("piggyback")}},
                  {"emit", ref("unbatch", "checked")}});
  jobs.push_back({{"name", "corroborate"},
                  {"ingest", ref("link", "checked")},
                  {"processors", {p("analytics"), p("corroborate"), p("enriched_archive")}},
                  {"emit", p("discard")}});
  return {{"links", links}, {"jobs", jobs}};
}

std::vector<std::string> apply_env_overrides(nlohmann::json& doc, const std::string& prefix) {
  std::vector<std::string> applied;
  std::function<void(nlohmann::json&, const std::string&)> walk =
      [&](nlohmann::json& node, const std::string& name) {
        if (node.is_object()) {
          for (auto& [k, v] : node.items()) {
            std::string up;
            for (char c : k) up.push_back(c == '-' || c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
            walk(v, name + "_" + up);
          }
          return;
        }
        if (node.is_array()) return;
        const char* env = std::getenv(name.c_str());
        if (!env) return;
        std::string s(env);
        try {
          if (node.is_boolean()) {
            if (s == "true" || s == "1") node = true;
            else if (s == "false" || s == "0") node = false;
            else throw std::invalid_argument("not a boolean");
          } else if (node.is_number_integer()) {
            std::size_t used = 0;
            auto v = std::stoll(s, &used);
            if (used != s.size()) throw std::invalid_argument("not an integer");
            node = v;
          } else if (node.is_number()) {
            std::size_t used = 0;
            auto v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument("not a number");
            node = v;
          } else {
            node = s;
          }
        } catch (const std::exception&) {
          throw ValidationError({name + ": cannot parse '" + s + "'"});
        }
        applied.push_back(name);
      };
  walk(doc, prefix);
  return applied;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& input,
                                         const std::filesystem::path& base) {
  PipelineConfig c;
  c.raw = input;
  c.config_dir = base;
  if (!c.raw.is_object()) throw ValidationError({"config: must be a JSON object"});
  // Optional leaves that env overrides may target.
  for (const char* k : {"seed", "until", "speed"})
    if (!c.raw.contains(k)) c.raw[k] = nullptr;
  apply_env_overrides(c.raw);
  Reader r(c.raw, base);

  if (const auto* s = r.at("seed")) {
    if (s->is_number_unsigned() || (s->is_number_integer() && s->get<std::int64_t>() >= 0))
      c.seed = s->get<std::uint64_t>();
    else if (s->is_string())
      try {
        c.seed = std::stoull(s->get<std::string>());
      } catch (const std::exception&) {
        r.problem("seed", "must be a non-negative integer");
      }
    else
      r.problem("seed", "must be a non-negative integer");
  } else {
    r.problem("seed", "is required");
  }

  if (r.at("archive")) {
    c.archive = r.file("archive", true);
  } else if (const auto* syn = r.at("synthetic")) {
    try {
      nlohmann::json sj = *syn;
      if (c.seed) sj["seed"] = *c.seed;
      c.synthetic = SyntheticConfig::from_json(sj);
    } catch (const std::exception& e) {
      r.problem("synthetic", e.what());
    }
  } else {
    r.problem("archive", "is required (or a synthetic block)");
  }
  if (const auto* o = r.at("out_dir"); o && o->is_string())
    c.out_dir = r.resolve(o->get<std::string>());
  if (const auto* s = r.at("speed")) {
    try {
      c.speed = ReplaySpeed::parse(s->is_string() ? s->get<std::string>() : s->dump());
    } catch (const std::exception& e) {
      r.problem("speed", e.what());
    }
  }
  if (const auto* u = r.at("until")) {
    std::optional<TimePoint> t;
    if (u->is_string()) t = parse_timestamp(u->get<std::string>());
    if (!t) r.problem("until", "must be a timestamp");
    c.until = t;
  }

  r.get("keywords.seeds", c.seed_keywords);
  if (const auto* f = r.at("keywords.seeds_file")) {
    (void)f;
    auto p = r.file("keywords.seeds_file", true);
    if (std::filesystem::exists(p)) {
      try {
        auto j = read_json_file(p);
        const auto& arr = j.is_object() ? j.at("seeds") : j;
        for (const auto& t : arr) c.seed_keywords.push_back(t.get<std::string>());
      } catch (const std::exception& e) {
        r.problem("keywords.seeds_file", e.what());
      }
    }
  }
  if (c.seed_keywords.empty()) r.problem("keywords.seeds", "must list at least one keyword");
  if (const auto* m = r.at("keywords.match_mode")) {
    try {
      c.match_mode = match_mode_from_string(m->get<std::string>());
    } catch (const std::exception& e) {
      r.problem("keywords.match_mode", e.what());
    }
  }
  r.duration("keywords.retweet_ttl_hours", std::chrono::hours(1), c.retweet_ttl);

  r.get("drift.enabled", c.drift_enabled);
  if (const auto* d = r.at("drift")) {
    try {
      nlohmann::json dj = *d;
      dj.erase("enabled");
      c.promotion = PromotionPolicy::from_json(dj);
    } catch (const std::exception& e) {
      r.problem("drift", e.what());
    }
  }

  c.gazetteer = r.file("enrichment.gazetteer", true);
  c.sentiment_lexicon = r.file("enrichment.sentiment_lexicon", false);
  c.topic_groups = r.file("enrichment.topic_groups", false);
  r.duration("enrichment.location_ttl_days", std::chrono::hours(24), c.location_ttl);
  c.case_reports = r.file("enrichment.case_reports", false);

  if (const auto* srcs = r.at("misinformation.sources")) {
    for (std::size_t i = 0; i < srcs->size(); ++i) {
      auto field = "misinformation.sources[" + std::to_string(i) + "]";
      try {
        auto s = MisinfoSource::from_json(srcs->at(i), base);
        if (!std::filesystem::exists(s.path))
          r.problem(field + ".path", "file not found: " + s.path.string());
        c.misinfo_sources.push_back(std::move(s));
      } catch (const std::exception& e) {
        r.problem(field, e.what());
      }
    }
  }
  r.get("misinformation.seed_terms", c.misinfo_seed_terms);
  r.get("misinformation.tombstones", c.misinfo_tombstones);
  r.get("misinformation.confirmed", c.misinfo_confirmed);
  r.duration("misinformation.window_seconds", std::chrono::seconds(1), c.misinfo_window);
  r.get("misinformation.piggyback.min_score", c.piggyback_min_score);
  r.get("misinformation.piggyback.min_count", c.piggyback_min_count);
  r.get("misinformation.piggyback.top_k", c.piggyback_top_k);

  c.authoritative_sources = r.file("authoritative_sources", true);
  if (std::filesystem::exists(c.authoritative_sources)) {
    try {
      AuthoritativeSourceList::load(c.authoritative_sources);
    } catch (const std::exception& e) {
      r.problem("authoritative_sources", e.what());
    }
  }

  c.evidence = r.file("corroboration.evidence", false);
  r.duration("corroboration.window_minutes", std::chrono::minutes(1), c.cluster_window);
  r.positive("corroboration.min_cluster_size", c.min_cluster_size);
  r.positive("corroboration.eta", c.eta);
  r.duration("corroboration.lag_tolerance_days", std::chrono::hours(24),
                     c.match_rule.lag_tolerance);
  r.get("corroboration.min_term_overlap", c.match_rule.min_term_overlap);
  r.get("corroboration.event_terms", c.event_terms);
  r.positive("corroboration.trend_member_terms", c.trend_member_terms);

  r.get("analytics.max_lag_days", c.max_lag_days);
  if (c.max_lag_days < 0) r.problem("analytics.max_lag_days", "must be >= 0");
  r.get("output.enriched_archive", c.write_enriched);

  try {
    if (const auto* t = r.at("topology")) {
      if (t->is_string()) {
        auto p = r.file("topology", true);
        if (std::filesystem::exists(p))
          c.topology = TopologySpec::from_json(read_json_file(p), p.parent_path());
      } else {
        c.topology = TopologySpec::from_json(*t, base);
      }
    } else {
      c.topology = TopologySpec::from_json(default_topology_json(), base);
    }
  } catch (const std::exception& e) {
    r.problem("topology", e.what());
  }
  std::set<std::string> names;
  for (const auto& l : c.topology.links) {
    if (!names.insert(l.name).second) r.problem("topology.links", "duplicate link " + l.name);
    if (l.kind != "queue" && l.kind != "log")
      r.problem("topology.links." + l.name, "kind must be queue or log");
    if (l.kind == "log" && l.path.empty())
      r.problem("topology.links." + l.name, "log links need a path");
    if (l.capacity == 0) r.problem("topology.links." + l.name, "capacity must be positive");
  }
  for (const auto& j : c.topology.jobs)
    if (j.phase != "stream" && j.phase != "bootstrap")
      r.problem("topology.jobs." + j.name, "phase must be stream or bootstrap");

  if (!r.problems.empty()) throw ValidationError(r.problems);
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = read_json_file(path);
  } catch (const std::exception& e) {
    throw ValidationError({std::string("config: ") + e.what()});
  }
  auto base = std::filesystem::absolute(path).parent_path();
  return from_json(j, base);
}

}  // namespace livek
