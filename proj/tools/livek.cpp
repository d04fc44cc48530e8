#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "livek/analytics/analytics.hpp"
#include "livek/drift/drift.hpp"
#include "livek/enrich/enrich.hpp"
#include "livek/ingest/archive.hpp"
#include "livek/ingest/synthetic.hpp"
#include "livek/pipeline/config.hpp"
#include "livek/pipeline/pipeline.hpp"

namespace {

constexpr int kValidation = 2;
constexpr int kRuntime = 3;

struct RunArgs {
  std::string config;
  std::string seed;
  std::string out_dir;
  std::string speed;
  std::string until;
};

int cmd_run(const RunArgs& a) {
  nlohmann::json doc;
  try {
    doc = livek::read_json_file(a.config);
  } catch (const std::exception& e) {
    std::cerr << "config: " << e.what() << "\n";
    return kValidation;
  }
  if (!a.seed.empty()) doc["seed"] = a.seed;
  if (!a.speed.empty()) doc["speed"] = a.speed;
  if (!a.until.empty()) doc["until"] = a.until;
  auto base = std::filesystem::absolute(a.config).parent_path();
  if (!a.out_dir.empty()) doc["out_dir"] = std::filesystem::absolute(a.out_dir).string();
  livek::PipelineConfig cfg;
  try {
    cfg = livek::PipelineConfig::from_json(doc, base);
  } catch (const livek::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kValidation;
  }
  try {
    auto s = livek::run_pipeline(cfg);
    std::uint64_t posts = s.replay.emitted;
    std::fprintf(stderr, "%llu posts (%llu rejected) in %.2f s, %.0f posts/s\n",
                 static_cast<unsigned long long>(posts),
                 static_cast<unsigned long long>(s.replay.rejected), s.seconds,
                 s.seconds > 0 ? static_cast<double>(posts) / s.seconds : 0.0);
    std::fprintf(stderr, "%llu posts windowed, %llu tagged, %llu clusters, %llu promoted keywords\n",
                 static_cast<unsigned long long>(s.window_posts_in),
                 static_cast<unsigned long long>(s.window_tagged),
                 static_cast<unsigned long long>(s.clusters),
                 static_cast<unsigned long long>(s.promoted));
    for (const auto& f : s.files) std::cout << f.string() << "\n";
  } catch (const livek::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kRuntime;
  }
  return 0;
}

int cmd_synth(const std::string& config, const std::string& out, const std::string& seed) {
  livek::SyntheticConfig cfg;
  try {
    auto j = livek::read_json_file(config);
    if (!seed.empty()) j["seed"] = std::stoull(seed);
    cfg = livek::SyntheticConfig::from_json(j);
  } catch (const std::exception& e) {
    std::cerr << "synthetic config: " << e.what() << "\n";
    return kValidation;
  }
  try {
    auto corpus = livek::generate_synthetic(cfg);
    auto [archive, truth] = livek::write_corpus(corpus, out);
    std::cerr << corpus.posts.size() << " posts\n";
    std::cout << archive.string() << "\n" << truth.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "synth failed: " << e.what() << "\n";
    return kRuntime;
  }
  return 0;
}

int cmd_replay(const std::string& archive, const std::string& speed, const std::string& until) {
  livek::ReplaySpeed sp;
  std::optional<livek::TimePoint> stop;
  try {
    sp = livek::ReplaySpeed::parse(speed);
    if (!until.empty()) {
      stop = livek::parse_timestamp(until);
      if (!stop) throw std::invalid_argument("--until: bad timestamp");
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kValidation;
  }
  try {
    livek::ArchiveReplay replay(archive, sp);
    if (stop) replay.stop_after(*stop);
    while (auto rec = replay.next()) std::cout << livek::post_to_json(rec->payload).dump() << "\n";
    const auto& s = replay.stats();
    std::cerr << s.emitted << " emitted, " << s.rejected << " rejected";
    for (const auto& [r, n] : s.by_reason) std::cerr << ", " << livek::to_string(r) << "=" << n;
    std::cerr << "\n";
  } catch (const livek::ArchiveError& e) {
    std::cerr << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "replay failed: " << e.what() << "\n";
    return kRuntime;
  }
  return 0;
}

int cmd_report(const std::string& input, const std::string& out_dir, const std::string& cases,
               int max_lag) {
  try {
    std::ifstream in(input);
    if (!in) {
      std::cerr << "--input: cannot open " << input << "\n";
      return kValidation;
    }
    livek::CountAccumulator acc;
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) acc.add(livek::enriched_from_json(nlohmann::json::parse(line)));
    std::vector<livek::CaseReport> reports;
    if (!cases.empty()) reports = livek::load_case_reports(cases);
    auto bundle = livek::make_report(acc, reports, max_lag);
    for (const auto& p : livek::emit_report(bundle, out_dir)) std::cout << p.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "report failed: " << e.what() << "\n";
    return kRuntime;
  }
  return 0;
}

int cmd_keywords_show(const std::string& config, const std::string& audit_path,
                      const std::string& at) {
  livek::PipelineConfig cfg;
  std::optional<livek::TimePoint> when;
  try {
    cfg = livek::PipelineConfig::load(config);
    if (!at.empty()) {
      when = livek::parse_timestamp(at);
      if (!when) throw livek::ValidationError({"--at: bad timestamp '" + at + "'"});
    }
  } catch (const livek::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kValidation;
  }
  try {
    auto path = audit_path.empty() ? cfg.out_dir / "keyword_audit.jsonl"
                                   : std::filesystem::path(audit_path);
    std::vector<livek::PromotionAudit> audit;
    std::ifstream in(path);
    if (!in) {
      std::cerr << "cannot open audit log " << path.string() << "\n";
      return kValidation;
    }
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) audit.push_back(livek::PromotionAudit::from_json(nlohmann::json::parse(line)));
    auto t = when.value_or(livek::TimePoint::max());
    auto set = livek::keywords_at(cfg.seed_keywords, cfg.match_mode, audit, t);
    for (const auto* e : set.entries()) {
      std::cout << e->term << "\t" << livek::to_string(e->origin);
      if (e->promoted_at) std::cout << "\t" << livek::format_iso8601(*e->promoted_at);
      std::cout << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "keywords show failed: " << e.what() << "\n";
    return kRuntime;
  }
  return 0;
}

int cmd_clusters_show(const std::string& in_path, const std::string& status) {
  try {
    if (!status.empty()) livek::cluster_status_from_string(status);
  } catch (const std::exception& e) {
    std::cerr << "--status: " << e.what() << "\n";
    return kValidation;
  }
  try {
    auto clusters = livek::read_json_file(in_path);
    for (const auto& c : clusters) {
      auto st = c.at("status").get<std::string>();
      if (!status.empty() && st != status) continue;
      std::printf("%s\t%s\tsize=%llu\tteam_score=%.4f\tevidence=%zu\n",
                  c.at("id").get<std::string>().c_str(), st.c_str(),
                  static_cast<unsigned long long>(c.at("size").get<std::uint64_t>()),
                  c.at("team_score").get<double>(), c.at("evidence_ids").size());
    }
  } catch (const std::exception& e) {
    std::cerr << "clusters show failed: " << e.what() << "\n";
    return kRuntime;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"livek: live social stream capture, enrichment and corroboration"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run the configured topology over an archive");
  run_cmd->add_option("--config", run.config, "Pipeline config file")->required();
  run_cmd->add_option("--seed", run.seed, "Seed (overrides config)");
  run_cmd->add_option("--out-dir", run.out_dir, "Report directory (overrides config)");
  run_cmd->add_option("--speed", run.speed, "Replay speed: max or a multiplier");
  run_cmd->add_option("--until", run.until, "Stop after this simulated time");

  std::string synth_config, synth_out, synth_seed;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic archive with labels");
  synth_cmd->add_option("--config", synth_config, "Generator config file")->required();
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth_seed, "Seed (overrides config)");

  std::string replay_archive, replay_speed = "max", replay_until;
  auto* replay_cmd = app.add_subcommand("replay", "Print parsed archive posts as JSON lines");
  replay_cmd->add_option("--archive", replay_archive, "Archive file")->required();
  replay_cmd->add_option("--speed", replay_speed, "Replay speed: max or a multiplier");
  replay_cmd->add_option("--until", replay_until, "Stop after this simulated time");

  std::string report_input, report_out, report_cases;
  int report_lag = 21;
  auto* report_cmd = app.add_subcommand("report", "Build report tables from an enriched archive");
  report_cmd->add_option("--input", report_input, "enriched.jsonl")->required();
  report_cmd->add_option("--out-dir", report_out, "Output directory")->required();
  report_cmd->add_option("--cases", report_cases, "Case report feed (JSON lines)");
  report_cmd->add_option("--max-lag", report_lag, "Largest lag in days")->check(CLI::NonNegativeNumber);

  auto* kw_cmd = app.add_subcommand("keywords", "Inspect the keyword set");
  kw_cmd->require_subcommand(1);
  std::string kw_config, kw_audit, kw_at;
  auto* kw_show = kw_cmd->add_subcommand("show", "Keyword set as of a time");
  kw_show->add_option("--config", kw_config, "Pipeline config file")->required();
  kw_show->add_option("--audit", kw_audit, "Promotion audit log (default: <out_dir>/keyword_audit.jsonl)");
  kw_show->add_option("--at", kw_at, "Simulated time (default: end)");

  auto* cl_cmd = app.add_subcommand("clusters", "Inspect event clusters");
  cl_cmd->require_subcommand(1);
  std::string cl_in, cl_status;
  auto* cl_show = cl_cmd->add_subcommand("show", "List exported clusters");
  cl_show->add_option("--in", cl_in, "clusters.json")->required();
  cl_show->add_option("--status", cl_status, "tentative, corroborated or refuted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kValidation;
  }

  if (*run_cmd) return cmd_run(run);
  if (*synth_cmd) return cmd_synth(synth_config, synth_out, synth_seed);
  if (*replay_cmd) return cmd_replay(replay_archive, replay_speed, replay_until);
  if (*report_cmd) return cmd_report(report_input, report_out, report_cases, report_lag);
  if (*kw_show) return cmd_keywords_show(kw_config, kw_audit, kw_at);
  if (*cl_show) return cmd_clusters_show(cl_in, cl_status);
  return kValidation;
}
