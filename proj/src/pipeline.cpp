#include "livek/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "livek/analytics/analytics.hpp"
#include "livek/core/text.hpp"
#include "livek/drift/drift.hpp"
#include "livek/ebka/ebka.hpp"
#include "livek/ingest/archive.hpp"
#include "livek/misinfo/misinfo.hpp"
#include "livek/stream/bounded_queue.hpp"
#include "livek/stream/clock.hpp"
#include "livek/stream/durable_log.hpp"
#include "livek/stream/shared_store.hpp"

namespace livek {

nlohmann::json payload_to_json(const Payload& p) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Post>) {
          return {{"post", post_to_json(v)}};
        } else if constexpr (std::is_same_v<T, EnrichedPost>) {
          return {{"enriched", enriched_to_json(v)}};
        } else if constexpr (std::is_same_v<T, PostBatch>) {
          auto posts = nlohmann::json::array();
          for (const auto& e : v.posts) posts.push_back(enriched_to_json(e));
          return {{"batch",
                   {{"window_start", to_epoch(v.window.window_start)},
                    {"window_length", v.window.window_length.count()},
                    {"posts", posts}}}};
        } else {
          return {{"document",
                   {{"name", v.name},
                    {"format", v.format == SourceFormat::sectioned ? "sectioned" : "terms_json"},
                    {"sections", v.sections},
                    {"content", v.content},
                    {"terms", v.terms}}}};
        }
      },
      p);
}

Payload payload_from_json(const nlohmann::json& j) {
  if (j.contains("post")) {
    auto r = parse_post(j.at("post").dump());
    if (auto* rej = std::get_if<Rejection>(&r))
      throw std::invalid_argument("log record: " + std::string(to_string(*rej)));
    return std::get<Post>(std::move(r));
  }
  if (j.contains("enriched")) return enriched_from_json(j.at("enriched"));
  if (j.contains("batch")) {
    const auto& b = j.at("batch");
    PostBatch batch;
    batch.window = {from_epoch(b.at("window_start").get<std::int64_t>()),
                    Duration{b.at("window_length").get<std::int64_t>()}};
    for (const auto& e : b.at("posts")) batch.posts.push_back(enriched_from_json(e));
    return batch;
  }
  const auto& d = j.at("document");
  SourceDocument doc;
  doc.name = d.at("name").get<std::string>();
  doc.format = d.at("format") == "sectioned" ? SourceFormat::sectioned : SourceFormat::terms_json;
  doc.sections = d.at("sections").get<std::vector<std::string>>();
  doc.content = d.at("content").get<std::string>();
  doc.terms = d.at("terms").get<std::vector<std::string>>();
  return doc;
}

namespace {

using Queue = BoundedQueue<Envelope>;

// A log link persists every record it carries; the reader follows the
// writer until the writer closes.
struct LogLink {
  LogLink(const LinkSpec& spec) : log(spec.path, make_options(spec)), start(log.next_offset()) {}

  static LogOptions make_options(const LinkSpec& spec) {
    LogOptions o;
    o.sync_on_append = spec.sync;
    return o;
  }

  void append(const Envelope& e) {
    JsonRecord r;
    r.payload = payload_to_json(e.payload);
    r.key = e.key;
    r.event_time = e.event_time;
    r.ingest_time = e.ingest_time;
    log.append(r);
    std::lock_guard lock(mu);
    cv.notify_all();
  }

  void close() {
    std::lock_guard lock(mu);
    closed = true;
    cv.notify_all();
  }

  DurableLog log;
  std::uint64_t start;
  std::mutex mu;
  std::condition_variable cv;
  bool closed = false;
};

struct Link {
  LinkSpec spec;
  std::shared_ptr<Queue> queue;
  std::shared_ptr<LogLink> log;

  void close() {
    if (queue) queue->close();
    if (log) log->close();
  }
};

class LogLinkSource final : public Source<Envelope> {
 public:
  explicit LogLinkSource(std::shared_ptr<LogLink> link)
      : link_(std::move(link)), reader_(link_->log.follow_from(link_->start)) {}

  std::optional<Envelope> next() override {
    for (;;) {
      if (auto rec = reader_.next()) {
        Envelope e;
        e.payload = payload_from_json(rec->payload);
        e.key = rec->key;
        e.event_time = rec->event_time;
        e.ingest_time = rec->ingest_time;
        e.offset = rec->offset;
        return e;
      }
      std::unique_lock lock(link_->mu);
      if (reader_.position() < link_->log.next_offset()) continue;
      if (link_->closed) {
        lock.unlock();
        if (reader_.position() < link_->log.next_offset()) continue;
        return std::nullopt;
      }
      link_->cv.wait_for(lock, std::chrono::milliseconds(50));
    }
  }

 private:
  std::shared_ptr<LogLink> link_;
  LogReader reader_;
};

class LogLinkSink final : public Sink<Envelope> {
 public:
  explicit LogLinkSink(std::shared_ptr<LogLink> link) : link_(std::move(link)) {}
  void emit(Envelope e) override { link_->append(e); }
  void close() override { link_->close(); }

 private:
  std::shared_ptr<LogLink> link_;
};

class CountingDeadLetter final : public DeadLetterSink<Envelope> {
 public:
  void reject(const Envelope& r, const std::string& job, const std::string& error) override {
    std::lock_guard lock(mu_);
    entries_.push_back({{"job", job}, {"offset", r.offset}, {"error", error}});
  }
  std::vector<nlohmann::json> entries() const {
    std::lock_guard lock(mu_);
    return entries_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<nlohmann::json> entries_;
};

template <typename T>
T& payload_as(Envelope& e, const char* stage) {
  auto* p = std::get_if<T>(&e.payload);
  if (!p) throw std::runtime_error(std::string(stage) + ": unexpected record type");
  return *p;
}

// Everything the processors share. Each piece of mutable state is owned by
// exactly one job in the default topology.
struct Context {
  explicit Context(const PipelineConfig& c)
      : cfg(c),
        event_clock(std::make_shared<ManualClock>()),
        store(event_clock),
        keywords(KeywordSet::with_seeds(c.seed_keywords, c.match_mode)),
        relevance(store, c.retweet_ttl),
        locations(store, c.location_ttl),
        authoritative(AuthoritativeSourceList::load(c.authoritative_sources)),
        tagger(MisinfoKeywordSet{}, &store),
        piggyback(c.promotion.window, c.promotion.slide, c.piggyback_top_k,
                  c.piggyback_min_score, c.piggyback_min_count),
        builder(c.cluster_window, c.min_cluster_size),
        engine(TeamedClassifier::with_default_members(c.event_terms, c.eta), c.match_rule,
               authoritative) {
    if (c.drift_enabled) drift = std::make_unique<DriftAdapter>(keywords, c.promotion, &store);
    gazetteer = Gazetteer::load(c.gazetteer);
    sentiment = c.sentiment_lexicon.empty() ? SentimentLexicon::defaults()
                                            : SentimentLexicon::load(c.sentiment_lexicon);
    groups = c.topic_groups.empty() ? GroupLexicons::defaults()
                                    : GroupLexicons::load(c.topic_groups);
    if (!c.case_reports.empty()) {
      cases = load_case_reports(c.case_reports);
      std::stable_sort(cases.begin(), cases.end(),
                       [](const auto& a, const auto& b) { return a.date < b.date; });
    }
    for (const auto& t : c.misinfo_seed_terms) misinfo.add(t, {});
    for (const auto& t : c.misinfo_confirmed) misinfo.add(t, {});
    for (const auto& t : c.misinfo_tombstones) misinfo.tombstone(t);
    MisinfoTagger::publish(store, misinfo);
    if (!c.evidence.empty()) {
      evidence = load_evidence(c.evidence);
      std::stable_sort(evidence.begin(), evidence.end(),
                       [](const auto& a, const auto& b) { return a.arrived_at < b.arrived_at; });
    }
  }

  const PipelineConfig& cfg;
  std::shared_ptr<ManualClock> event_clock;
  SharedStore store;

  KeywordSet keywords;
  RelevanceFilter relevance;
  std::unique_ptr<DriftAdapter> drift;
  std::uint64_t discarded_empty = 0;

  Gazetteer gazetteer;
  LocationCache locations;
  std::vector<CaseReport> cases;
  std::size_t next_case = 0;
  SentimentLexicon sentiment;
  GroupLexicons groups;

  AuthoritativeSourceList authoritative;
  MisinfoKeywordSet misinfo;
  RefreshResult refresh;
  std::mutex misinfo_mu;
  MisinfoTagger tagger;
  PiggybackDetector piggyback;
  std::vector<WindowTagReport> window_reports;

  ClusterBuilder builder;
  CorroborationEngine engine;
  std::vector<Evidence> evidence;
  std::size_t next_evidence = 0;
  TimePoint watermark{};
  std::deque<EnrichedPost> recent;
  CountAccumulator counts;
  std::unique_ptr<std::ofstream> enriched_out;

  ArchiveReplay* replay = nullptr;
  std::vector<std::filesystem::path> files;
  std::mutex files_mu;

  void wrote(const std::filesystem::path& p) {
    std::lock_guard lock(files_mu);
    files.push_back(p);
  }
  void write(const std::string& name, const std::string& content) {
    auto p = cfg.out_dir / name;
    write_text_file(p, content);
    wrote(p);
  }
};

class ArchiveSource final : public Source<Envelope> {
 public:
  explicit ArchiveSource(Context& ctx) : ctx_(ctx) {}
  void open() override {
    replay_ = std::make_unique<ArchiveReplay>(ctx_.cfg.archive, ctx_.cfg.speed);
    if (ctx_.cfg.until) replay_->stop_after(*ctx_.cfg.until);
    ctx_.replay = replay_.get();
  }
  std::optional<Envelope> next() override {
    auto rec = replay_->next();
    if (!rec) return std::nullopt;
    Envelope e;
    e.key = std::move(rec->key);
    e.event_time = rec->event_time;
    e.ingest_time = rec->ingest_time;
    e.offset = rec->offset;
    e.payload = std::move(rec->payload);
    return e;
  }

 private:
  Context& ctx_;
  std::unique_ptr<ArchiveReplay> replay_;
};

class DocumentSource final : public Source<Envelope> {
 public:
  explicit DocumentSource(Context& ctx) : ctx_(ctx) {}
  std::optional<Envelope> next() override {
    while (pos_ < ctx_.cfg.misinfo_sources.size()) {
      const auto& src = ctx_.cfg.misinfo_sources[pos_++];
      std::ifstream in(src.path, std::ios::binary);
      if (!in) {
        std::lock_guard lock(ctx_.misinfo_mu);
        ++ctx_.refresh.skipped_sources;
        continue;
      }
      std::stringstream buf;
      buf << in.rdbuf();
      SourceDocument doc{src.name, src.format, src.sections, buf.str(), {}};
      Envelope e;
      e.key = src.name;
      e.offset = pos_ - 1;
      e.payload = std::move(doc);
      return e;
    }
    return std::nullopt;
  }

 private:
  Context& ctx_;
  std::size_t pos_ = 0;
};

// Groups consecutive records of one event-time window into a batch. A
// record from a different window (late or early) closes the batch.
class WindowBatchSource final : public Source<Envelope> {
 public:
  WindowBatchSource(std::unique_ptr<Source<Envelope>> inner, Duration length)
      : inner_(std::move(inner)), length_(length) {}
  void open() override { inner_->open(); }
  std::optional<Envelope> next() override {
    std::optional<Envelope> batch;
    if (pending_) {
      batch = start(std::move(*pending_));
      pending_.reset();
    }
    while (auto rec = inner_->next()) {
      auto& post = payload_as<EnrichedPost>(*rec, "window_batch");
      auto w = assign_window(post.post.created_at, length_);
      if (!batch) {
        batch = start(std::move(*rec));
        continue;
      }
      auto& b = std::get<PostBatch>(batch->payload);
      if (w == b.window) {
        b.posts.push_back(std::move(post));
        continue;
      }
      pending_ = std::move(*rec);
      break;
    }
    return batch;
  }

 private:
  Envelope start(Envelope rec) {
    auto& post = payload_as<EnrichedPost>(rec, "window_batch");
    Envelope out;
    PostBatch b;
    b.window = assign_window(post.post.created_at, length_);
    out.event_time = b.window.window_start;
    out.ingest_time = rec.ingest_time;
    out.offset = batches_++;
    b.posts.push_back(std::move(post));
    out.payload = std::move(b);
    return out;
  }

  std::unique_ptr<Source<Envelope>> inner_;
  Duration length_;
  std::optional<Envelope> pending_;
  std::uint64_t batches_ = 0;
};

class UnbatchSink final : public Sink<Envelope> {
 public:
  explicit UnbatchSink(std::unique_ptr<Sink<Envelope>> inner) : inner_(std::move(inner)) {}
  void open() override { inner_->open(); }
  void emit(Envelope e) override {
    if (auto* b = std::get_if<PostBatch>(&e.payload)) {
      for (auto& p : b->posts) {
        Envelope out;
        out.key = std::to_string(p.post.id);
        out.event_time = p.post.created_at;
        out.ingest_time = e.ingest_time;
        out.offset = offset_++;
        out.payload = std::move(p);
        inner_->emit(std::move(out));
      }
      return;
    }
    inner_->emit(std::move(e));
  }
  void close() override { inner_->close(); }

 private:
  std::unique_ptr<Sink<Envelope>> inner_;
  std::uint64_t offset_ = 0;
};

class MisinfoStoreSink final : public Sink<Envelope> {
 public:
  explicit MisinfoStoreSink(Context& ctx) : ctx_(ctx) {}
  void emit(Envelope e) override {
    auto& doc = payload_as<SourceDocument>(e, "misinfo_keyword_store");
    std::lock_guard lock(ctx_.misinfo_mu);
    for (const auto& t : doc.terms)
      if (ctx_.misinfo.add(t, {})) ctx_.refresh.added.push_back(normalize_term(t));
    ctx_.misinfo.source_versions()[doc.name] = {};
  }
  void close() override {
    std::lock_guard lock(ctx_.misinfo_mu);
    MisinfoTagger::publish(ctx_.store, ctx_.misinfo);
  }

 private:
  Context& ctx_;
};

std::string jsonl(const std::vector<nlohmann::json>& items) {
  std::string out;
  for (const auto& j : items) out += j.dump() + "\n";
  return out;
}

void flush_clusters(Context& ctx, std::vector<EventCluster> clusters) {
  for (auto& c : clusters) ctx.engine.add_cluster(std::move(c));
}

void ingest_evidence_until(Context& ctx, std::optional<TimePoint> limit) {
  while (ctx.next_evidence < ctx.evidence.size() &&
         (!limit || ctx.evidence[ctx.next_evidence].arrived_at <= *limit))
    ctx.engine.ingest_evidence(ctx.evidence[ctx.next_evidence++]);
}

void register_all(JobFactory<Envelope>& f, Context& ctx,
                  std::map<std::string, Link>& links) {
  auto link_of = [&links](const nlohmann::json& d) -> Link& {
    auto name = d.value("link", std::string{});
    auto it = links.find(name);
    if (it == links.end()) throw JobStartupError("unknown link '" + name + "'");
    return it->second;
  };
  auto link_source = [link_of](const nlohmann::json& d) -> std::unique_ptr<Source<Envelope>> {
    auto& l = link_of(d);
    if (l.queue) return std::make_unique<QueueSource<Envelope>>(l.queue);
    return std::make_unique<LogLinkSource>(l.log);
  };
  auto link_sink = [link_of](const nlohmann::json& d) -> std::unique_ptr<Sink<Envelope>> {
    auto& l = link_of(d);
    if (l.queue) return std::make_unique<QueueSink<Envelope>>(l.queue);
    return std::make_unique<LogLinkSink>(l.log);
  };

  f.register_source("archive", [&ctx](const nlohmann::json&) {
    return std::make_unique<ArchiveSource>(ctx);
  });
  f.register_source("document_snapshot", [&ctx](const nlohmann::json&) {
    return std::make_unique<DocumentSource>(ctx);
  });
  f.register_source("link", link_source);
  f.register_source("window_batch", [&ctx, link_source](const nlohmann::json& d) {
    Duration len = ctx.cfg.misinfo_window;
    if (d.contains("seconds")) len = Duration{d.at("seconds").get<std::int64_t>()};
    return std::make_unique<WindowBatchSource>(link_source(d), len);
  });

  f.register_sink("link", link_sink);
  f.register_sink("unbatch", [link_sink](const nlohmann::json& d) {
    return std::make_unique<UnbatchSink>(link_sink(d));
  });
  f.register_sink("misinfo_keyword_store", [&ctx](const nlohmann::json&) {
    return std::make_unique<MisinfoStoreSink>(ctx);
  });
  f.register_sink("discard", [](const nlohmann::json&) {
    return std::make_unique<DiscardSink<Envelope>>();
  });

  using Fin = std::vector<std::function<void()>>;

  f.register_processor("normalize", [&ctx](const nlohmann::json&, Fin&) {
    return Processor<Envelope>([&ctx](Envelope& e) {
      auto& post = payload_as<Post>(e, "normalize");
      post.text = collapse_whitespace(post.text);
      if (post.text.empty()) {
        ++ctx.discarded_empty;
        return Verdict::drop;
      }
      ctx.event_clock->advance_to(post.created_at);
      EnrichedPost ep;
      ep.post = std::move(post);
      ep.refresh_derived();
      e.payload = std::move(ep);
      return Verdict::keep;
    });
  });
  f.register_processor("drift_adapt", [&ctx](const nlohmann::json&, Fin& fin) {
    fin.push_back([&ctx] {
      std::vector<nlohmann::json> audit;
      if (ctx.drift)
        for (const auto& a : ctx.drift->audit()) audit.push_back(a.to_json());
      ctx.write("keyword_audit.jsonl", jsonl(audit));
      ctx.write("keywords.json", ctx.keywords.to_json().dump(2) + "\n");
    });
    return Processor<Envelope>([&ctx](Envelope& e) {
      auto& ep = payload_as<EnrichedPost>(e, "drift_adapt");
      if (ctx.drift) ep.newly_promoted = ctx.drift->observe(ep);
      return Verdict::keep;
    });
  });
  f.register_processor("relevance", [&ctx](const nlohmann::json& d, Fin&) {
    bool drop = d.value("drop_irrelevant", false);
    return Processor<Envelope>([&ctx, drop](Envelope& e) {
      auto& ep = payload_as<EnrichedPost>(e, "relevance");
      ep.matched_terms = ctx.relevance.match(ep.post, ep.lowered, ctx.keywords);
      ep.relevance = !ep.matched_terms.empty();
      return drop && !ep.relevance ? Verdict::drop : Verdict::keep;
    });
  });
  f.register_processor("case_reports", [&ctx](const nlohmann::json&, Fin&) {
    return Processor<Envelope>([&ctx](Envelope& e) {
      auto& ep = payload_as<EnrichedPost>(e, "case_reports");
      while (ctx.next_case < ctx.cases.size() &&
             ctx.cases[ctx.next_case].date <= ep.post.created_at)
        absorb_authoritative_locations(ctx.cases[ctx.next_case++], ctx.locations);
      return Verdict::keep;
    });
  });
  f.register_processor("locations", [&ctx](const nlohmann::json&, Fin&) {
    return Processor<Envelope>([&ctx](Envelope& e) {
      auto& ep = payload_as<EnrichedPost>(e, "locations");
      ep.locations = extract_locations_lowered(ep.lowered, ctx.gazetteer, ctx.locations,
                                               ep.post.created_at);
      return Verdict::keep;
    });
  });
  f.register_processor("sentiment", [&ctx](const nlohmann::json&, Fin&) {
    return Processor<Envelope>([&ctx](Envelope& e) {
      auto& ep = payload_as<EnrichedPost>(e, "sentiment");
      ep.sentiment = ctx.sentiment.score_lowered(ep.lowered);
      return Verdict::keep;
    });
  });
  f.register_processor("topic_groups", [&ctx](const nlohmann::json&, Fin&) {
    return Processor<Envelope>([&ctx](Envelope& e) {
      auto& ep = payload_as<EnrichedPost>(e, "topic_groups");
      ep.topic_groups = ctx.groups.assign_lowered(ep.lowered);
      return Verdict::keep;
    });
  });
  f.register_processor("authoritative", [&ctx](const nlohmann::json&, Fin&) {
    return Processor<Envelope>([&ctx](Envelope& e) {
      tag_authoritative(payload_as<EnrichedPost>(e, "authoritative"), ctx.authoritative);
      return Verdict::keep;
    });
  });
  f.register_processor("extract_misinfo_terms", [](const nlohmann::json&, Fin&) {
    return Processor<Envelope>([](Envelope& e) {
      auto& doc = payload_as<SourceDocument>(e, "extract_misinfo_terms");
      if (doc.format == SourceFormat::terms_json) {
        auto j = nlohmann::json::parse(doc.content);
        doc.terms = j.at("terms").get<std::vector<std::string>>();
      } else {
        doc.terms = extract_misinfo_terms(doc.content, doc.sections).terms;
      }
      return Verdict::keep;
    });
  });
  f.register_processor("misinfo_tag", [&ctx](const nlohmann::json&, Fin& fin) {
    fin.push_back([&ctx] {
      std::string csv = WindowTagReport::csv_header() + "\n";
      for (const auto& r : ctx.window_reports) csv += r.csv_row() + "\n";
      ctx.write("window_reports.csv", csv);
      ctx.write("misinfo_keywords.json", ctx.tagger.view().to_json().dump(2) + "\n");
    });
    return Processor<Envelope>([&ctx](Envelope& e) {
      auto& b = payload_as<PostBatch>(e, "misinfo_tag");
      ctx.window_reports.push_back(ctx.tagger.tag(b.posts, b.window));
      return Verdict::keep;
    });
  });
  f.register_processor("piggyback", [&ctx](const nlohmann::json&, Fin& fin) {
    fin.push_back([&ctx] {
      std::vector<nlohmann::json> rows;
      for (const auto& c : ctx.piggyback.log())
        rows.push_back({{"term", c.term},
                        {"score", c.score},
                        {"detected_at", format_iso8601(c.detected_at)},
                        {"status", "candidate"}});
      ctx.write("piggyback_candidates.jsonl", jsonl(rows));
    });
    return Processor<Envelope>([&ctx](Envelope& e) {
      auto& b = payload_as<PostBatch>(e, "piggyback");
      for (const auto& p : b.posts) ctx.piggyback.observe(p, ctx.tagger.view());
      return Verdict::keep;
    });
  });
  f.register_processor("analytics", [&ctx](const nlohmann::json&, Fin& fin) {
    fin.push_back([&ctx] {
      auto bundle = make_report(ctx.counts, ctx.cases, ctx.cfg.max_lag_days);
      for (const auto& p : emit_report(bundle, ctx.cfg.out_dir)) ctx.wrote(p);
    });
    return Processor<Envelope>([&ctx](Envelope& e) {
      ctx.counts.add(payload_as<EnrichedPost>(e, "analytics"));
      return Verdict::keep;
    });
  });
  f.register_processor("corroborate", [&ctx](const nlohmann::json&, Fin& fin) {
    fin.push_back([&ctx] {
      flush_clusters(ctx, ctx.builder.flush_all());
      ingest_evidence_until(ctx, std::nullopt);
      ctx.engine.rescore();
      ctx.write("clusters.json", ctx.engine.export_clusters().dump(2) + "\n");
      ctx.write("cluster_changes.csv", ctx.engine.change_log_csv());
      nlohmann::json team = nlohmann::json::array();
      auto w = ctx.engine.team().weights();
      for (std::size_t i = 0; i < w.size(); ++i)
        team.push_back({{"member", ctx.engine.team().member(i).id()}, {"weight", w[i]}});
      ctx.write("team.json", team.dump(2) + "\n");
    });
    return Processor<Envelope>([&ctx](Envelope& e) {
      auto& ep = payload_as<EnrichedPost>(e, "corroborate");
      ctx.watermark = std::max(ctx.watermark, ep.post.created_at);
      if (!ep.newly_promoted.empty()) {
        for (const auto& term : ep.newly_promoted) {
          std::vector<EnrichedPost> trend;
          for (const auto& r : ctx.recent)
            if (std::find(r.matched_terms.begin(), r.matched_terms.end(), term) !=
                    r.matched_terms.end() ||
                term_matches(r.lowered, term, MatchMode::substring))
              trend.push_back(r);
          if (trend.empty()) trend.push_back(ep);
          add_trend_member(ctx.engine.team(), trend, ctx.cfg.trend_member_terms);
        }
      }
      ctx.recent.push_back(ep);
      if (ctx.recent.size() > 512) ctx.recent.pop_front();
      ctx.builder.add(ep);
      flush_clusters(ctx, ctx.builder.flush(ctx.watermark));
      ingest_evidence_until(ctx, ctx.watermark);
      return Verdict::keep;
    });
  });
  f.register_processor("enriched_archive", [&ctx](const nlohmann::json&, Fin& fin) {
    if (ctx.cfg.write_enriched) {
      auto p = ctx.cfg.out_dir / "enriched.jsonl";
      ctx.enriched_out = std::make_unique<std::ofstream>(p, std::ios::binary | std::ios::trunc);
      if (!*ctx.enriched_out) throw JobStartupError("cannot write " + p.string());
      fin.push_back([&ctx, p] {
        ctx.enriched_out->flush();
        if (!*ctx.enriched_out) throw std::runtime_error("write failed: " + p.string());
        ctx.enriched_out.reset();
        ctx.wrote(p);
      });
    }
    return Processor<Envelope>([&ctx](Envelope& e) {
      if (ctx.enriched_out)
        *ctx.enriched_out << enriched_to_json(payload_as<EnrichedPost>(e, "enriched_archive")).dump()
                          << '\n';
      return Verdict::keep;
    });
  });
}

struct Running {
  JobReport report;
  std::exception_ptr error;
};

void run_phase(std::vector<Job<Envelope>>& jobs, std::map<std::string, Link>& links,
               std::vector<JobReport>& reports) {
  std::vector<Running> results(jobs.size());
  std::vector<std::thread> threads;
  std::stop_source stop;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    threads.emplace_back([&, i] {
      try {
        results[i].report = execute_job(jobs[i], stop.get_token());
      } catch (...) {
        results[i].error = std::current_exception();
        stop.request_stop();
        for (auto& [_, l] : links) l.close();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& r : results)
    if (r.error) std::rethrow_exception(r.error);
  for (auto& r : results) reports.push_back(r.report);
}

nlohmann::json summary_json(const RunSummary& s, const Context& ctx) {
  nlohmann::json jobs = nlohmann::json::array();
  for (const auto& r : s.jobs)
    jobs.push_back({{"name", r.name},
                    {"records_in", r.records_in},
                    {"records_out", r.records_out},
                    {"dropped", r.dropped},
                    {"errors", r.errors}});
  nlohmann::json reasons = nlohmann::json::object();
  for (const auto& [k, v] : s.replay.by_reason) reasons[std::string(to_string(k))] = v;
  return {{"jobs", jobs},
          {"replay",
           {{"lines", s.replay.lines},
            {"emitted", s.replay.emitted},
            {"rejected", s.replay.rejected},
            {"by_reason", reasons}}},
          {"discarded_empty", ctx.discarded_empty},
          {"dead_letters", s.dead_letters},
          {"windows", {{"count", ctx.window_reports.size()},
                       {"posts_in", s.window_posts_in},
                       {"tagged", s.window_tagged}}},
          {"keywords", {{"total", ctx.keywords.size()}, {"promoted", s.promoted}}},
          {"misinformation",
           {{"terms", ctx.misinfo.size()},
            {"added_from_sources", ctx.refresh.added},
            {"skipped_sources", ctx.refresh.skipped_sources}}},
          {"clusters", s.clusters},
          {"evidence",
           {{"stored", ctx.engine.evidence().size()},
            {"rejected", ctx.engine.rejected_evidence()}}},
          {"location_reports_ignored", ctx.locations.ignored_reports()}};
}

}  // namespace

RunSummary run_pipeline(const PipelineConfig& input) {
  auto t0 = std::chrono::steady_clock::now();
  PipelineConfig cfg = input;
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + cfg.out_dir.string() + ": " + ec.message());
  if (cfg.archive.empty()) {
    if (!cfg.synthetic) throw ValidationError({"archive: is required"});
    auto corpus = generate_synthetic(*cfg.synthetic);
    cfg.archive = write_corpus(corpus, cfg.out_dir / "corpus").first;
  }

  Context ctx(cfg);
  std::map<std::string, Link> links;
  for (const auto& l : cfg.topology.links) {
    Link link{l, nullptr, nullptr};
    if (l.kind == "log") link.log = std::make_shared<LogLink>(l);
    else link.queue = std::make_shared<Queue>(l.capacity);
    links.emplace(l.name, std::move(link));
  }
  JobFactory<Envelope> factory;
  register_all(factory, ctx, links);

  CountingDeadLetter dead;
  std::vector<Job<Envelope>> bootstrap, stream;
  std::vector<std::string> problems;
  for (const auto& spec : cfg.topology.jobs) {
    try {
      auto job = factory.resolve(spec);
      job.dead_letter = &dead;
      (spec.phase == "bootstrap" ? bootstrap : stream).push_back(std::move(job));
    } catch (const JobStartupError& e) {
      problems.push_back(std::string("topology: ") + e.what());
    }
  }
  if (!problems.empty()) throw ValidationError(problems);

  RunSummary summary;
  run_phase(bootstrap, links, summary.jobs);
  run_phase(stream, links, summary.jobs);

  if (ctx.replay) summary.replay = ctx.replay->stats();
  auto dl = dead.entries();
  summary.dead_letters = dl.size();
  for (const auto& r : ctx.window_reports) {
    summary.window_posts_in += r.posts_in;
    summary.window_tagged += r.tagged;
  }
  summary.clusters = ctx.engine.clusters().size();
  summary.promoted = ctx.drift ? ctx.drift->audit().size() : 0;
  ctx.write("dead_letters.jsonl", jsonl(dl));
  ctx.write("stats.json", summary_json(summary, ctx).dump(2) + "\n");
  summary.files = ctx.files;
  std::sort(summary.files.begin(), summary.files.end());
  summary.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return summary;
}

}  // namespace livek
