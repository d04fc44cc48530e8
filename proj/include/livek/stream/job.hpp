#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <stop_token>
#include <string>
#include <vector>

#include "json.hpp"
#include "livek/stream/bounded_queue.hpp"

namespace livek {

enum class Verdict { keep, drop };

// A process primitive mutates the record in place and decides whether it
// continues down the chain.
template <typename R>
using Processor = std::function<Verdict(R&)>;

template <typename R, typename F>
Processor<R> map_processor(F fn) {
  return [fn = std::move(fn)](R& r) {
    fn(r);
    return Verdict::keep;
  };
}

template <typename R, typename P>
Processor<R> filter_processor(P pred) {
  return [pred = std::move(pred)](R& r) {
    return pred(static_cast<const R&>(r)) ? Verdict::keep : Verdict::drop;
  };
}

// chain([p1..pN])(x) = pN(...p1(x)); a drop at stage i skips the rest.
template <typename R>
Processor<R> chain(std::vector<Processor<R>> stages) {
  return [stages = std::move(stages)](R& r) {
    for (const auto& p : stages)
      if (p(r) == Verdict::drop) return Verdict::drop;
    return Verdict::keep;
  };
}

template <typename R>
class Source {
 public:
  virtual ~Source() = default;
  // Throws on an unreachable source; called once before the first next().
  virtual void open() {}
  virtual std::optional<R> next() = 0;
};

template <typename R>
class Sink {
 public:
  virtual ~Sink() = default;
  virtual void open() {}
  virtual void emit(R record) = 0;
  virtual void close() {}
};

template <typename R>
class DeadLetterSink {
 public:
  virtual ~DeadLetterSink() = default;
  virtual void reject(const R& record, const std::string& job,
                      const std::string& error) = 0;
};

template <typename R>
class QueueSource final : public Source<R> {
 public:
  explicit QueueSource(std::shared_ptr<BoundedQueue<R>> q) : q_(std::move(q)) {}
  std::optional<R> next() override { return q_->pop(); }

 private:
  std::shared_ptr<BoundedQueue<R>> q_;
};

template <typename R>
class QueueSink final : public Sink<R> {
 public:
  explicit QueueSink(std::shared_ptr<BoundedQueue<R>> q) : q_(std::move(q)) {}
  void emit(R record) override { q_->push(std::move(record)); }
  void close() override { q_->close(); }

 private:
  std::shared_ptr<BoundedQueue<R>> q_;
};

template <typename R>
class VectorSource final : public Source<R> {
 public:
  explicit VectorSource(std::vector<R> items) : items_(std::move(items)) {}
  std::optional<R> next() override {
    if (pos_ >= items_.size()) return std::nullopt;
    return std::move(items_[pos_++]);
  }

 private:
  std::vector<R> items_;
  std::size_t pos_ = 0;
};

template <typename R>
class VectorSink final : public Sink<R> {
 public:
  void emit(R record) override { items.push_back(std::move(record)); }
  std::vector<R> items;
};

template <typename R>
class DiscardSink final : public Sink<R> {
 public:
  void emit(R) override {}
};

template <typename R>
class CollectingDeadLetter final : public DeadLetterSink<R> {
 public:
  struct Entry {
    R record;
    std::string job;
    std::string error;
  };
  void reject(const R& record, const std::string& job,
              const std::string& error) override {
    entries.push_back({record, job, error});
  }
  std::vector<Entry> entries;
};

class JobStartupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct JobReport {
  std::string name;
  std::uint64_t records_in = 0;
  std::uint64_t records_out = 0;
  std::uint64_t dropped = 0;
  std::uint64_t errors = 0;
};

// Declarative job definition. Descriptors are JSON objects with a "type"
// field resolved by a JobFactory at start.
struct JobSpec {
  std::string name;
  nlohmann::json ingest;
  std::vector<nlohmann::json> processors;
  nlohmann::json emit;
  std::string phase = "stream";  // "bootstrap" jobs finish before "stream" jobs start

  static JobSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// A resolved job ready to run.
template <typename R>
struct Job {
  std::string name;
  std::unique_ptr<Source<R>> source;
  std::vector<Processor<R>> processors;
  std::unique_ptr<Sink<R>> sink;
  DeadLetterSink<R>* dead_letter = nullptr;  // optional, not owned
  // Run after the source is exhausted and before the sink closes.
  std::vector<std::function<void()>> finalizers;
};

// The ingest-process-emit loop. Records run through the chain one at a
// time in arrival order. A processor exception routes the record to the
// dead-letter sink and the job carries on.
template <typename R>
JobReport execute_job(Job<R>& job, std::stop_token stop = {}) {
  JobReport report;
  report.name = job.name;
  if (!job.source || !job.sink)
    throw JobStartupError("job '" + job.name + "' has no source or sink");
  try {
    job.source->open();
    job.sink->open();
  } catch (const std::exception& e) {
    throw JobStartupError("job '" + job.name + "': " + e.what());
  }
  auto pipeline = chain(job.processors);
  while (!stop.stop_requested()) {
    auto record = job.source->next();
    if (!record) break;
    ++report.records_in;
    Verdict verdict;
    try {
      verdict = pipeline(*record);
    } catch (const std::exception& e) {
      ++report.errors;
      if (job.dead_letter) job.dead_letter->reject(*record, job.name, e.what());
      continue;
    }
    if (verdict == Verdict::drop) {
      ++report.dropped;
      continue;
    }
    job.sink->emit(std::move(*record));
    ++report.records_out;
  }
  for (auto& f : job.finalizers) f();
  job.sink->close();
  return report;
}

// Maps descriptor types to constructors. Unknown types fail at resolve
// time, before any record flows.
template <typename R>
class JobFactory {
 public:
  using SourceMaker =
      std::function<std::unique_ptr<Source<R>>(const nlohmann::json&)>;
  using SinkMaker =
      std::function<std::unique_ptr<Sink<R>>(const nlohmann::json&)>;
  // May append finalizers to the job under construction.
  using ProcessorMaker = std::function<Processor<R>(
      const nlohmann::json&, std::vector<std::function<void()>>&)>;

  void register_source(std::string type, SourceMaker m) {
    sources_[std::move(type)] = std::move(m);
  }
  void register_sink(std::string type, SinkMaker m) {
    sinks_[std::move(type)] = std::move(m);
  }
  void register_processor(std::string type, ProcessorMaker m) {
    processors_[std::move(type)] = std::move(m);
  }

  bool has_source(const std::string& t) const { return sources_.count(t) > 0; }
  bool has_sink(const std::string& t) const { return sinks_.count(t) > 0; }
  bool has_processor(const std::string& t) const {
    return processors_.count(t) > 0;
  }

  Job<R> resolve(const JobSpec& spec) const {
    Job<R> job;
    job.name = spec.name;
    job.source = lookup(sources_, spec.ingest, "ingest", spec.name)(spec.ingest);
    for (const auto& p : spec.processors)
      job.processors.push_back(
          lookup(processors_, p, "processor", spec.name)(p, job.finalizers));
    job.sink = lookup(sinks_, spec.emit, "emit", spec.name)(spec.emit);
    return job;
  }

 private:
  template <typename Map>
  static const typename Map::mapped_type& lookup(const Map& m,
                                                 const nlohmann::json& d,
                                                 const char* what,
                                                 const std::string& job) {
    std::string type = d.is_object() ? d.value("type", "") : "";
    auto it = m.find(type);
    if (it == m.end())
      throw JobStartupError("job '" + job + "': unknown " + what + " type '" +
                            type + "'");
    return it->second;
  }

  std::map<std::string, SourceMaker> sources_;
  std::map<std::string, SinkMaker> sinks_;
  std::map<std::string, ProcessorMaker> processors_;
};

template <typename R>
JobReport execute_job(const JobSpec& spec, const JobFactory<R>& factory,
                      std::stop_token stop = {}) {
  auto job = factory.resolve(spec);
  return execute_job(job, stop);
}

}  // namespace livek
