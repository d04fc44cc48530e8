#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "livek/enrich/enrich.hpp"
#include "livek/ingest/post.hpp"
#include "livek/pipeline/config.hpp"
#include "livek/stream/job.hpp"
#include "livek/stream/record.hpp"
#include "livek/stream/window.hpp"

namespace livek {

struct PostBatch {
  WindowAssignment window;
  std::vector<EnrichedPost> posts;
};

struct SourceDocument {
  std::string name;
  SourceFormat format = SourceFormat::terms_json;
  std::vector<std::string> sections;
  std::string content;
  std::vector<std::string> terms;  // filled by extraction
};

using Payload = std::variant<Post, EnrichedPost, PostBatch, SourceDocument>;
using Envelope = StreamRecord<Payload>;

// Wire form used by log links.
nlohmann::json payload_to_json(const Payload& p);
Payload payload_from_json(const nlohmann::json& j);

struct RunSummary {
  std::vector<JobReport> jobs;
  ReplayStats replay;
  std::uint64_t dead_letters = 0;
  std::uint64_t window_posts_in = 0;
  std::uint64_t window_tagged = 0;
  std::uint64_t clusters = 0;
  std::uint64_t promoted = 0;
  std::vector<std::filesystem::path> files;
  double seconds = 0.0;
};

// Builds the topology from config, runs bootstrap jobs to completion, then
// every stream job in its own thread until the archive is exhausted (or
// `until` passes), and writes the report bundle into config.out_dir.
// Throws ValidationError for topology problems found before records flow
// and std::runtime_error for failures while running.
RunSummary run_pipeline(const PipelineConfig& config);

}  // namespace livek
