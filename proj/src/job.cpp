#include "livek/stream/job.hpp"

namespace livek {

JobSpec JobSpec::from_json(const nlohmann::json& j) {
  JobSpec spec;
  if (!j.is_object()) throw std::invalid_argument("job spec must be an object");
  spec.name = j.at("name").get<std::string>();
  if (spec.name.empty()) throw std::invalid_argument("job name is empty");
  spec.ingest = j.at("ingest");
  if (j.contains("processors")) {
    for (const auto& p : j.at("processors")) spec.processors.push_back(p);
  }
  spec.emit = j.at("emit");
  spec.phase = j.value("phase", "stream");
  if (spec.phase != "stream" && spec.phase != "bootstrap")
    throw std::invalid_argument("job '" + spec.name + "': unknown phase '" +
                                spec.phase + "'");
  return spec;
}

nlohmann::json JobSpec::to_json() const {
  return {{"name", name},
          {"ingest", ingest},
          {"processors", processors},
          {"emit", emit},
          {"phase", phase}};
}

}  // namespace livek
