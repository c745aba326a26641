#include <cmath>
#include <sstream>

#include "dnas/error.hpp"
#include "dnas/search.hpp"
#include "json_codec.hpp"

namespace dnas {

using nlohmann::json;

bool TraceRecord::equal_except_time(const TraceRecord& o) const {
  return iteration == o.iteration && alpha == o.alpha && gradient == o.gradient &&
         alpha_steps == o.alpha_steps && samples == o.samples &&
         expected_config == o.expected_config && weights_trained == o.weights_trained &&
         scratch_trainings == o.scratch_trainings && max_alpha_change == o.max_alpha_change;
}

void SearchTrace::append(TraceRecord record) {
  if (!records_.empty() && record.iteration <= records_.back().iteration) {
    throw DomainError("trace iterations must be strictly increasing");
  }
  records_.push_back(std::move(record));
}

bool SearchTrace::equal_except_time(const SearchTrace& other) const {
  if (records_.size() != other.records_.size()) return false;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!records_[i].equal_except_time(other.records_[i])) return false;
  }
  return true;
}

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite value in trace field ") + what);
}

json record_to_json(const TraceRecord& r) {
  json samples = json::array();
  for (const auto& s : r.samples) {
    require_finite(s.loss.combined, "combined");
    require_finite(s.loss.ce, "ce");
    json js = {{"step", s.step}, {"config", s.config_id}, {"loss", loss_to_json(s.loss)}};
    js["weight_seed"] = s.weight_seed ? json(*s.weight_seed) : json(nullptr);
    js["validation_accuracy"] =
        s.validation_accuracy ? json(*s.validation_accuracy) : json(nullptr);
    samples.push_back(std::move(js));
  }
  json j;
  j["iteration"] = r.iteration;
  j["alpha"] = alpha_to_json(r.alpha);
  j["gradient"] = r.gradient.per_layer.empty() ? json(nullptr) : alpha_to_json(r.gradient);
  j["alpha_steps"] = r.alpha_steps;
  j["expected_config"] = r.expected_config ? json(*r.expected_config) : json(nullptr);
  j["weights_trained"] = r.weights_trained;
  j["scratch_trainings"] = r.scratch_trainings;
  j["max_alpha_change"] = r.max_alpha_change;
  j["wall_ms"] = r.wall_ms;
  j["samples"] = std::move(samples);
  return j;
}

TraceRecord record_from_json(const json& j) {
  TraceRecord r;
  r.iteration = j.at("iteration").get<int>();
  r.alpha = alpha_from_json(j.at("alpha"));
  if (!j.at("gradient").is_null()) r.gradient = alpha_from_json(j.at("gradient"));
  r.alpha_steps = j.at("alpha_steps").get<int>();
  if (!j.at("expected_config").is_null()) {
    r.expected_config = j.at("expected_config").get<std::string>();
  }
  r.weights_trained = j.at("weights_trained").get<bool>();
  r.scratch_trainings = j.at("scratch_trainings").get<int>();
  r.max_alpha_change = j.at("max_alpha_change").get<double>();
  r.wall_ms = j.at("wall_ms").get<double>();
  for (const auto& js : j.at("samples")) {
    SampleRecord s;
    s.step = js.at("step").get<int>();
    s.config_id = js.at("config").get<std::string>();
    s.loss = loss_from_json(js.at("loss"));
    if (!js.at("weight_seed").is_null()) s.weight_seed = js.at("weight_seed").get<std::uint64_t>();
    if (!js.at("validation_accuracy").is_null()) {
      s.validation_accuracy = js.at("validation_accuracy").get<double>();
    }
    r.samples.push_back(std::move(s));
  }
  return r;
}

}  // namespace

std::string SearchTrace::to_jsonl() const {
  std::string out;
  for (const auto& r : records_) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

SearchTrace SearchTrace::from_jsonl(const std::string& text) {
  SearchTrace t;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      t.append(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ConfigError("trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return t;
}

}  // namespace dnas
