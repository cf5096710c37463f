#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "occupant/cli.hpp"
#include "occupant/features.hpp"
#include "occupant/ingest.hpp"
#include "occupant/persona.hpp"

#ifndef OCCUPANT_DEFAULT_DATA_DIR
#define OCCUPANT_DEFAULT_DATA_DIR "data"
#endif

namespace occupant::cli {

fs::path shipped_data_dir() { return OCCUPANT_DEFAULT_DATA_DIR; }

fs::path data_cache_dir() {
  if (const char* env = std::getenv(kDataDirEnv); env && *env) return env;
  if (const char* home = std::getenv("HOME"); home && *home) return fs::path(home) / ".cache" / "occupant";
  return ".occupant-cache";
}

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.url = ingest::kDefaultRecsUrl;
  c.data_path = data_cache_dir() / kRawFileName;
  c.codebook_path = shipped_data_dir() / "codebook.json";
  c.drop_rules_path = shipped_data_dir() / "drop_rules.json";
  c.labels_path = shipped_data_dir() / "labels.json";
  return c;
}

namespace {

const std::vector<std::string> kKeys = {"url",        "data_path", "codebook", "drop_rules",  "labels",
                                        "targets",    "models",    "seed",     "split_fraction", "k",
                                        "stratified", "threads",   "out",      "hyperparams", "formats"};

}  // namespace

void RunConfig::apply_json(const json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw UsageError("unknown config key '" + key + "'");
    }
  }
  try {
    if (j.contains("url")) url = j.at("url").get<std::string>();
    if (j.contains("data_path")) data_path = j.at("data_path").get<std::string>();
    if (j.contains("codebook")) codebook_path = j.at("codebook").get<std::string>();
    if (j.contains("drop_rules")) drop_rules_path = j.at("drop_rules").get<std::string>();
    if (j.contains("labels")) labels_path = j.at("labels").get<std::string>();
    if (j.contains("targets")) targets = j.at("targets").get<std::vector<std::string>>();
    if (j.contains("models")) {
      models.clear();
      for (const auto& m : j.at("models")) models.push_back(learners::parse_model_kind(m.get<std::string>()));
    }
    if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("split_fraction")) split_fraction = j.at("split_fraction").get<double>();
    if (j.contains("k")) k = j.at("k").get<std::size_t>();
    if (j.contains("stratified")) stratified = j.at("stratified").get<bool>();
    if (j.contains("threads")) threads = j.at("threads").get<unsigned>();
    if (j.contains("out")) out_dir = j.at("out").get<std::string>();
    if (j.contains("formats")) formats = j.at("formats").get<std::vector<std::string>>();
    if (j.contains("hyperparams")) {
      json merged = hyperparams.to_json();
      merged.merge_patch(j.at("hyperparams"));
      hyperparams = learners::Hyperparams::from_json(merged);
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid config value: ") + e.what());
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
}

json RunConfig::to_json() const {
  json m = json::array();
  for (auto kind : models) m.push_back(learners::to_string(kind));
  return {{"url", url},
          {"data_path", data_path.string()},
          {"codebook", codebook_path.string()},
          {"drop_rules", drop_rules_path.string()},
          {"labels", labels_path.string()},
          {"targets", targets},
          {"models", m},
          {"seed", seed},
          {"split_fraction", split_fraction},
          {"k", k},
          {"stratified", stratified},
          {"threads", threads},
          {"out", out_dir.string()},
          {"hyperparams", hyperparams.to_json()},
          {"formats", formats}};
}

void RunConfig::validate() const {
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw UsageError("split fraction must lie strictly between 0 and 1");
  }
  if (k < 2) throw UsageError("k must be at least 2");
  for (const auto& t : targets) {
    if (std::find_if(features::kTargetCodes.begin(), features::kTargetCodes.end(),
                     [&](const char* c) { return t == c; }) == features::kTargetCodes.end()) {
      throw UsageError("unknown target '" + t + "'");
    }
  }
  for (const auto& f : formats) persona::parse_format(f);
  try {
    hyperparams.validate();
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
  if (out_dir.empty()) throw UsageError("output directory must not be empty");
}

std::vector<std::string> RunConfig::target_list() const {
  if (!targets.empty()) return targets;
  return {features::kTargetCodes.begin(), features::kTargetCodes.end()};
}

std::vector<learners::ModelKind> RunConfig::model_list() const {
  if (!models.empty()) return models;
  return {learners::kAllModels.begin(), learners::kAllModels.end()};
}

std::string RunConfig::model_digest(const std::string& dataset_digest) const {
  const json j = {{"dataset", dataset_digest},
                  {"hyperparams", hyperparams.to_json()},
                  {"split_fraction", split_fraction},
                  {"k", k},
                  {"stratified", stratified}};
  return sha256_hex(j.dump()).substr(0, 16);
}

}  // namespace occupant::cli
