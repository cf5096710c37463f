#include <algorithm>
#include <fstream>
#include <sstream>

#include "occupant/cli.hpp"

namespace occupant::cli {

namespace {

constexpr int kSnapshotFileVersion = 1;

std::string stem(const std::string& target, learners::ModelKind model, std::uint64_t seed) {
  return target + "__" + learners::to_string(model) + "__s" + std::to_string(seed) + "__";
}

evaluation::CachedCell read_snapshot(const fs::path& path, const std::string& target, learners::ModelKind model) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read snapshot " + path.string());
  try {
    const json j = json::parse(in);
    if (j.value("format_version", 0) != kSnapshotFileVersion) {
      throw ParseError("unsupported snapshot file version in " + path.string());
    }
    if (j.at("target").get<std::string>() != target) {
      throw ParseError("snapshot " + path.string() + " belongs to another target");
    }
    auto trained = learners::TrainedModel::from_json(j.at("model"));
    if (trained.kind() != model) throw ParseError("snapshot " + path.string() + " holds another model kind");
    evaluation::CvResult cv;
    cv.fold_accuracy = j.at("cv").at("fold_accuracy").get<std::vector<double>>();
    cv.mean = j.at("cv").at("mean").get<double>();
    return {std::move(trained), std::move(cv)};
  } catch (const json::exception& e) {
    throw ParseError("corrupt snapshot " + path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace

fs::path SnapshotStore::path_for(const std::string& target, learners::ModelKind model, std::uint64_t seed,
                                 const std::string& digest) const {
  return dir_ / (stem(target, model, seed) + digest + ".json");
}

void SnapshotStore::save(const std::string& target, learners::ModelKind model, std::uint64_t seed,
                         const std::string& digest, const evaluation::CachedCell& cell) const {
  fs::create_directories(dir_);
  const json j = {{"format_version", kSnapshotFileVersion},
                  {"target", target},
                  {"config_digest", digest},
                  {"cv", {{"fold_accuracy", cell.cv.fold_accuracy}, {"mean", cell.cv.mean}}},
                  {"model", cell.model.to_json()}};
  const fs::path path = path_for(target, model, seed, digest);
  const fs::path tmp = path.string() + ".part";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write snapshot " + tmp.string());
    out << j.dump() << '\n';
    if (!out) throw Error("cannot write snapshot " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::optional<evaluation::CachedCell> SnapshotStore::load(const std::string& target, learners::ModelKind model,
                                                          std::uint64_t seed, const std::string& digest,
                                                          bool allow_mismatch, fs::path* found) const {
  fs::path path = path_for(target, model, seed, digest);
  if (!fs::exists(path)) {
    if (!allow_mismatch || !fs::is_directory(dir_)) return std::nullopt;
    const std::string prefix = stem(target, model, seed);
    std::vector<fs::path> candidates;
    for (const auto& entry : fs::directory_iterator(dir_)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind(prefix, 0) == 0 && entry.path().extension() == ".json") candidates.push_back(entry.path());
    }
    if (candidates.empty()) return std::nullopt;
    std::sort(candidates.begin(), candidates.end());
    path = candidates.front();
  }
  if (found) *found = path;
  return read_snapshot(path, target, model);
}

}  // namespace occupant::cli
