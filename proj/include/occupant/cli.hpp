#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "occupant/evaluation.hpp"
#include "occupant/learners.hpp"

namespace occupant::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr const char* kDataDirEnv = "OCCUPANT_DATA_DIR";
inline constexpr const char* kRawFileName = "recs2015_public_v4.csv";

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Directory holding the shipped codebook, drop rules and label map.
fs::path shipped_data_dir();
/// $OCCUPANT_DATA_DIR, else ~/.cache/occupant.
fs::path data_cache_dir();

struct RunConfig {
  std::string url;
  fs::path data_path;  // raw survey CSV
  fs::path codebook_path;
  fs::path drop_rules_path;
  fs::path labels_path;
  std::vector<std::string> targets;       // empty = all sixteen
  std::vector<learners::ModelKind> models;  // empty = all six
  std::uint64_t seed = kDefaultSeed;
  double split_fraction = 0.8;
  std::size_t k = 10;
  bool stratified = false;
  unsigned threads = 0;  // 0 = hardware concurrency
  fs::path out_dir = "out";
  learners::Hyperparams hyperparams;
  std::vector<std::string> formats = {"json", "markdown"};

  static RunConfig defaults();
  /// Overlays the keys present in `j`; unknown keys are a UsageError.
  void apply_json(const json& j);
  json to_json() const;
  /// Throws UsageError on out-of-range settings or unknown names.
  void validate() const;

  std::vector<std::string> target_list() const;
  std::vector<learners::ModelKind> model_list() const;

  fs::path prepared_dir() const { return out_dir / "prepared"; }
  fs::path prepared_dataset() const { return prepared_dir() / "dataset.csv"; }
  fs::path models_dir() const { return out_dir / "models"; }
  fs::path evaluation_dir() const { return out_dir / "evaluation"; }

  /// Digest of every setting that changes a trained model, bound to the
  /// prepared dataset's content digest.
  std::string model_digest(const std::string& dataset_digest) const;
};

/// Model snapshots on disk, one file per (target, model, seed, digest).
class SnapshotStore {
 public:
  explicit SnapshotStore(fs::path dir) : dir_(std::move(dir)) {}

  fs::path path_for(const std::string& target, learners::ModelKind model, std::uint64_t seed,
                    const std::string& digest) const;
  void save(const std::string& target, learners::ModelKind model, std::uint64_t seed, const std::string& digest,
            const evaluation::CachedCell& cell) const;
  /// nullopt when no snapshot exists. With `allow_mismatch`, a snapshot with
  /// another digest for the same (target, model, seed) is accepted. Throws
  /// ParseError for corrupt files.
  std::optional<evaluation::CachedCell> load(const std::string& target, learners::ModelKind model,
                                             std::uint64_t seed, const std::string& digest,
                                             bool allow_mismatch = false,
                                             fs::path* found = nullptr) const;

  const fs::path& dir() const noexcept { return dir_; }

 private:
  fs::path dir_;
};

/// Parses argv and runs one command, returning the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace occupant::cli
