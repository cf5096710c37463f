#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "occupant/core.hpp"
#include "occupant/features.hpp"
#include "occupant/ingest.hpp"
#include "occupant/learners.hpp"

namespace occupant::evaluation {

using json = nlohmann::json;
using learners::ModelKind;

inline constexpr int kResultsFormatVersion = 1;

/// Assignment of row indices to k folds.
struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignments;  // row -> fold id
  std::uint64_t seed = 0;

  /// Rows of fold i, ascending.
  std::vector<std::size_t> fold(std::size_t i) const;
  /// Rows outside fold i, ascending.
  std::vector<std::size_t> complement(std::size_t i) const;
  std::vector<std::size_t> sizes() const;
};

/// Shuffles 0..n-1 and deals contiguous chunks; the first n % k folds get
/// the extra row. Requires 2 <= k <= n.
FoldPlan kfold(std::size_t n, std::size_t k = 10, std::uint64_t seed = 0);
/// Deals each label's shuffled rows round-robin, continuing where the
/// previous label stopped, so fold sizes still differ by at most one.
FoldPlan stratified_kfold(std::span<const double> labels, std::size_t k, std::uint64_t seed);

double accuracy(std::span<const double> pred, std::span<const double> actual);
double mae(std::span<const double> pred, std::span<const double> actual);
/// 1 - SSres / SStot with the mean of `actual`. Throws DataError when
/// `actual` has zero variance.
double r2(std::span<const double> pred, std::span<const double> actual);

std::vector<double> as_doubles(std::span<const Label> labels);

struct CvResult {
  std::vector<double> fold_accuracy;
  double mean = 0.0;
};

/// Fold i trains on every row outside fold i and is scored on fold i.
/// Fold models are seeded from (seed, fold index).
CvResult cross_validate(ModelKind kind, const Matrix& X, std::span<const double> y, const FoldPlan& plan,
                        const learners::Hyperparams& hp, std::uint64_t seed,
                        learners::FitOptions options = {});

struct MetricsRow {
  std::string target;
  ModelKind model = ModelKind::LDA;
  double train_accuracy = 0.0;  // mean CV fold accuracy on the training split
  double test_accuracy = 0.0;
  double mae = 0.0;
  double r2 = 0.0;  // NaN when the test target has zero variance
  std::vector<double> fold_accuracy;
  std::string status = "ok";  // "ok" or "failed: <reason>"

  bool ok() const { return status == "ok"; }
};

struct ResultsTable {
  std::size_t k = 0;
  std::vector<MetricsRow> rows;

  const MetricsRow* find(const std::string& target, ModelKind model) const;
};

/// A previously trained cell, as restored by a SuiteHooks::load callback.
struct CachedCell {
  learners::TrainedModel model;
  CvResult cv;
};

struct SuiteHooks {
  /// Returns a stored cell or nullopt to train it. Throwing marks the cell
  /// failed without training.
  std::function<std::optional<CachedCell>(const std::string& target, ModelKind model)> load;
  /// Called with each newly trained cell, possibly from several threads.
  std::function<void(const std::string& target, ModelKind model, const CachedCell& cell)> store;
};

struct SuiteOptions {
  std::vector<std::string> targets;  // empty = every spec target
  std::vector<ModelKind> models;     // empty = all six
  std::size_t k = 10;
  bool stratified = false;
  unsigned threads = 1;
  SuiteHooks hooks;
};

/// Derived seeds shared by the suite and by single-cell training commands.
std::uint64_t cell_seed(std::uint64_t master, const std::string& target, ModelKind model);
std::uint64_t fold_seed(std::uint64_t master, const std::string& target);

/// Trains one suite cell from scratch: CV with the target's fold plan,
/// then a refit on every row. Shared by the suite and single-cell training.
CachedCell train_cell(ModelKind kind, const Matrix& X, std::span<const double> y,
                      const std::vector<std::string>& columns, const std::string& target,
                      const learners::Hyperparams& hp, std::uint64_t seed, std::size_t k, bool stratified,
                      unsigned threads = 1);

/// Every (target, model) cell: CV on `train`, then a refit on all of
/// `train` scored on `test`. A failing cell is recorded, not thrown.
ResultsTable evaluate_suite(const ingest::Dataset& train, const ingest::Dataset& test,
                            const features::TargetSpec& spec, const learners::Hyperparams& hp,
                            std::uint64_t seed, const SuiteOptions& options = {});

struct BestEntry {
  std::string target;
  double test_accuracy = 0.0;
  std::vector<ModelKind> accuracy_models;
  double mae = 0.0;
  std::vector<ModelKind> mae_models;
  double r2 = 0.0;  // NaN when no model produced a score
  std::vector<ModelKind> r2_models;
};

struct BestScores {
  std::vector<BestEntry> entries;
  double average_accuracy = 0.0;
  double average_mae = 0.0;
  double average_r2 = 0.0;

  const BestEntry* find(const std::string& target) const;
};

/// Values within this distance of the extremum count as tied winners.
inline constexpr double kTieTolerance = 1e-12;

/// Per-target best test accuracy, MAE and R² over successful rows, with
/// every tied model listed. Throws DataError if no row succeeded.
BestScores best_scores(const ResultsTable& table);

// ------------------------------------------------------------ export

/// Columns: target, model, train_acc, test_acc, mae, r2, status.
void write_results_csv(const ResultsTable& table, const std::filesystem::path& path);
/// Columns: target, best_test_acc, test_acc_models, best_mae, mae_models,
/// best_r2, r2_models; then an AVERAGE row. Model lists are ';'-joined.
void write_best_scores_csv(const BestScores& best, const std::filesystem::path& path);
/// Columns: target, model, fold_0 .. fold_{k-1}.
void write_fold_detail_csv(const ResultsTable& table, const std::filesystem::path& path);

json to_json(const ResultsTable& table);
ResultsTable results_from_json(const json& j);
json to_json(const BestScores& best);
BestScores best_scores_from_json(const json& j);

}  // namespace occupant::evaluation
