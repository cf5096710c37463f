#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "occupant/evaluation.hpp"

namespace occupant::evaluation {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

const MetricsRow* ResultsTable::find(const std::string& target, ModelKind model) const {
  for (const auto& r : rows) {
    if (r.target == target && r.model == model) return &r;
  }
  return nullptr;
}

const BestEntry* BestScores::find(const std::string& target) const {
  for (const auto& e : entries) {
    if (e.target == target) return &e;
  }
  return nullptr;
}

std::uint64_t cell_seed(std::uint64_t master, const std::string& target, ModelKind model) {
  return derive_seed(master, "cell:" + target, learners::to_string(model));
}

std::uint64_t fold_seed(std::uint64_t master, const std::string& target) {
  return derive_seed(master, "folds", target);
}

CachedCell train_cell(ModelKind kind, const Matrix& X, std::span<const double> y,
                      const std::vector<std::string>& columns, const std::string& target,
                      const learners::Hyperparams& hp, std::uint64_t seed, std::size_t k, bool stratified,
                      unsigned threads) {
  const auto fseed = fold_seed(seed, target);
  const FoldPlan plan = stratified ? stratified_kfold(y, k, fseed) : kfold(y.size(), k, fseed);
  const auto cseed = cell_seed(seed, target, kind);
  const learners::FitOptions fo{threads};
  CvResult cv = cross_validate(kind, X, y, plan, hp, cseed, fo);
  auto model = learners::fit(kind, X, y, hp, cseed, columns, fo);
  return {std::move(model), std::move(cv)};
}

ResultsTable evaluate_suite(const ingest::Dataset& train, const ingest::Dataset& test,
                            const features::TargetSpec& spec, const learners::Hyperparams& hp,
                            std::uint64_t seed, const SuiteOptions& options) {
  hp.validate();
  const auto train_parts = features::separate(train, spec);
  const auto test_parts = features::separate(test, spec);
  const auto& columns = train_parts.features.columns();
  if (columns != test_parts.features.columns()) {
    throw DataError("train and test splits have different feature columns");
  }
  const auto codes = spec.codes();
  const std::set<std::string> target_set(codes.begin(), codes.end());
  for (const auto& c : columns) {
    if (target_set.count(c)) throw DataError("target column " + c + " leaked into the features");
  }

  std::vector<std::string> targets = options.targets.empty() ? codes : options.targets;
  for (const auto& t : targets) {
    if (!spec.contains(t)) throw InputError("unknown target " + t);
  }
  std::vector<ModelKind> models(options.models.begin(), options.models.end());
  if (models.empty()) models.assign(learners::kAllModels.begin(), learners::kAllModels.end());

  const Matrix& X = train_parts.features.matrix();
  const Matrix& X_test = test_parts.features.matrix();

  ResultsTable table;
  table.k = options.k;
  for (const auto& t : targets) {
    for (ModelKind m : models) {
      MetricsRow row;
      row.target = t;
      row.model = m;
      table.rows.push_back(row);
    }
  }
  const unsigned inner = table.rows.size() < std::max(1u, options.threads) ? options.threads : 1;

  parallel_for(table.rows.size(), options.threads, [&](std::size_t idx) {
    MetricsRow& row = table.rows[idx];
    try {
      const auto y = train_parts.targets.column(row.target);
      const auto y_test = test_parts.targets.column(row.target);
      std::optional<CachedCell> cell;
      if (options.hooks.load) cell = options.hooks.load(row.target, row.model);
      if (cell) {
        if (cell->model.meta().feature_columns != columns) {
          throw DataError("stored model was trained on different feature columns");
        }
      } else {
        cell.emplace(train_cell(row.model, X, y, columns, row.target, hp, seed, options.k, options.stratified,
                                inner));
        if (options.hooks.store) options.hooks.store(row.target, row.model, *cell);
      }
      const auto pred = as_doubles(learners::predict(cell->model, X_test));
      row.fold_accuracy = cell->cv.fold_accuracy;
      row.train_accuracy = cell->cv.mean;
      row.test_accuracy = accuracy(pred, y_test);
      row.mae = mae(pred, y_test);
      try {
        row.r2 = r2(pred, y_test);
      } catch (const DataError&) {
        row.r2 = kNaN;
      }
    } catch (const std::exception& e) {
      row.status = std::string("failed: ") + e.what();
      row.train_accuracy = row.test_accuracy = row.mae = row.r2 = kNaN;
      row.fold_accuracy.clear();
    }
  });
  return table;
}

BestScores best_scores(const ResultsTable& table) {
  BestScores best;
  std::vector<std::string> order;
  for (const auto& r : table.rows) {
    if (r.ok() && std::find(order.begin(), order.end(), r.target) == order.end()) order.push_back(r.target);
  }
  if (order.empty()) throw DataError("no successful results to rank");

  double sum_acc = 0.0, sum_mae = 0.0, sum_r2 = 0.0;
  std::size_t n_r2 = 0;
  for (const auto& target : order) {
    BestEntry e;
    e.target = target;
    e.test_accuracy = -std::numeric_limits<double>::infinity();
    e.mae = std::numeric_limits<double>::infinity();
    e.r2 = -std::numeric_limits<double>::infinity();
    for (const auto& r : table.rows) {
      if (r.target != target || !r.ok()) continue;
      e.test_accuracy = std::max(e.test_accuracy, r.test_accuracy);
      e.mae = std::min(e.mae, r.mae);
      if (!std::isnan(r.r2)) e.r2 = std::max(e.r2, r.r2);
    }
    const bool has_r2 = std::isfinite(e.r2);
    for (const auto& r : table.rows) {
      if (r.target != target || !r.ok()) continue;
      if (e.test_accuracy - r.test_accuracy <= kTieTolerance) e.accuracy_models.push_back(r.model);
      if (r.mae - e.mae <= kTieTolerance) e.mae_models.push_back(r.model);
      if (has_r2 && !std::isnan(r.r2) && e.r2 - r.r2 <= kTieTolerance) e.r2_models.push_back(r.model);
    }
    if (!has_r2) e.r2 = kNaN;
    sum_acc += e.test_accuracy;
    sum_mae += e.mae;
    if (has_r2) {
      sum_r2 += e.r2;
      ++n_r2;
    }
    best.entries.push_back(std::move(e));
  }
  const auto n = static_cast<double>(best.entries.size());
  best.average_accuracy = sum_acc / n;
  best.average_mae = sum_mae / n;
  best.average_r2 = n_r2 ? sum_r2 / static_cast<double>(n_r2) : kNaN;
  return best;
}

}  // namespace occupant::evaluation
