#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "occupant/evaluation.hpp"

namespace occupant::evaluation {

std::vector<std::size_t> FoldPlan::fold(std::size_t i) const {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < assignments.size(); ++r) {
    if (assignments[r] == i) rows.push_back(r);
  }
  return rows;
}

std::vector<std::size_t> FoldPlan::complement(std::size_t i) const {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < assignments.size(); ++r) {
    if (assignments[r] != i) rows.push_back(r);
  }
  return rows;
}

std::vector<std::size_t> FoldPlan::sizes() const {
  std::vector<std::size_t> s(k, 0);
  for (std::size_t a : assignments) ++s[a];
  return s;
}

namespace {

void check_k(std::size_t n, std::size_t k) {
  if (k < 2) throw InputError("fold count must be at least 2");
  if (k > n) throw InputError("fold count " + std::to_string(k) + " exceeds " + std::to_string(n) + " rows");
}

}  // namespace

FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
  check_k(n, k);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  FoldPlan plan{k, std::vector<std::size_t>(n), seed};
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) plan.assignments[order[pos++]] = f;
  }
  return plan;
}

FoldPlan stratified_kfold(std::span<const double> labels, std::size_t k, std::uint64_t seed) {
  const std::size_t n = labels.size();
  check_k(n, k);
  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[labels[i]].push_back(i);
  Rng rng(seed);
  FoldPlan plan{k, std::vector<std::size_t>(n), seed};
  std::size_t pos = 0;
  for (auto& [_, rows] : groups) {
    rng.shuffle(rows);
    for (std::size_t r : rows) plan.assignments[r] = pos++ % k;
  }
  return plan;
}

namespace {

void check_pair(std::span<const double> pred, std::span<const double> actual, std::size_t min_len) {
  if (pred.size() != actual.size()) {
    throw InputError("prediction and actual vectors differ in length (" + std::to_string(pred.size()) +
                     " vs " + std::to_string(actual.size()) + ")");
  }
  if (actual.size() < min_len) throw InputError("metric needs at least " + std::to_string(min_len) + " values");
}

}  // namespace

double accuracy(std::span<const double> pred, std::span<const double> actual) {
  check_pair(pred, actual, 1);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == actual[i];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

double mae(std::span<const double> pred, std::span<const double> actual) {
  check_pair(pred, actual, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(actual[i] - pred[i]);
  return sum / static_cast<double>(pred.size());
}

double r2(std::span<const double> pred, std::span<const double> actual) {
  check_pair(pred, actual, 2);
  double mean = 0.0;
  for (double v : actual) mean += v;
  mean /= static_cast<double>(actual.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = actual[i] - pred[i];
    const double t = actual[i] - mean;
    ss_res += e * e;
    ss_tot += t * t;
  }
  if (ss_tot == 0.0) throw DataError("R2 is undefined: actual values have zero variance");
  return 1.0 - ss_res / ss_tot;
}

std::vector<double> as_doubles(std::span<const Label> labels) {
  return {labels.begin(), labels.end()};
}

CvResult cross_validate(ModelKind kind, const Matrix& X, std::span<const double> y, const FoldPlan& plan,
                        const learners::Hyperparams& hp, std::uint64_t seed, learners::FitOptions options) {
  if (plan.assignments.size() != y.size() || X.rows() != y.size()) {
    throw InputError("fold plan does not cover the training rows");
  }
  CvResult out;
  for (std::size_t f = 0; f < plan.k; ++f) {
    const auto test_rows = plan.fold(f);
    const auto train_rows = plan.complement(f);
    std::vector<double> y_train, y_test;
    for (std::size_t r : train_rows) y_train.push_back(y[r]);
    for (std::size_t r : test_rows) y_test.push_back(y[r]);
    const auto model = learners::fit(kind, X.select_rows(train_rows), y_train, hp,
                                     derive_seed(seed, "fold", "", f), {}, options);
    const auto pred = as_doubles(learners::predict(model, X.select_rows(test_rows)));
    out.fold_accuracy.push_back(accuracy(pred, y_test));
  }
  double sum = 0.0;
  for (double a : out.fold_accuracy) sum += a;
  out.mean = sum / static_cast<double>(out.fold_accuracy.size());
  return out;
}

}  // namespace occupant::evaluation
