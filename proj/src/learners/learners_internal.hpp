#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "occupant/learners.hpp"

namespace occupant::learners::detail {

struct EncodedClasses {
  std::vector<Label> codes;  // sorted distinct labels
  std::vector<int> index;    // per row, position in `codes`
};

EncodedClasses encode_classes(std::span<const Label> y);

/// Dense per-feature ranks of every training value, column-major, plus the
/// sorted distinct values. Shared by every tree grown on the same matrix.
struct FeatureIndex {
  explicit FeatureIndex(const Matrix& X);
  std::size_t n;
  std::size_t d;
  std::vector<std::uint32_t> rank;
  std::vector<std::vector<double>> values;
};

double split_threshold(double lo, double hi);

Tree grow_tree(const FeatureIndex& fx, std::span<const int> cls, std::span<const double> weight,
               int num_classes, std::span<const Label> codes, const TreeOptions& options, Rng* rng);

/// Per-feature mean and standard deviation; zero deviations become 1.
void standardization(const Matrix& X, std::vector<double>& mean, std::vector<double>& scale);

AdaBoostModel adaboost_fit(const Matrix& X, std::span<const Label> y, std::span<const Label> codes,
                           const AdbParams& params);
Label adaboost_predict(const AdaBoostModel& model, std::span<const Label> codes,
                       std::span<const double> x);

ForestModel forest_fit(const Matrix& X, std::span<const Label> y, const RfcParams& params,
                       std::uint64_t seed, unsigned threads);
Label forest_predict(const ForestModel& model, std::span<const Label> codes, std::span<const double> x);

/// Label with the highest tally; ties to the smallest code.
Label weighted_vote(std::span<const Label> codes, const std::vector<double>& tally);

}  // namespace occupant::learners::detail
