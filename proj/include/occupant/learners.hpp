#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "occupant/core.hpp"

namespace occupant::learners {

using json = nlohmann::json;

enum class ModelKind { LDA, KNN, CART, SVM, ADB, RFC };

inline constexpr std::array<ModelKind, 6> kAllModels = {ModelKind::LDA, ModelKind::KNN,
                                                        ModelKind::CART, ModelKind::SVM,
                                                        ModelKind::ADB, ModelKind::RFC};

std::string to_string(ModelKind kind);
/// Case-insensitive; throws InputError on unknown names.
ModelKind parse_model_kind(const std::string& name);

// ------------------------------------------------------------ hyperparams

struct CartParams {
  int max_depth = 0;  // 0 = unlimited
  int min_samples_split = 2;
};

struct RfcParams {
  int n_trees = 100;
  int features_per_split = 0;  // 0 = floor(sqrt(width))
  bool bootstrap = true;
};

struct AdbParams {
  int n_rounds = 50;
};

/// Linear one-vs-rest SVM trained by Pegasos subgradient steps with the
/// 1/(lambda t) schedule. Features are standardized with training moments.
struct SvmParams {
  double lambda = 1e-4;
  int epochs = 10;
};

struct LdaParams {
  /// Ridge added to the pooled covariance. Unset selects
  /// 1e-6 * trace / width of the standardized covariance.
  std::optional<double> ridge;
};

struct Hyperparams {
  int knn_k = 5;
  CartParams cart;
  RfcParams rfc;
  AdbParams adb;
  SvmParams svm;
  LdaParams lda;

  void validate() const;
  json to_json() const;
  /// Reads a full or partial document; absent keys keep their defaults.
  static Hyperparams from_json(const json& j);
  std::string digest() const;
};

// ------------------------------------------------------------ payloads

struct LdaModel {
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  Matrix class_means;  // classes x width, original units
  std::vector<double> priors;
  double ridge = 0.0;
  Matrix coef;  // classes x width, standardized units
  std::vector<double> intercept;
};

struct KnnModel {
  Matrix train;
  std::vector<Label> labels;
  int k = 5;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  Label label = 0;
  bool operator==(const TreeNode&) const = default;
};

/// Binary tree; rows with x[feature] <= threshold go left.
struct Tree {
  std::vector<TreeNode> nodes;
  Label predict(std::span<const double> x) const;
  bool operator==(const Tree&) const = default;
};

struct ForestModel {
  std::vector<Tree> trees;
  std::vector<std::uint64_t> seeds;
};

struct Stump {
  int feature = -1;  // -1: constant prediction `left`
  double threshold = 0.0;
  Label left = 0;
  Label right = 0;
  Label predict(std::span<const double> x) const {
    return feature < 0 || x[static_cast<std::size_t>(feature)] <= threshold ? left : right;
  }
};

struct AdaBoostModel {
  std::vector<Stump> stumps;
  std::vector<double> alphas;
};

struct SvmModel {
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  Matrix weights;  // classes x width, standardized units
  std::vector<double> bias;
};

using Payload = std::variant<LdaModel, KnnModel, Tree, SvmModel, AdaBoostModel, ForestModel>;

struct TrainMeta {
  std::uint64_t seed = 0;
  std::string hyperparams_digest;
  std::vector<std::string> feature_columns;
};

inline constexpr int kModelFormatVersion = 1;

class TrainedModel {
 public:
  TrainedModel(ModelKind kind, std::vector<Label> class_set, Payload payload, Hyperparams hp,
               TrainMeta meta);

  ModelKind kind() const noexcept { return kind_; }
  const std::vector<Label>& class_set() const noexcept { return class_set_; }
  const Payload& payload() const noexcept { return payload_; }
  const Hyperparams& hyperparams() const noexcept { return hp_; }
  const TrainMeta& meta() const noexcept { return meta_; }
  std::size_t width() const noexcept { return meta_.feature_columns.size(); }

  json to_json() const;
  std::string serialize() const { return to_json().dump(); }
  /// Throws ParseError for unknown format versions or inconsistent payloads.
  static TrainedModel from_json(const json& j);

 private:
  ModelKind kind_;
  std::vector<Label> class_set_;
  Payload payload_;
  Hyperparams hp_;
  TrainMeta meta_;
};

struct FitOptions {
  unsigned threads = 1;  // forest trees may train concurrently
};

/// Trains one classifier. Labels must be integral codes.
TrainedModel fit(ModelKind kind, const Matrix& X, std::span<const double> y, const Hyperparams& hp,
                 std::uint64_t seed, std::vector<std::string> feature_columns = {},
                 FitOptions options = {});

std::vector<Label> predict(const TrainedModel& model, const Matrix& X);

/// Validates and converts numeric labels; throws InputError on non-integers.
std::vector<Label> to_labels(std::span<const double> y);

// ------------------------------------------------------------ kernels

/// 1 - sum p_c^2 over the label distribution.
double gini(std::span<const Label> labels);

LdaModel lda_fit(const Matrix& X, std::span<const Label> y, std::optional<double> ridge);
Label lda_predict(const LdaModel& model, std::span<const Label> class_set, std::span<const double> x);

/// Majority label among the k nearest stored rows by Euclidean distance.
/// Distance ties go to the lower stored row; vote ties to the smaller label.
Label knn_predict(const Matrix& stored, std::span<const Label> labels, std::span<const double> query,
                  int k);

struct TreeOptions {
  int max_depth = 0;
  int min_samples_split = 2;
  int features_per_split = 0;  // 0 = all features
};

/// Gini CART over rows with positive weight. `rng` is used only when
/// features_per_split is below the width.
Tree fit_tree(const Matrix& X, std::span<const Label> y, std::span<const double> sample_weight,
              const TreeOptions& options, Rng* rng = nullptr);

enum class RoundStatus { Accepted, Perfect, WorseThanChance };

struct AdaBoostRound {
  RoundStatus status;
  double alpha;
  std::vector<double> weights;  // renormalized; only meaningful when Accepted
};

/// One SAMME reweighting step for a stump with weighted error `error`.
AdaBoostRound adaboost_round(std::span<const double> weights, const std::vector<bool>& misclassified,
                             double error, int num_classes);

SvmModel svm_fit_ovr(const Matrix& X, std::span<const Label> y, const SvmParams& params,
                     std::uint64_t seed);
Label svm_predict(const SvmModel& model, std::span<const Label> class_set, std::span<const double> x);

/// Index of the largest score; ties resolve to the lowest index.
std::size_t argmax_first(std::span<const double> scores);

}  // namespace occupant::learners
