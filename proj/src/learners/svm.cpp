#include <cmath>
#include <numeric>
#include <string>

#include "learners_internal.hpp"

namespace occupant::learners {

namespace {

// Pegasos on the augmented standardized rows [z, 1]. The iterate is kept as
// w = s * v so the shrink step is O(1).
std::vector<double> pegasos(const std::vector<double>& Z, std::size_t n, std::size_t width,
                            const std::vector<double>& target, const SvmParams& params, Rng& rng) {
  std::vector<double> v(width, 0.0);
  double s = 1.0;
  double norm_sq = 0.0;  // ||v||^2
  const double radius_sq = 1.0 / params.lambda;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t t = 0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (params.lambda * static_cast<double>(t));
      const double* z = Z.data() + i * width;
      double dot = 0.0;
      for (std::size_t j = 0; j < width; ++j) dot += v[j] * z[j];
      const double margin = target[i] * s * dot;

      const double shrink = 1.0 - eta * params.lambda;
      if (shrink <= 0.0) {
        std::fill(v.begin(), v.end(), 0.0);
        s = 1.0;
        norm_sq = 0.0;
        dot = 0.0;
      } else {
        s *= shrink;
      }
      if (margin < 1.0) {
        const double step = eta * target[i] / s;
        double zz = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
          v[j] += step * z[j];
          zz += z[j] * z[j];
        }
        norm_sq += 2.0 * step * dot + step * step * zz;
      }
      const double w_norm_sq = s * s * norm_sq;
      if (w_norm_sq > radius_sq) s *= std::sqrt(radius_sq / w_norm_sq);
      if (s < 1e-100) {
        // Fold the scale back in before it underflows.
        for (double& x : v) x *= s;
        norm_sq *= s * s;
        s = 1.0;
      }
    }
  }
  for (double& x : v) x *= s;
  return v;
}

}  // namespace

SvmModel svm_fit_ovr(const Matrix& X, std::span<const Label> y, const SvmParams& params,
                     std::uint64_t seed) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  if (n != y.size()) throw InputError("svm: X and y differ in length");
  if (!(params.lambda > 0.0) || params.epochs < 1) throw InputError("svm: lambda must be > 0 and epochs >= 1");
  for (double x : X.data()) {
    if (!std::isfinite(x)) throw InputError("svm: non-finite feature value");
  }
  const auto enc = detail::encode_classes(y);
  if (enc.codes.size() < 2) throw ModelError("svm: need at least two classes");

  SvmModel model;
  detail::standardization(X, model.feature_mean, model.feature_scale);
  const std::size_t width = d + 1;
  std::vector<double> Z(n * width);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      Z[i * width + j] = (X(i, j) - model.feature_mean[j]) / model.feature_scale[j];
    }
    Z[i * width + d] = 1.0;
  }

  const std::size_t K = enc.codes.size();
  model.weights = Matrix(K, d);
  model.bias.assign(K, 0.0);
  std::vector<double> target(n);
  for (std::size_t c = 0; c < K; ++c) {
    for (std::size_t i = 0; i < n; ++i) target[i] = enc.index[i] == static_cast<int>(c) ? 1.0 : -1.0;
    Rng rng(derive_seed(seed, "svm", std::to_string(enc.codes[c])));
    const auto w = pegasos(Z, n, width, target, params, rng);
    for (std::size_t j = 0; j < d; ++j) model.weights(c, j) = w[j];
    model.bias[c] = w[d];
  }
  return model;
}

Label svm_predict(const SvmModel& model, std::span<const Label> class_set, std::span<const double> x) {
  const std::size_t d = model.feature_mean.size();
  std::vector<double> z(d);
  for (std::size_t j = 0; j < d; ++j) z[j] = (x[j] - model.feature_mean[j]) / model.feature_scale[j];
  std::vector<double> scores(class_set.size());
  for (std::size_t c = 0; c < class_set.size(); ++c) {
    const auto w = model.weights.row(c);
    double s = model.bias[c];
    for (std::size_t j = 0; j < d; ++j) s += w[j] * z[j];
    scores[c] = s;
  }
  return class_set[argmax_first(scores)];
}

}  // namespace occupant::learners
