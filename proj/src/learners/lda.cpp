#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>

#include "learners_internal.hpp"

namespace occupant::learners {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

LdaModel lda_fit(const Matrix& X, std::span<const Label> y, std::optional<double> ridge) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  if (n != y.size()) throw InputError("lda: X and y differ in length");
  if (ridge && (*ridge < 0.0 || !std::isfinite(*ridge))) throw InputError("lda: ridge must be >= 0");
  const auto enc = detail::encode_classes(y);
  const std::size_t K = enc.codes.size();
  if (K < 2) throw ModelError("lda: need at least two classes");

  Eigen::Map<const RowMatrix> x(X.data().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));

  LdaModel model;
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(d));
  std::vector<double> counts(K, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<Eigen::Index>(enc.index[i]);
    means.row(c) += x.row(static_cast<Eigen::Index>(i));
    counts[static_cast<std::size_t>(c)] += 1.0;
  }
  for (std::size_t c = 0; c < K; ++c) means.row(static_cast<Eigen::Index>(c)) /= counts[c];

  const Eigen::RowVectorXd global = x.colwise().mean();

  // Within-class residuals, then pooled covariance.
  Eigen::MatrixXd resid(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    resid.row(static_cast<Eigen::Index>(i)) =
        x.row(static_cast<Eigen::Index>(i)) - means.row(static_cast<Eigen::Index>(enc.index[i]));
  }
  const double dof = static_cast<double>(n > K ? n - K : 1);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  cov.selfadjointView<Eigen::Lower>().rankUpdate(resid.transpose(), 1.0 / dof);
  cov = cov.selfadjointView<Eigen::Lower>();

  // Work in units of the pooled within-class deviation so the ridge acts
  // evenly on features of very different scale.
  Eigen::VectorXd scale = cov.diagonal().cwiseSqrt();
  for (Eigen::Index j = 0; j < scale.size(); ++j) {
    if (!(scale[j] > 0.0) || !std::isfinite(scale[j])) scale[j] = 1.0;
  }
  const Eigen::VectorXd inv_scale = scale.cwiseInverse();
  Eigen::MatrixXd sigma = inv_scale.asDiagonal() * cov * inv_scale.asDiagonal();

  const double eps = ridge ? *ridge : 1e-6 * sigma.trace() / static_cast<double>(d);
  sigma.diagonal().array() += eps;

  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-12)) {
    throw ModelError("lda: regularized pooled covariance is singular; use a ridge epsilon > 0");
  }

  Eigen::MatrixXd centered_means = (means.rowwise() - global) * inv_scale.asDiagonal();
  Eigen::MatrixXd coef = llt.solve(centered_means.transpose()).transpose();  // K x d

  model.feature_mean.assign(global.data(), global.data() + d);
  model.feature_scale.assign(scale.data(), scale.data() + d);
  model.class_means = Matrix(K, d);
  model.coef = Matrix(K, d);
  model.ridge = eps;
  for (std::size_t c = 0; c < K; ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    for (std::size_t j = 0; j < d; ++j) {
      model.class_means(c, j) = means(ci, static_cast<Eigen::Index>(j));
      model.coef(c, j) = coef(ci, static_cast<Eigen::Index>(j));
    }
    const double prior = counts[c] / static_cast<double>(n);
    model.priors.push_back(prior);
    model.intercept.push_back(-0.5 * centered_means.row(ci).dot(coef.row(ci)) + std::log(prior));
  }
  return model;
}

Label lda_predict(const LdaModel& model, std::span<const Label> class_set, std::span<const double> x) {
  const std::size_t d = model.feature_mean.size();
  std::vector<double> z(d);
  for (std::size_t j = 0; j < d; ++j) z[j] = (x[j] - model.feature_mean[j]) / model.feature_scale[j];
  std::vector<double> scores(class_set.size());
  for (std::size_t c = 0; c < class_set.size(); ++c) {
    const auto w = model.coef.row(c);
    double s = model.intercept[c];
    for (std::size_t j = 0; j < d; ++j) s += w[j] * z[j];
    scores[c] = s;
  }
  return class_set[argmax_first(scores)];
}

}  // namespace occupant::learners
