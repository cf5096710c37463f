#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "learners_internal.hpp"

namespace occupant::learners {

AdaBoostRound adaboost_round(std::span<const double> weights, const std::vector<bool>& misclassified,
                             double error, int num_classes) {
  if (weights.size() != misclassified.size()) throw InputError("adaboost: weights and mask differ in length");
  if (num_classes < 2) throw InputError("adaboost: need at least two classes");
  if (!(error >= 0.0 && error <= 1.0)) throw InputError("adaboost: stump error must lie in [0, 1]");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw InputError("adaboost: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("adaboost: weights must sum to 1");

  const double K = static_cast<double>(num_classes);
  AdaBoostRound out;
  if (error == 0.0) {
    out.status = RoundStatus::Perfect;
    out.alpha = std::numeric_limits<double>::infinity();
    return out;
  }
  out.alpha = std::log((1.0 - error) / error) + std::log(K - 1.0);
  if (error >= 1.0 - 1.0 / K) {
    out.status = RoundStatus::WorseThanChance;
    return out;
  }
  out.status = RoundStatus::Accepted;
  const double boost = std::exp(out.alpha);
  out.weights.assign(weights.begin(), weights.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < out.weights.size(); ++i) {
    if (misclassified[i]) out.weights[i] *= boost;
    sum += out.weights[i];
  }
  for (double& w : out.weights) w /= sum;
  return out;
}

namespace detail {

Label weighted_vote(std::span<const Label> codes, const std::vector<double>& tally) {
  return codes[argmax_first(tally)];
}

namespace {

struct StumpSearch {
  StumpSearch(const FeatureIndex& fx, std::span<const int> cls, std::size_t K) : fx_(fx), cls_(cls), K_(K) {
    order_.resize(fx.d);
    for (std::size_t f = 0; f < fx.d; ++f) {
      if (fx.values[f].size() < 2) continue;
      const std::uint32_t* col = fx.rank.data() + f * fx.n;
      auto& ord = order_[f];
      ord.resize(fx.n);
      std::iota(ord.begin(), ord.end(), 0);
      std::stable_sort(ord.begin(), ord.end(), [col](int a, int b) { return col[a] < col[b]; });
    }
  }

  struct Result {
    int feature = -1;
    std::uint32_t lo = 0, hi = 0;
    std::size_t left = 0, right = 0;  // class indices
    double error = 0.0;
  };

  Result best(std::span<const double> w) {
    std::vector<double> total(K_, 0.0);
    for (std::size_t i = 0; i < fx_.n; ++i) total[static_cast<std::size_t>(cls_[i])] += w[i];
    const double mass = std::accumulate(total.begin(), total.end(), 0.0);
    Result res;
    res.left = res.right = argmax_first(total);
    res.error = mass - total[res.left];
    // A split must beat the constant stump by more than rounding noise.
    const double slack = 1e-12 * mass;

    std::vector<double> left(K_), right(K_);
    for (std::size_t f = 0; f < fx_.d; ++f) {
      const auto& ord = order_[f];
      if (ord.empty()) continue;
      const std::uint32_t* col = fx_.rank.data() + f * fx_.n;
      std::fill(left.begin(), left.end(), 0.0);
      right = total;
      std::size_t lmax = 0;
      std::size_t rmax = res.left;  // argmax of total
      for (std::size_t i = 0; i + 1 < ord.size(); ++i) {
        const int s = ord[i];
        const auto c = static_cast<std::size_t>(cls_[s]);
        left[c] += w[s];
        right[c] -= w[s];
        if (left[c] > left[lmax] || (left[c] == left[lmax] && c < lmax)) lmax = c;
        if (c == rmax) rmax = argmax_first(right);
        const std::uint32_t r = col[s];
        const std::uint32_t next = col[ord[i + 1]];
        if (r == next) continue;
        const double err = mass - left[lmax] - right[rmax];
        if (err < res.error - slack) {
          res = {static_cast<int>(f), r, next, lmax, rmax, err};
        }
      }
    }
    return res;
  }

  const FeatureIndex& fx_;
  std::span<const int> cls_;
  std::size_t K_;
  std::vector<std::vector<int>> order_;
};

}  // namespace

AdaBoostModel adaboost_fit(const Matrix& X, std::span<const Label> y, std::span<const Label> codes,
                           const AdbParams& params) {
  if (params.n_rounds < 1) throw InputError("adaboost: n_rounds must be >= 1");
  const std::size_t n = X.rows();
  const std::size_t K = codes.size();
  std::vector<int> cls(n);
  for (std::size_t i = 0; i < n; ++i) {
    cls[i] = static_cast<int>(std::lower_bound(codes.begin(), codes.end(), y[i]) - codes.begin());
  }
  AdaBoostModel model;
  if (K == 1) {
    model.stumps.push_back({-1, 0.0, codes[0], codes[0]});
    model.alphas.push_back(1.0);
    return model;
  }
  const FeatureIndex fx(X);
  StumpSearch search(fx, cls, K);
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<bool> wrong(n);

  for (int round = 0; round < params.n_rounds; ++round) {
    const auto found = search.best(w);
    Stump stump{-1, 0.0, codes[found.left], codes[found.right]};
    if (found.feature >= 0) {
      const auto f = static_cast<std::size_t>(found.feature);
      stump.feature = found.feature;
      stump.threshold = split_threshold(fx.values[f][found.lo], fx.values[f][found.hi]);
    }
    double error = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      wrong[i] = stump.predict(X.row(i)) != y[i];
      if (wrong[i]) error += w[i];
    }
    error = std::min(error, 1.0);
    const auto step = adaboost_round(w, wrong, error, static_cast<int>(K));
    if (step.status == RoundStatus::Perfect) {
      model.stumps = {stump};
      model.alphas = {1.0};
      break;
    }
    if (step.status == RoundStatus::WorseThanChance) {
      if (model.stumps.empty()) {
        model.stumps.push_back(stump);
        model.alphas.push_back(1.0);
      }
      break;
    }
    model.stumps.push_back(stump);
    model.alphas.push_back(step.alpha);
    w = step.weights;
  }
  return model;
}

Label adaboost_predict(const AdaBoostModel& model, std::span<const Label> codes,
                       std::span<const double> x) {
  std::vector<double> tally(codes.size(), 0.0);
  for (std::size_t m = 0; m < model.stumps.size(); ++m) {
    const Label l = model.stumps[m].predict(x);
    const auto it = std::lower_bound(codes.begin(), codes.end(), l);
    tally[static_cast<std::size_t>(it - codes.begin())] += model.alphas[m];
  }
  return weighted_vote(codes, tally);
}

ForestModel forest_fit(const Matrix& X, std::span<const Label> y, const RfcParams& params,
                       std::uint64_t seed, unsigned threads) {
  if (params.n_trees < 1) throw InputError("forest: n_trees must be >= 1");
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  const auto enc = encode_classes(y);
  const FeatureIndex fx(X);

  TreeOptions opt;
  opt.features_per_split = params.features_per_split > 0
                               ? params.features_per_split
                               : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));
  if (static_cast<std::size_t>(opt.features_per_split) >= d) opt.features_per_split = 0;

  ForestModel model;
  const auto T = static_cast<std::size_t>(params.n_trees);
  model.trees.resize(T);
  model.seeds.resize(T);
  for (std::size_t t = 0; t < T; ++t) model.seeds[t] = derive_seed(seed, "tree", "", t);

  parallel_for(T, threads, [&](std::size_t t) {
    Rng rng(model.seeds[t]);
    std::vector<double> weight(n, params.bootstrap ? 0.0 : 1.0);
    if (params.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) weight[rng.uniform_index(n)] += 1.0;
    }
    model.trees[t] = grow_tree(fx, enc.index, weight, static_cast<int>(enc.codes.size()), enc.codes, opt,
                               opt.features_per_split > 0 ? &rng : nullptr);
  });
  return model;
}

Label forest_predict(const ForestModel& model, std::span<const Label> codes, std::span<const double> x) {
  std::vector<double> tally(codes.size(), 0.0);
  for (const Tree& tree : model.trees) {
    const Label l = tree.predict(x);
    const auto it = std::lower_bound(codes.begin(), codes.end(), l);
    tally[static_cast<std::size_t>(it - codes.begin())] += 1.0;
  }
  return weighted_vote(codes, tally);
}

}  // namespace detail

}  // namespace occupant::learners
