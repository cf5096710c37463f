#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "learners_internal.hpp"

namespace occupant::learners {

double gini(std::span<const Label> labels) {
  if (labels.empty()) throw InputError("gini of an empty label vector");
  std::vector<Label> sorted(labels.begin(), labels.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double sumsq = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double p = static_cast<double>(j - i) / n;
    sumsq += p * p;
    i = j;
  }
  return 1.0 - sumsq;
}

Label Tree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  for (;;) {
    const TreeNode& node = nodes[i];
    if (node.feature < 0) return node.label;
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold
                                     ? node.left
                                     : node.right);
  }
}

namespace detail {

FeatureIndex::FeatureIndex(const Matrix& X) : n(X.rows()), d(X.cols()), rank(n * d), values(d) {
  std::vector<std::pair<double, std::uint32_t>> buf(n);
  for (std::size_t f = 0; f < d; ++f) {
    for (std::size_t i = 0; i < n; ++i) buf[i] = {X(i, f), static_cast<std::uint32_t>(i)};
    std::sort(buf.begin(), buf.end());
    auto& vals = values[f];
    std::uint32_t* col = rank.data() + f * n;
    for (std::size_t i = 0; i < n; ++i) {
      if (vals.empty() || vals.back() != buf[i].first) vals.push_back(buf[i].first);
      col[buf[i].second] = static_cast<std::uint32_t>(vals.size() - 1);
    }
  }
}

double split_threshold(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  // Rounding can land the midpoint on `hi`, which would send it left.
  return mid < hi ? mid : lo;
}

namespace {

struct Best {
  double proxy = -std::numeric_limits<double>::infinity();
  int feature = -1;
  std::uint32_t lo = 0;  // largest rank sent left
  std::uint32_t hi = 0;  // smallest rank sent right
};

class Grower {
 public:
  Grower(const FeatureIndex& fx, std::span<const int> cls, std::span<const double> weight, int K,
         std::span<const Label> codes, const TreeOptions& opt, Rng* rng)
      : fx_(fx), cls_(cls), w_(weight), K_(static_cast<std::size_t>(K)), codes_(codes), opt_(opt),
        rng_(rng), wl_(K_), wr_(K_), parent_(K_) {
    for (std::size_t i = 0; i < fx_.n; ++i) {
      if (w_[i] > 0.0) samples_.push_back(static_cast<int>(i));
    }
    if (samples_.empty()) throw ModelError("tree has no samples with positive weight");
    buf_.resize(samples_.size());
    const int mtry = opt_.features_per_split;
    subsample_ = mtry > 0 && static_cast<std::size_t>(mtry) < fx_.d;
    if (subsample_ && !rng_) throw InputError("feature subsampling needs a random source");
    pool_.resize(fx_.d);
  }

  Tree grow() {
    Tree tree;
    tree.nodes.emplace_back();
    struct Pending {
      std::size_t begin, end;
      int depth;
      std::size_t node;
    };
    std::vector<Pending> stack{{0, samples_.size(), 0, 0}};
    while (!stack.empty()) {
      const Pending p = stack.back();
      stack.pop_back();

      std::fill(parent_.begin(), parent_.end(), 0.0);
      double total = 0.0;
      for (std::size_t i = p.begin; i < p.end; ++i) {
        const int s = samples_[i];
        parent_[static_cast<std::size_t>(cls_[s])] += w_[s];
        total += w_[s];
      }
      std::size_t majority = 0;
      std::size_t present = 0;
      for (std::size_t c = 0; c < K_; ++c) {
        if (parent_[c] > 0.0) ++present;
        if (parent_[c] > parent_[majority]) majority = c;
      }
      tree.nodes[p.node].label = codes_[majority];

      const std::size_t m = p.end - p.begin;
      if (present <= 1 || m < static_cast<std::size_t>(std::max(2, opt_.min_samples_split)) ||
          (opt_.max_depth > 0 && p.depth >= opt_.max_depth)) {
        continue;
      }
      const Best best = find_split(p.begin, p.end, total);
      if (best.feature < 0) continue;

      const auto f = static_cast<std::size_t>(best.feature);
      const std::uint32_t* col = fx_.rank.data() + f * fx_.n;
      auto mid_it = std::partition(samples_.begin() + static_cast<std::ptrdiff_t>(p.begin),
                                   samples_.begin() + static_cast<std::ptrdiff_t>(p.end),
                                   [&](int s) { return col[s] <= best.lo; });
      const auto mid = static_cast<std::size_t>(mid_it - samples_.begin());

      const std::size_t left = tree.nodes.size();
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      TreeNode& node = tree.nodes[p.node];
      node.feature = best.feature;
      node.threshold = split_threshold(fx_.values[f][best.lo], fx_.values[f][best.hi]);
      node.left = static_cast<int>(left);
      node.right = static_cast<int>(left + 1);
      stack.push_back({mid, p.end, p.depth + 1, left + 1});
      stack.push_back({p.begin, mid, p.depth + 1, left});
    }
    return tree;
  }

 private:
  Best find_split(std::size_t begin, std::size_t end, double total) {
    Best best;
    if (!subsample_) {
      for (std::size_t f = 0; f < fx_.d; ++f) evaluate(f, begin, end, total, best);
      return best;
    }
    // Draw features without replacement until mtry non-constant ones have
    // been examined or the pool is exhausted.
    std::iota(pool_.begin(), pool_.end(), std::size_t{0});
    int visited = 0;
    for (std::size_t i = 0; i < fx_.d && visited < opt_.features_per_split; ++i) {
      const std::size_t j = i + rng_->uniform_index(fx_.d - i);
      std::swap(pool_[i], pool_[j]);
      if (evaluate(pool_[i], begin, end, total, best)) ++visited;
    }
    return best;
  }

  void reset_sides() {
    std::fill(wl_.begin(), wl_.end(), 0.0);
    std::copy(parent_.begin(), parent_.end(), wr_.begin());
    sumsq_l_ = 0.0;
    sumsq_r_ = 0.0;
    for (double v : parent_) sumsq_r_ += v * v;
  }

  void move_left(std::size_t c, double v) {
    sumsq_l_ += v * (2.0 * wl_[c] + v);
    wl_[c] += v;
    sumsq_r_ += v * (v - 2.0 * wr_[c]);
    wr_[c] -= v;
  }

  void consider(std::size_t f, std::uint32_t lo, std::uint32_t hi, double wl, double wr, Best& best) const {
    const double proxy = sumsq_l_ / wl + sumsq_r_ / wr;
    const int fi = static_cast<int>(f);
    if (proxy > best.proxy ||
        (proxy == best.proxy && (fi < best.feature || (fi == best.feature && lo < best.lo)))) {
      best = {proxy, fi, lo, hi};
    }
  }

  // Returns false when the feature is constant within the node.
  bool evaluate(std::size_t f, std::size_t begin, std::size_t end, double total, Best& best) {
    const std::size_t m = end - begin;
    const std::size_t B = fx_.values[f].size();
    if (B < 2) return false;
    const std::uint32_t* col = fx_.rank.data() + f * fx_.n;
    if (B * K_ < m * 16) return evaluate_histogram(f, col, B, begin, end, total, best);

    std::uint32_t lo = std::numeric_limits<std::uint32_t>::max(), hi = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const int s = samples_[begin + i];
      const std::uint32_t r = col[s];
      buf_[i] = {r, s};
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    if (lo == hi) return false;
    std::sort(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(m),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    reset_sides();
    double wl = 0.0, wr = total;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const int s = buf_[i].second;
      const double v = w_[s];
      move_left(static_cast<std::size_t>(cls_[s]), v);
      wl += v;
      wr -= v;
      if (buf_[i].first == buf_[i + 1].first) continue;
      consider(f, buf_[i].first, buf_[i + 1].first, wl, wr, best);
    }
    return true;
  }

  bool evaluate_histogram(std::size_t f, const std::uint32_t* col, std::size_t B, std::size_t begin,
                          std::size_t end, double total, Best& best) {
    if (hist_.size() < B * K_) hist_.resize(B * K_, 0.0);
    if (bin_w_.size() < B) bin_w_.resize(B, 0.0);
    touched_.clear();
    for (std::size_t i = begin; i < end; ++i) {
      const int s = samples_[i];
      const std::uint32_t r = col[s];
      if (bin_w_[r] == 0.0) touched_.push_back(r);
      bin_w_[r] += w_[s];
      hist_[r * K_ + static_cast<std::size_t>(cls_[s])] += w_[s];
    }
    const bool varies = touched_.size() > 1;
    if (varies) {
      std::sort(touched_.begin(), touched_.end());
      reset_sides();
      double wl = 0.0, wr = total;
      for (std::size_t t = 0; t + 1 < touched_.size(); ++t) {
        const std::uint32_t r = touched_[t];
        const double* h = hist_.data() + r * K_;
        for (std::size_t c = 0; c < K_; ++c) {
          if (h[c] != 0.0) move_left(c, h[c]);
        }
        wl += bin_w_[r];
        wr -= bin_w_[r];
        consider(f, r, touched_[t + 1], wl, wr, best);
      }
    }
    for (std::uint32_t r : touched_) {
      bin_w_[r] = 0.0;
      std::fill(hist_.begin() + static_cast<std::ptrdiff_t>(r * K_),
                hist_.begin() + static_cast<std::ptrdiff_t>((r + 1) * K_), 0.0);
    }
    return varies;
  }

  const FeatureIndex& fx_;
  std::span<const int> cls_;
  std::span<const double> w_;
  std::size_t K_;
  std::span<const Label> codes_;
  TreeOptions opt_;
  Rng* rng_;
  bool subsample_ = false;

  std::vector<int> samples_;
  std::vector<std::pair<std::uint32_t, int>> buf_;
  std::vector<std::size_t> pool_;
  std::vector<double> wl_, wr_, parent_;
  double sumsq_l_ = 0.0, sumsq_r_ = 0.0;
  std::vector<double> hist_, bin_w_;
  std::vector<std::uint32_t> touched_;
};

}  // namespace

Tree grow_tree(const FeatureIndex& fx, std::span<const int> cls, std::span<const double> weight,
               int num_classes, std::span<const Label> codes, const TreeOptions& options, Rng* rng) {
  Grower g(fx, cls, weight, num_classes, codes, options, rng);
  return g.grow();
}

}  // namespace detail

Tree fit_tree(const Matrix& X, std::span<const Label> y, std::span<const double> sample_weight,
              const TreeOptions& options, Rng* rng) {
  if (X.rows() != y.size() || sample_weight.size() != y.size()) {
    throw InputError("fit_tree: X, y and weights differ in length");
  }
  const auto enc = detail::encode_classes(y);
  const detail::FeatureIndex fx(X);
  return detail::grow_tree(fx, enc.index, sample_weight, static_cast<int>(enc.codes.size()), enc.codes,
                           options, rng);
}

}  // namespace occupant::learners
