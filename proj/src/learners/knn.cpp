#include <algorithm>
#include <map>

#include "learners_internal.hpp"

namespace occupant::learners {

Label knn_predict(const Matrix& stored, std::span<const Label> labels, std::span<const double> query,
                  int k) {
  if (k <= 0) throw InputError("knn: k must be at least 1");
  if (static_cast<std::size_t>(k) > stored.rows()) {
    throw InputError("knn: k exceeds the number of stored rows");
  }
  if (query.size() != stored.cols()) throw InputError("knn: query width mismatch");
  const std::size_t n = stored.rows();
  const std::size_t d = stored.cols();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = stored.row(i).data();
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double t = row[j] - query[j];
      acc += t * t;
    }
    dist[i] = {acc, i};
  }
  const auto kk = static_cast<std::ptrdiff_t>(k);
  std::nth_element(dist.begin(), dist.begin() + (kk - 1), dist.end());
  std::map<Label, int> votes;
  for (std::ptrdiff_t i = 0; i < kk; ++i) ++votes[labels[dist[static_cast<std::size_t>(i)].second]];
  // std::map iterates labels ascending, so strict > keeps the smallest on ties.
  Label best = votes.begin()->first;
  int best_count = 0;
  for (const auto& [label, count] : votes) {
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  }
  return best;
}

}  // namespace occupant::learners
