#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "occupant/ingest.hpp"

namespace occupant::ingest {

namespace {

std::size_t train_size(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InputError("train fraction must lie strictly between 0 and 1");
  }
  if (n < 2) throw InputError("split needs at least two rows");
  // The small epsilon keeps decimal fractions such as 0.29 * 100 on the
  // intended side of the floor.
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  if (k == 0 || k == n) {
    throw InputError("train fraction " + std::to_string(fraction) + " leaves an empty " +
                     (k == 0 ? "training" : "test") + " set for " + std::to_string(n) + " rows");
  }
  return k;
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            double train_fraction,
                                                                            std::uint64_t seed) {
  const std::size_t k = train_size(n, train_fraction);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

Split split(const Dataset& data, double train_fraction, std::uint64_t seed,
            const std::vector<double>* stratify_by) {
  const std::size_t n = data.n_rows();
  Split out;
  if (!stratify_by) {
    std::tie(out.train_rows, out.test_rows) = split_indices(n, train_fraction, seed);
  } else {
    if (stratify_by->size() != n) throw InputError("stratification labels do not match row count");
    const std::size_t k = train_size(n, train_fraction);
    std::map<double, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[(*stratify_by)[i]].push_back(i);
    Rng rng(seed);
    std::vector<std::size_t> quota;
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    std::size_t g = 0;
    for (auto& [label, rows] : groups) {
      rng.shuffle(rows);
      const double exact = train_fraction * static_cast<double>(rows.size());
      const auto q = static_cast<std::size_t>(std::floor(exact));
      quota.push_back(q);
      assigned += q;
      remainders.emplace_back(exact - static_cast<double>(q), g++);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < k && i < remainders.size(); ++i, ++assigned) {
      ++quota[remainders[i].second];
    }
    g = 0;
    for (auto& [label, rows] : groups) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        (i < quota[g] ? out.train_rows : out.test_rows).push_back(rows[i]);
      }
      ++g;
    }
    std::sort(out.train_rows.begin(), out.train_rows.end());
    std::sort(out.test_rows.begin(), out.test_rows.end());
  }
  out.train = data.select_rows(out.train_rows);
  out.test = data.select_rows(out.test_rows);
  return out;
}

}  // namespace occupant::ingest
