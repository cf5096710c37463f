#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "occupant/core.hpp"

namespace occupant::testing {

inline std::filesystem::path source_dir() { return OCCUPANT_SOURCE_DIR; }
inline std::filesystem::path fixture_csv() { return source_dir() / "data" / "fixture" / "recs_fixture.csv"; }

/// Fresh empty directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("occupant_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Matrix uniform_matrix(Rng& rng, std::size_t n, std::size_t d, double lo = -1.0, double hi = 1.0) {
  Matrix m(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) m(r, c) = lo + (hi - lo) * rng.uniform01();
  }
  return m;
}

/// Small-integer grid values, so distance and threshold ties actually occur.
inline Matrix grid_matrix(Rng& rng, std::size_t n, std::size_t d, int levels = 4) {
  Matrix m(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) m(r, c) = static_cast<double>(rng.uniform_index(levels));
  }
  return m;
}

inline std::vector<double> random_labels(Rng& rng, std::size_t n, int classes, int offset = 0) {
  std::vector<double> y(n);
  for (auto& v : y) v = static_cast<double>(offset + static_cast<int>(rng.uniform_index(classes)));
  return y;
}

/// Distinct grid rows with random labels: consistent by construction.
struct Labeled {
  Matrix X;
  std::vector<double> y;
};

inline Labeled consistent_dataset(Rng& rng, std::size_t n, std::size_t d, int classes) {
  std::set<std::vector<double>> seen;
  std::vector<std::vector<double>> rows;
  while (rows.size() < n) {
    std::vector<double> row(d);
    for (auto& v : row) v = static_cast<double>(rng.uniform_index(50));
    if (seen.insert(row).second) rows.push_back(row);
  }
  return {Matrix::from_rows(rows), random_labels(rng, n, classes)};
}

/// Isotropic Gaussian blobs; class c is centred at `separation` * (c, c, ...).
inline Labeled blobs(Rng& rng, std::size_t per_class, std::size_t d, int classes, double separation,
                     double sigma = 1.0) {
  Labeled out{Matrix(per_class * classes, d), {}};
  std::size_t r = 0;
  for (int c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i, ++r) {
      for (std::size_t j = 0; j < d; ++j) out.X(r, j) = separation * c + sigma * rng.normal();
      out.y.push_back(static_cast<double>(c));
    }
  }
  return out;
}

}  // namespace occupant::testing
