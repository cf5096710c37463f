#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace occupant {

// Error hierarchy. The CLI maps UsageError to exit code 2 and every other
// Error to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or precondition violation by the caller.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. Row and column are 0-based data coordinates;
/// npos when not applicable.
class ParseError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  ParseError(const std::string& what, std::size_t row = npos, std::size_t column = npos)
      : Error(what), row_(row), column_(column) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Data that is well formed but unusable for the requested computation.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Training or inference failure.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Command-line or configuration mistake.
class UsageError : public Error {
 public:
  using Error::Error;
};

using Label = std::int32_t;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> column(std::size_t c) const;
  Matrix select_rows(std::span<const std::size_t> rows) const;
  Matrix select_cols(std::span<const std::size_t> cols) const;

  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Deterministic random source. Bounded draws and shuffles are implemented
/// here rather than through <random> distributions, whose outputs differ
/// between standard library vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);
  /// Uniform double in [0, 1).
  double uniform01();
  /// Standard normal via Box-Muller.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Child seed that depends only on the master seed and the given tags.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag_a,
                          std::string_view tag_b = {}, std::uint64_t index = 0);

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

/// Runs body(i) for i in [0, n) on up to `threads` workers with dynamic
/// scheduling. threads == 0 selects hardware concurrency. The first
/// exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

std::string to_upper(std::string_view s);
std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

}  // namespace occupant
