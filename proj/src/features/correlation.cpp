#include <algorithm>
#include <cmath>
#include <fstream>

#include "occupant/features.hpp"

namespace occupant::features {

namespace {

struct Centered {
  std::vector<double> dev;
  double ss = 0.0;  // sum of squared deviations
};

Centered center(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  Centered c;
  c.dev.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    c.dev[i] = x[i] - mean;
    c.ss += c.dev[i] * c.dev[i];
  }
  return c;
}

double correlate(const Centered& a, const Centered& b) {
  double sxy = 0.0;
  for (std::size_t i = 0; i < a.dev.size(); ++i) sxy += a.dev[i] * b.dev[i];
  const double r = sxy / (std::sqrt(a.ss) * std::sqrt(b.ss));
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("pearson: vectors differ in length");
  if (x.size() < 2) throw InputError("pearson: need at least two observations");
  const Centered a = center(x);
  const Centered b = center(y);
  if (a.ss == 0.0 || b.ss == 0.0) throw DataError("pearson: correlation undefined for zero variance");
  return correlate(a, b);
}

CorrelationReport top_correlates(const Dataset& data, const std::string& target, std::size_t k) {
  const auto tidx = data.column_index(target);
  if (!tidx) throw InputError("top_correlates: no column named " + target);
  if (k == 0 || k >= data.n_cols()) {
    throw InputError("top_correlates: k must be in [1, number of columns)");
  }
  if (data.n_rows() < 2) throw DataError("top_correlates: need at least two rows");
  const Matrix& m = data.matrix();
  const Centered tc = center(m.column(*tidx));
  if (tc.ss == 0.0) throw DataError("top_correlates: target " + target + " has zero variance");

  std::vector<Centered> centered(data.n_cols());
  std::vector<std::pair<std::string, double>> scored;
  std::vector<std::size_t> scored_idx;
  for (std::size_t c = 0; c < data.n_cols(); ++c) {
    if (c == *tidx) continue;
    centered[c] = center(m.column(c));
    if (centered[c].ss == 0.0) continue;
    scored.emplace_back(data.columns()[c], correlate(tc, centered[c]));
  }
  if (scored.empty()) throw DataError("top_correlates: every candidate column has zero variance");
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    const double fa = std::abs(a.second), fb = std::abs(b.second);
    if (fa != fb) return fa > fb;
    return a.first < b.first;
  });
  if (scored.size() > k) scored.resize(k);

  CorrelationReport report;
  report.target = target;
  report.ranked = scored;
  report.matrix_columns.push_back(target);
  std::vector<const Centered*> members{&tc};
  for (const auto& [code, r] : scored) {
    report.matrix_columns.push_back(code);
    members.push_back(&centered[*data.column_index(code)]);
  }
  const std::size_t s = members.size();
  report.matrix = Matrix(s, s);
  for (std::size_t i = 0; i < s; ++i) {
    report.matrix(i, i) = 1.0;
    for (std::size_t j = i + 1; j < s; ++j) {
      const double r = correlate(*members[i], *members[j]);
      report.matrix(i, j) = r;
      report.matrix(j, i) = r;
    }
  }
  return report;
}

void write_correlation_report(const CorrelationReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / (report.target + "_matrix.csv"));
    if (!out) throw Error("cannot write correlation matrix for " + report.target);
    out << "attribute";
    for (const auto& c : report.matrix_columns) out << ',' << c;
    out << '\n';
    for (std::size_t i = 0; i < report.matrix_columns.size(); ++i) {
      out << report.matrix_columns[i];
      for (std::size_t j = 0; j < report.matrix_columns.size(); ++j) {
        out << ',' << ingest::format_number(report.matrix(i, j));
      }
      out << '\n';
    }
  }
  std::ofstream out(dir / (report.target + "_ranked.csv"));
  if (!out) throw Error("cannot write ranked correlates for " + report.target);
  out << "rank,attribute,pearson_r\n";
  for (std::size_t i = 0; i < report.ranked.size(); ++i) {
    out << i + 1 << ',' << report.ranked[i].first << ','
        << ingest::format_number(report.ranked[i].second) << '\n';
  }
}

}  // namespace occupant::features
