#include <doctest.h>

#include <cmath>
#include <fstream>

#include "generators.hpp"
#include "occupant/features.hpp"

using namespace occupant;
using namespace occupant::features;

namespace {

Dataset table(const std::vector<std::string>& cols, std::size_t rows = 3) {
  Matrix m(rows, cols.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) m(r, c) = static_cast<double>(r * (c + 1) + c);
  }
  return Dataset(cols, m);
}

ingest::Codebook codebook() {
  return ingest::Codebook::load(occupant::testing::source_dir() / "data" / "codebook.json");
}

// Textbook two-pass correlation.
double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("prefix rule removes imputation flags") {
  const DropRules rules({{DropRuleType::Prefix, "Z"}});
  const auto out = apply_drop_rules(table({"ZHHAGE", "HHAGE"}), rules);
  CHECK(out.data.columns() == std::vector<std::string>{"HHAGE"});
  CHECK(out.dropped == std::vector<std::string>{"ZHHAGE"});
}

TEST_CASE("pattern classes") {
  const DropRules rules({{DropRuleType::PatternClass, "imputation-flags"},
                         {DropRuleType::PatternClass, "replicate-weights"},
                         {DropRuleType::PatternClass, "dollar-amounts"}});
  const std::vector<std::string> cols{"ZHHAGE", "HHAGE", "ZIPCODE", "BRRWT1", "BRRWT96", "BRRWTX",
                                      "DOLLAREL", "TOTALDOL", "TOTALDOLSPH", "KWH"};
  const auto out = apply_drop_rules(table(cols), rules);
  CHECK(out.data.columns() == std::vector<std::string>{"HHAGE", "ZIPCODE", "BRRWTX", "KWH"});
}

TEST_CASE("exact rules warn about absent columns") {
  const DropRules rules({{DropRuleType::Exact, "CELLPHONE"}, {DropRuleType::Exact, "NOPE"}});
  const auto out = apply_drop_rules(table({"CELLPHONE", "A"}), rules);
  CHECK(out.data.columns() == std::vector<std::string>{"A"});
  REQUIRE(out.warnings.size() == 1);
  CHECK(out.warnings[0].find("NOPE") != std::string::npos);
}

TEST_CASE("drop rule documents") {
  const auto shipped = DropRules::load(occupant::testing::source_dir() / "data" / "drop_rules.json");
  CHECK(shipped.rules().size() == 4);
  CHECK_THROWS_AS(DropRules::from_json_text(R"({"format_version":1,"rules":[{"type":"glob","value":"x"}]})"),
                  ParseError);
  CHECK_THROWS_AS(DropRules({{DropRuleType::PatternClass, "no-such-class"}}), InputError);
  CHECK(DropRules({{DropRuleType::Prefix, "Z"}}).digest() != DropRules({{DropRuleType::Prefix, "Y"}}).digest());
}

TEST_CASE("dropping never adds or reorders columns") {
  Rng rng(6);
  const std::vector<std::string> pool{"ZA", "A", "BRRWT3", "DOLLARNG", "B", "ZB", "CELLPHONE", "C", "TOTALDOLNG"};
  const auto shipped = DropRules::load(occupant::testing::source_dir() / "data" / "drop_rules.json");
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> cols;
    for (const auto& c : pool) {
      if (rng.uniform01() < 0.6) cols.push_back(c);
    }
    if (cols.empty()) continue;
    const auto out = apply_drop_rules(table(cols), shipped);
    REQUIRE(out.data.n_cols() + out.dropped.size() == cols.size());
    std::size_t pos = 0;
    for (const auto& c : out.data.columns()) {
      while (pos < cols.size() && cols[pos] != c) ++pos;
      REQUIRE(pos < cols.size());
    }
  }
}

TEST_CASE("target specification from the shipped codebook") {
  const auto spec = TargetSpec::from_codebook(codebook());
  CHECK(spec.entries().size() == 16);
  CHECK(spec.at("TEMPHOME").kind == DomainKind::IntegerRange);
  CHECK(spec.at("TEMPHOME").in_domain(72));
  CHECK(spec.at("TEMPHOME").in_domain(-2));
  CHECK_FALSE(spec.at("TEMPHOME").in_domain(91));
  CHECK(spec.at("EDUCATION").kind == DomainKind::Enumerated);
  CHECK_FALSE(spec.at("EDUCATION").in_domain(9));
  CHECK(spec.at("HHAGE").domain() == std::vector<Label>{-1, 0, 1, 2, 3, 4});
  CHECK_THROWS_AS(spec.at("KWH"), InputError);
  CHECK_THROWS_AS(TargetSpec::from_codebook(ingest::Codebook{}), DataError);
}

TEST_CASE("separation moves exactly the sixteen targets") {
  std::vector<std::string> cols{"F1", "F2", "F3"};
  for (const char* t : kTargetCodes) cols.emplace_back(t);
  const auto parts = separate(table(cols), TargetSpec::from_codebook(codebook()));
  CHECK(parts.features.columns() == std::vector<std::string>{"F1", "F2", "F3"});
  CHECK(parts.targets.n_cols() == 16);
  CHECK(parts.targets.n_rows() == 3);
  std::vector<std::string> missing(cols.begin(), cols.end() - 1);
  CHECK_THROWS_AS(separate(table(missing), TargetSpec::from_codebook(codebook())), DataError);
  std::vector<std::string> only_targets(cols.begin() + 3, cols.end());
  CHECK_THROWS_AS(separate(table(only_targets), TargetSpec::from_codebook(codebook())), DataError);
}

TEST_CASE("pearson against a two-pass oracle") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(50);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal();
      y[i] = 0.5 * x[i] + rng.normal();
    }
    REQUIRE(pearson(x, y) == doctest::Approx(oracle_pearson(x, y)).epsilon(1e-12));
  }
  const std::vector<double> a{1, 2, 3}, b{2, 4, 6}, c{3, 2, 1}, flat{1, 1, 1};
  CHECK(pearson(a, b) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(a, c) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK_THROWS_AS(pearson(a, flat), DataError);
}

TEST_CASE("top correlates rank by magnitude with code tie-break") {
  Rng rng(10);
  const std::size_t n = 200;
  std::vector<std::string> cols{"T", "NOISE", "STRONG", "NEG", "COPY_B", "COPY_A", "FLAT"};
  Matrix m(n, cols.size());
  for (std::size_t r = 0; r < n; ++r) {
    const double t = rng.normal();
    m(r, 0) = t;
    m(r, 1) = rng.normal();
    m(r, 2) = t + 0.1 * rng.normal();
    m(r, 3) = -t + 0.5 * rng.normal();
    m(r, 4) = 2 * t + 1;
    m(r, 5) = 2 * t + 1;
    m(r, 6) = 3.0;
  }
  const auto rep = top_correlates(Dataset(cols, m), "T", 4);
  REQUIRE(rep.ranked.size() == 4);
  CHECK(rep.ranked[0].first == "COPY_A");
  CHECK(rep.ranked[1].first == "COPY_B");
  CHECK(rep.ranked[2].first == "STRONG");
  CHECK(rep.ranked[3].first == "NEG");
  CHECK(rep.ranked[3].second < 0);
  CHECK(rep.matrix_columns.front() == "T");
  for (std::size_t i = 0; i < rep.matrix.rows(); ++i) {
    CHECK(rep.matrix(i, i) == 1.0);
    for (std::size_t j = 0; j < rep.matrix.cols(); ++j) CHECK(rep.matrix(i, j) == rep.matrix(j, i));
  }
  CHECK_THROWS_AS(top_correlates(Dataset(cols, m), "MISSING", 3), InputError);
  CHECK_THROWS_AS(top_correlates(Dataset(cols, m), "FLAT", 3), DataError);

  const auto dir = occupant::testing::scratch_dir("correlation");
  write_correlation_report(rep, dir);
  CHECK(std::filesystem::exists(dir / "T_matrix.csv"));
  std::ifstream ranked(dir / "T_ranked.csv");
  std::string header, first;
  std::getline(ranked, header);
  std::getline(ranked, first);
  CHECK(first.rfind("1,COPY_A,", 0) == 0);
}
