#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "generators.hpp"
#include "occupant/evaluation.hpp"

using namespace occupant;
using namespace occupant::evaluation;
using occupant::testing::consistent_dataset;

namespace {

// Plain re-derivations of the metrics in long double.
long double oracle_accuracy(const std::vector<double>& p, const std::vector<double>& a) {
  long double hit = 0;
  for (std::size_t i = 0; i < p.size(); ++i) hit += p[i] == a[i] ? 1 : 0;
  return hit / p.size();
}

long double oracle_mae(const std::vector<double>& p, const std::vector<double>& a) {
  long double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs((long double)p[i] - a[i]);
  return s / p.size();
}

long double oracle_r2(const std::vector<double>& p, const std::vector<double>& a) {
  long double mean = 0;
  for (double v : a) mean += v;
  mean /= a.size();
  long double res = 0, tot = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    res += ((long double)a[i] - p[i]) * ((long double)a[i] - p[i]);
    tot += ((long double)a[i] - mean) * ((long double)a[i] - mean);
  }
  return 1 - res / tot;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

MetricsRow row(const std::string& t, ModelKind m, double acc, double mae_v, double r2_v) {
  MetricsRow r;
  r.target = t;
  r.model = m;
  r.train_accuracy = acc;
  r.test_accuracy = acc;
  r.mae = mae_v;
  r.r2 = r2_v;
  r.fold_accuracy = {acc, acc};
  return r;
}

}  // namespace

TEST_CASE("accuracy, MAE and R2 on small hand cases") {
  const std::vector<double> p{70, 72}, a{68, 72};
  CHECK(mae(p, a) == 1.0);
  CHECK(accuracy(p, a) == 0.5);
  const std::vector<double> y{1, 2, 3, 4};
  const std::vector<double> mean(4, 2.5);
  CHECK(r2(mean, y) == 0.0);
  CHECK(r2(y, y) == 1.0);
  const std::vector<double> worse{4, 3, 2, 1};
  CHECK(r2(worse, y) < 0.0);
  CHECK_THROWS_AS(r2(y, std::vector<double>(4, 1.0)), DataError);
  CHECK_THROWS_AS(mae(p, y), InputError);
  CHECK_THROWS_AS(accuracy(std::vector<double>{}, std::vector<double>{}), InputError);
}

TEST_CASE("metrics agree with long double oracles on random pairs") {
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(60);
    std::vector<double> p(n), a(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<double>(rng.uniform_index(6));
      a[i] = static_cast<double>(rng.uniform_index(6));
    }
    a[0] = 0;
    a[1] = 5;
    REQUIRE(std::fabs(accuracy(p, a) - (double)oracle_accuracy(p, a)) <= 1e-12);
    REQUIRE(std::fabs(mae(p, a) - (double)oracle_mae(p, a)) <= 1e-12);
    REQUIRE(std::fabs(r2(p, a) - (double)oracle_r2(p, a)) <= 1e-12);
  }
}

TEST_CASE("ten folds over the survey row count") {
  const auto plan = kfold(5686, 10, 42);
  auto sizes = plan.sizes();
  CHECK(std::count(sizes.begin(), sizes.end(), 569u) == 6);
  CHECK(std::count(sizes.begin(), sizes.end(), 568u) == 4);
  CHECK_THROWS_AS(kfold(5, 1, 0), InputError);
  CHECK_THROWS_AS(kfold(5, 6, 0), InputError);
}

TEST_CASE("fold plans partition the rows") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(300);
    const std::size_t k = 2 + rng.uniform_index(std::min<std::size_t>(n - 1, 15));
    const std::uint64_t seed = rng.next();
    const bool strat = trial % 2;
    std::vector<double> labels(n);
    for (auto& v : labels) v = static_cast<double>(rng.uniform_index(4));
    const auto plan = strat ? stratified_kfold(labels, k, seed) : kfold(n, k, seed);
    std::vector<int> seen(n, 0);
    std::size_t lo = n, hi = 0;
    for (std::size_t f = 0; f < k; ++f) {
      const auto rows = plan.fold(f);
      const auto rest = plan.complement(f);
      REQUIRE(rows.size() + rest.size() == n);
      for (auto r : rows) seen[r]++;
      lo = std::min(lo, rows.size());
      hi = std::max(hi, rows.size());
    }
    REQUIRE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    REQUIRE(hi - lo <= 1);
    const auto again = strat ? stratified_kfold(labels, k, seed) : kfold(n, k, seed);
    REQUIRE(again.assignments == plan.assignments);
  }
}

TEST_CASE("stratified folds balance each label") {
  std::vector<double> labels;
  for (int i = 0; i < 100; ++i) labels.push_back(i < 30 ? 1.0 : 2.0);
  const auto plan = stratified_kfold(labels, 10, 9);
  for (std::size_t f = 0; f < 10; ++f) {
    std::size_t ones = 0;
    for (auto r : plan.fold(f)) ones += labels[r] == 1.0;
    CHECK(ones == 3);
  }
}

TEST_CASE("cross validation of CART on learnable data") {
  Rng rng(8);
  auto data = consistent_dataset(rng, 100, 3, 2);
  // The first feature cycles through four values that every training
  // complement contains, and the label is a threshold of it.
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    data.X(i, 0) = static_cast<double>(i % 4);
    data.y[i] = i % 4 < 2 ? 0.0 : 1.0;
  }
  const auto cv = cross_validate(ModelKind::CART, data.X, data.y, kfold(100, 5, 1), {}, 1);
  REQUIRE(cv.fold_accuracy.size() == 5);
  for (double a : cv.fold_accuracy) CHECK(a == 1.0);
  CHECK(cv.mean == 1.0);
}

TEST_CASE("best scores list tied models and average the winners") {
  ResultsTable t;
  t.k = 2;
  t.rows = {row("EMPLOYHH", ModelKind::ADB, 0.33, 0.9, 0.1), row("EMPLOYHH", ModelKind::RFC, 0.33, 0.8, 0.2),
            row("EMPLOYHH", ModelKind::LDA, 0.30, 0.7, -0.5), row("ATHOME", ModelKind::LDA, 0.5, 1.5, -0.42),
            row("ATHOME", ModelKind::KNN, 0.4, 1.4, -0.9)};
  auto failed = row("ATHOME", ModelKind::SVM, 0.99, 0.0, 0.99);
  failed.status = "failed: boom";
  t.rows.push_back(failed);
  const auto best = best_scores(t);
  const auto* e = best.find("EMPLOYHH");
  REQUIRE(e);
  CHECK(e->accuracy_models == std::vector<ModelKind>{ModelKind::ADB, ModelKind::RFC});
  CHECK(e->mae_models == std::vector<ModelKind>{ModelKind::LDA});
  const auto* a = best.find("ATHOME");
  REQUIRE(a);
  CHECK(a->test_accuracy == 0.5);
  CHECK(a->r2 == -0.42);
  // Independent sums over the chosen winners.
  CHECK(best.average_accuracy == doctest::Approx((0.33 + 0.5) / 2).epsilon(1e-15));
  CHECK(best.average_mae == doctest::Approx((0.7 + 1.4) / 2).epsilon(1e-15));
  CHECK(best.average_r2 == doctest::Approx((0.2 - 0.42) / 2).epsilon(1e-15));
}

TEST_CASE("best scores skip undefined R2") {
  ResultsTable t;
  t.rows = {row("HHAGE", ModelKind::LDA, 0.5, 1.0, std::numeric_limits<double>::quiet_NaN())};
  const auto best = best_scores(t);
  CHECK(std::isnan(best.entries[0].r2));
  CHECK(best.entries[0].r2_models.empty());
  CHECK(std::isnan(best.average_r2));
  ResultsTable none;
  CHECK_THROWS_AS(best_scores(none), DataError);
}

TEST_CASE("result documents round trip") {
  ResultsTable t;
  t.k = 2;
  t.rows = {row("HHAGE", ModelKind::CART, 0.25, 1.5, std::numeric_limits<double>::quiet_NaN()),
            row("HHAGE", ModelKind::KNN, 0.125, 2.0, -0.3)};
  t.rows[1].status = "failed: reason, with comma";
  const auto back = results_from_json(json::parse(to_json(t).dump()));
  REQUIRE(back.rows.size() == 2);
  CHECK(std::isnan(back.rows[0].r2));
  CHECK(back.rows[1].status == t.rows[1].status);
  CHECK(back.rows[0].fold_accuracy == t.rows[0].fold_accuracy);
  const auto best = best_scores(t);
  CHECK(to_json(best_scores_from_json(to_json(best))) == to_json(best));
  auto bad = to_json(t);
  bad["format_version"] = 7;
  CHECK_THROWS_AS(results_from_json(bad), ParseError);

  const auto dir = occupant::testing::scratch_dir("export");
  write_results_csv(t, dir / "r.csv");
  const auto text = slurp(dir / "r.csv");
  CHECK(text.rfind("target,model,train_acc,test_acc,mae,r2,status\n", 0) == 0);
  CHECK(text.find("\"failed: reason, with comma\"") != std::string::npos);
  write_best_scores_csv(best, dir / "b.csv");
  CHECK(slurp(dir / "b.csv").find("AVERAGE,") != std::string::npos);
}

namespace {

ingest::Dataset suite_fixture(std::size_t n, Rng& rng) {
  std::vector<std::string> cols{"F1", "F2"};
  for (const char* t : features::kTargetCodes) cols.emplace_back(t);
  Matrix m(n, cols.size());
  for (std::size_t r = 0; r < n; ++r) {
    m(r, 0) = static_cast<double>(rng.uniform_index(10));
    m(r, 1) = static_cast<double>(rng.uniform_index(10));
    for (std::size_t c = 2; c < cols.size(); ++c) m(r, c) = m(r, 0) < 5 ? 1.0 : 2.0;
  }
  return ingest::Dataset(cols, m);
}

}  // namespace

TEST_CASE("suite isolates failing cells") {
  Rng rng(4);
  const auto data = suite_fixture(120, rng);
  const auto spec = features::TargetSpec::from_codebook(
      ingest::Codebook::load(occupant::testing::source_dir() / "data" / "codebook.json"));
  const auto parts = ingest::split(data, 0.8, 1);
  SuiteOptions opt;
  opt.targets = {"HHAGE", "MONEYPY"};
  opt.models = {ModelKind::CART, ModelKind::KNN};
  opt.k = 3;
  opt.hooks.load = [](const std::string& t, ModelKind m) -> std::optional<CachedCell> {
    if (t == "MONEYPY" && m == ModelKind::KNN) throw ParseError("corrupt snapshot");
    return std::nullopt;
  };
  int stored = 0;
  opt.hooks.store = [&](const std::string&, ModelKind, const CachedCell&) { ++stored; };
  const auto table = evaluate_suite(parts.train, parts.test, spec, {}, 42, opt);
  REQUIRE(table.rows.size() == 4);
  CHECK(stored == 3);
  const auto* bad = table.find("MONEYPY", ModelKind::KNN);
  REQUIRE(bad);
  CHECK(bad->status.rfind("failed: ", 0) == 0);
  const auto* good = table.find("HHAGE", ModelKind::CART);
  REQUIRE(good);
  CHECK(good->ok());
  CHECK(good->test_accuracy == 1.0);
  CHECK(good->fold_accuracy.size() == 3);

  const auto again = evaluate_suite(parts.train, parts.test, spec, {}, 42, opt);
  CHECK(to_json(again) == to_json(table));
}

TEST_CASE("seed derivation separates cells") {
  CHECK(cell_seed(42, "HHAGE", ModelKind::RFC) != cell_seed(42, "HHAGE", ModelKind::CART));
  CHECK(cell_seed(42, "HHAGE", ModelKind::RFC) != cell_seed(43, "HHAGE", ModelKind::RFC));
  CHECK(fold_seed(42, "HHAGE") == fold_seed(42, "HHAGE"));
}
