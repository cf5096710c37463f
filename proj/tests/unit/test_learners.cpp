#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "generators.hpp"
#include "occupant/learners.hpp"

using namespace occupant;
using namespace occupant::learners;
using occupant::testing::blobs;
using occupant::testing::consistent_dataset;
using occupant::testing::grid_matrix;
using occupant::testing::random_labels;

namespace {

// Full sort of (squared distance, index), then a plain majority count.
Label knn_oracle(const Matrix& X, const std::vector<Label>& y, std::span<const double> q, int k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < X.cols(); ++j) s += (X(i, j) - q[j]) * (X(i, j) - q[j]);
    d.emplace_back(s, i);
  }
  std::sort(d.begin(), d.end());
  std::map<Label, int> votes;
  for (int i = 0; i < k; ++i) votes[y[d[i].second]]++;
  Label best = votes.begin()->first;
  int count = -1;
  for (const auto& [label, c] : votes) {
    if (c > count) {
      best = label;
      count = c;
    }
  }
  return best;
}

double train_accuracy(const TrainedModel& m, const Matrix& X, const std::vector<double>& y) {
  const auto p = predict(m, X);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hit += p[i] == static_cast<Label>(y[i]);
  return static_cast<double>(hit) / static_cast<double>(y.size());
}

}  // namespace

TEST_CASE("gini impurity") {
  const std::vector<Label> y{1, 1, 2, 3};
  CHECK(gini(y) == doctest::Approx(0.625).epsilon(1e-15));
  const std::vector<Label> pure{4, 4, 4};
  CHECK(gini(pure) == 0.0);
}

TEST_CASE("argmax ties resolve to the first index") {
  const std::vector<double> s{1.0, 3.0, 3.0, 2.0};
  CHECK(argmax_first(s) == 1);
}

TEST_CASE("model kind names") {
  for (auto k : kAllModels) CHECK(parse_model_kind(to_string(k)) == k);
  CHECK(parse_model_kind("rfc") == ModelKind::RFC);
  CHECK_THROWS_AS(parse_model_kind("GBM"), InputError);
}

TEST_CASE("knn matches a brute-force sort on random instances") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + rng.uniform_index(40);
    const std::size_t d = 1 + rng.uniform_index(4);
    const int k = 1 + static_cast<int>(rng.uniform_index(std::min<std::size_t>(n, 9)));
    const Matrix X = grid_matrix(rng, n, d);
    std::vector<Label> y(n);
    for (auto& v : y) v = static_cast<Label>(rng.uniform_index(3));
    const Matrix q = grid_matrix(rng, 1, d);
    REQUIRE(knn_predict(X, y, q.row(0), k) == knn_oracle(X, y, q.row(0), k));
  }
}

TEST_CASE("unrestricted CART fits consistent data exactly") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto data = consistent_dataset(rng, 150, 4, 2 + trial % 4);
    const auto m = fit(ModelKind::CART, data.X, data.y, {}, 1);
    CHECK(train_accuracy(m, data.X, data.y) == 1.0);
  }
}

TEST_CASE("CART depth limit is honoured") {
  Rng rng(12);
  const auto data = consistent_dataset(rng, 100, 3, 3);
  Hyperparams hp;
  hp.cart.max_depth = 1;
  const auto m = fit(ModelKind::CART, data.X, data.y, hp, 1);
  CHECK(std::get<Tree>(m.payload()).nodes.size() <= 3);
}

TEST_CASE("single-tree forest without bootstrap equals CART") {
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    const auto data = consistent_dataset(rng, 120, 5, 3);
    Hyperparams hp;
    hp.rfc.n_trees = 1;
    hp.rfc.bootstrap = false;
    hp.rfc.features_per_split = 5;
    const auto cart = fit(ModelKind::CART, data.X, data.y, hp, 99);
    const auto rfc = fit(ModelKind::RFC, data.X, data.y, hp, 99);
    CHECK(std::get<ForestModel>(rfc.payload()).trees.front() == std::get<Tree>(cart.payload()));
    const auto probe = grid_matrix(rng, 50, 5, 50);
    CHECK(predict(cart, probe) == predict(rfc, probe));
  }
}

TEST_CASE("LDA separates well-spaced blobs") {
  Rng rng(21);
  const auto data = blobs(rng, 100, 2, 2, 10.0);
  CHECK(train_accuracy(fit(ModelKind::LDA, data.X, data.y, {}, 1), data.X, data.y) == 1.0);
  const auto multi = blobs(rng, 60, 3, 4, 10.0);
  CHECK(train_accuracy(fit(ModelKind::LDA, multi.X, multi.y, {}, 1), multi.X, multi.y) == 1.0);
}

TEST_CASE("LDA without ridge rejects a singular covariance") {
  Rng rng(22);
  auto data = blobs(rng, 30, 2, 2, 5.0);
  Matrix X(data.X.rows(), 3);
  for (std::size_t r = 0; r < X.rows(); ++r) {
    X(r, 0) = data.X(r, 0);
    X(r, 1) = data.X(r, 1);
    X(r, 2) = data.X(r, 0);
  }
  Hyperparams hp;
  hp.lda.ridge = 0.0;
  CHECK_THROWS_AS(fit(ModelKind::LDA, X, data.y, hp, 1), ModelError);
  hp.lda.ridge.reset();
  CHECK_NOTHROW(fit(ModelKind::LDA, X, data.y, hp, 1));
}

TEST_CASE("linear SVM separates well-spaced blobs") {
  Rng rng(31);
  const auto data = blobs(rng, 100, 2, 2, 10.0);
  CHECK(train_accuracy(fit(ModelKind::SVM, data.X, data.y, {}, 5), data.X, data.y) == 1.0);
  // Collinear centres leave the middle class inseparable one-vs-rest, so
  // the three classes sit on a triangle instead.
  const double centres[3][2] = {{0, 0}, {12, 0}, {0, 12}};
  Matrix X(150, 2);
  std::vector<double> y;
  for (std::size_t r = 0; r < 150; ++r) {
    const auto c = r / 50;
    X(r, 0) = centres[c][0] + rng.normal();
    X(r, 1) = centres[c][1] + rng.normal();
    y.push_back(static_cast<double>(c));
  }
  CHECK(train_accuracy(fit(ModelKind::SVM, X, y, {}, 5), X, y) == 1.0);
}

TEST_CASE("adaboost round weights") {
  const std::vector<double> w{0.25, 0.25, 0.25, 0.25};
  const std::vector<bool> miss{true, false, false, false};
  const auto r = adaboost_round(w, miss, 0.25, 2);
  CHECK(r.status == RoundStatus::Accepted);
  CHECK(r.alpha == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  // 0.25 * 3 then renormalised over a total of 1.5.
  CHECK(r.weights[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(r.weights[1] == doctest::Approx(0.25 / 1.5).epsilon(1e-14));

  const auto k3 = adaboost_round(w, miss, 0.25, 3);
  CHECK(k3.alpha == doctest::Approx(std::log(3.0) + std::log(2.0)).epsilon(1e-14));

  const auto chance = adaboost_round(w, {true, true, false, false}, 0.5, 2);
  CHECK(chance.status == RoundStatus::WorseThanChance);
  CHECK(chance.alpha == doctest::Approx(0.0));

  const auto perfect = adaboost_round(w, {false, false, false, false}, 0.0, 2);
  CHECK(perfect.status == RoundStatus::Perfect);

  CHECK_THROWS_AS(adaboost_round(w, miss, 1.5, 2), InputError);
  CHECK_THROWS_AS(adaboost_round(w, miss, 0.25, 1), InputError);
}

TEST_CASE("adaboost stops on a perfect stump") {
  Matrix X(6, 2);
  std::vector<double> y;
  for (std::size_t i = 0; i < 6; ++i) {
    X(i, 0) = static_cast<double>(i);
    X(i, 1) = static_cast<double>(i % 2);
    y.push_back(i < 3 ? 0.0 : 1.0);
  }
  const auto m = fit(ModelKind::ADB, X, y, {}, 1);
  const auto& ab = std::get<AdaBoostModel>(m.payload());
  CHECK(ab.stumps.size() == 1);
  CHECK(ab.stumps[0].feature == 0);
  CHECK(train_accuracy(m, X, y) == 1.0);
}

TEST_CASE("adaboost keeps one stump when no round beats chance") {
  // XOR labels: every single-feature stump has weighted error 0.5.
  const Matrix X = Matrix::from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  const std::vector<double> y{0, 1, 1, 0};
  const auto m = fit(ModelKind::ADB, X, y, {}, 1);
  const auto& ab = std::get<AdaBoostModel>(m.payload());
  CHECK(ab.stumps.size() == 1);
  CHECK(ab.alphas == std::vector<double>{1.0});
}

TEST_CASE("every model kind survives a snapshot round trip") {
  Rng rng(41);
  const auto data = blobs(rng, 40, 3, 3, 3.0);
  Hyperparams hp;
  hp.rfc.n_trees = 7;
  hp.adb.n_rounds = 5;
  for (auto kind : kAllModels) {
    CAPTURE(to_string(kind));
    const auto m = fit(kind, data.X, data.y, hp, 5, {"a", "b", "c"});
    const auto text = m.serialize();
    const auto back = TrainedModel::from_json(json::parse(text));
    CHECK(back.serialize() == text);
    CHECK(predict(back, data.X) == predict(m, data.X));
    CHECK(back.meta().feature_columns == std::vector<std::string>{"a", "b", "c"});
  }
}

TEST_CASE("snapshot loader rejects bad documents") {
  Rng rng(42);
  const auto data = blobs(rng, 20, 2, 2, 4.0);
  auto j = fit(ModelKind::CART, data.X, data.y, {}, 1).to_json();
  auto bad_version = j;
  bad_version["format_version"] = 99;
  CHECK_THROWS_AS(TrainedModel::from_json(bad_version), ParseError);
  auto bad_label = j;
  auto& nodes = bad_label["payload"]["nodes"];
  nodes[nodes.size() - 1][4] = 77;
  CHECK_THROWS_AS(TrainedModel::from_json(bad_label), ParseError);
  auto truncated = j;
  truncated.erase("payload");
  CHECK_THROWS_AS(TrainedModel::from_json(truncated), ParseError);
}

TEST_CASE("fits are deterministic for a fixed seed") {
  Rng rng(43);
  const auto data = consistent_dataset(rng, 80, 4, 3);
  Hyperparams hp;
  hp.rfc.n_trees = 5;
  for (auto kind : kAllModels) {
    CAPTURE(to_string(kind));
    CHECK(fit(kind, data.X, data.y, hp, 17).serialize() == fit(kind, data.X, data.y, hp, 17).serialize());
  }
}

TEST_CASE("forest thread count does not change the model") {
  Rng rng(44);
  const auto data = consistent_dataset(rng, 80, 4, 3);
  Hyperparams hp;
  hp.rfc.n_trees = 9;
  const auto a = fit(ModelKind::RFC, data.X, data.y, hp, 3, {}, {1});
  const auto b = fit(ModelKind::RFC, data.X, data.y, hp, 3, {}, {4});
  CHECK(a.serialize() == b.serialize());
}

TEST_CASE("fit input checks") {
  const Matrix X = Matrix::from_rows({{0, 1}, {1, 0}, {2, 2}});
  CHECK_THROWS_AS(fit(ModelKind::CART, X, std::vector<double>{0, 1}, {}, 1), InputError);
  CHECK_THROWS_AS(fit(ModelKind::CART, X, std::vector<double>{0, 1.5, 1}, {}, 1), InputError);
  Hyperparams hp;
  hp.knn_k = 4;
  CHECK_THROWS(fit(ModelKind::KNN, X, std::vector<double>{0, 1, 1}, hp, 1));
  const auto m = fit(ModelKind::CART, X, std::vector<double>{0, 1, 1}, {}, 1);
  CHECK_THROWS_AS(predict(m, Matrix(1, 3)), InputError);
}

TEST_CASE("hyperparameter documents") {
  Hyperparams hp;
  hp.knn_k = 9;
  hp.lda.ridge = 0.5;
  const auto back = Hyperparams::from_json(hp.to_json());
  CHECK(back.to_json() == hp.to_json());
  CHECK(back.digest() == hp.digest());
  CHECK(Hyperparams::from_json(json{{"knn_k", 3}}).knn_k == 3);
  CHECK_THROWS_AS(Hyperparams::from_json(json{{"depth", 3}}), InputError);
  CHECK_THROWS_AS(Hyperparams::from_json(json{{"knn_k", 0}}), InputError);
}

TEST_CASE("weighted tree ignores zero-weight rows") {
  Rng rng(45);
  const Matrix X = grid_matrix(rng, 40, 2, 10);
  const auto yd = random_labels(rng, 40, 2);
  const auto y = to_labels(yd);
  std::vector<double> w(40, 1.0);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < 40; ++i) {
    if (i % 3 == 0) w[i] = 0.0;
    else keep.push_back(i);
  }
  const Tree weighted = fit_tree(X, y, w, {});
  const Matrix Xk = X.select_rows(keep);
  std::vector<Label> yk;
  for (auto i : keep) yk.push_back(y[i]);
  const Tree subset = fit_tree(Xk, yk, std::vector<double>(keep.size(), 1.0), {});
  for (std::size_t i = 0; i < Xk.rows(); ++i) CHECK(weighted.predict(Xk.row(i)) == subset.predict(Xk.row(i)));
}
