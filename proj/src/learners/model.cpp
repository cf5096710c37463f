#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "learners_internal.hpp"

namespace occupant::learners {

namespace detail {

EncodedClasses encode_classes(std::span<const Label> y) {
  EncodedClasses enc;
  enc.codes.assign(y.begin(), y.end());
  std::sort(enc.codes.begin(), enc.codes.end());
  enc.codes.erase(std::unique(enc.codes.begin(), enc.codes.end()), enc.codes.end());
  if (enc.codes.empty()) throw InputError("no labels");
  enc.index.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    enc.index[i] = static_cast<int>(std::lower_bound(enc.codes.begin(), enc.codes.end(), y[i]) -
                                    enc.codes.begin());
  }
  return enc;
}

void standardization(const Matrix& X, std::vector<double>& mean, std::vector<double>& scale) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  mean.assign(d, 0.0);
  scale.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += X(i, j);
  }
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double t = X(i, j) - mean[j];
      scale[j] += t * t;
    }
  }
  for (double& s : scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 0.0) || !std::isfinite(s)) s = 1.0;
  }
}

}  // namespace detail

std::size_t argmax_first(std::span<const double> scores) {
  if (scores.empty()) throw InputError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

std::vector<Label> to_labels(std::span<const double> y) {
  std::vector<Label> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = y[i];
    if (!std::isfinite(v) || std::floor(v) != v || v < std::numeric_limits<Label>::min() ||
        v > std::numeric_limits<Label>::max()) {
      throw InputError("label at row " + std::to_string(i) + " is not an integer code");
    }
    out[i] = static_cast<Label>(v);
  }
  return out;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::LDA: return "LDA";
    case ModelKind::KNN: return "KNN";
    case ModelKind::CART: return "CART";
    case ModelKind::SVM: return "SVM";
    case ModelKind::ADB: return "ADB";
    case ModelKind::RFC: return "RFC";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  const std::string up = to_upper(trim(name));
  for (ModelKind k : kAllModels) {
    if (to_string(k) == up) return k;
  }
  throw InputError("unknown model '" + name + "' (expected one of LDA, KNN, CART, SVM, ADB, RFC)");
}

// ------------------------------------------------------------ hyperparams

void Hyperparams::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw InputError(std::string("hyperparameter ") + what);
  };
  need(knn_k >= 1, "knn_k must be >= 1");
  need(cart.max_depth >= 0, "cart.max_depth must be >= 0 (0 = unlimited)");
  need(cart.min_samples_split >= 2, "cart.min_samples_split must be >= 2");
  need(rfc.n_trees >= 1, "rfc.n_trees must be >= 1");
  need(rfc.features_per_split >= 0, "rfc.features_per_split must be >= 0 (0 = sqrt of width)");
  need(adb.n_rounds >= 1, "adb.n_rounds must be >= 1");
  need(svm.lambda > 0.0 && std::isfinite(svm.lambda), "svm.lambda must be > 0");
  need(svm.epochs >= 1, "svm.epochs must be >= 1");
  need(!lda.ridge || (*lda.ridge >= 0.0 && std::isfinite(*lda.ridge)), "lda.ridge must be >= 0");
}

json Hyperparams::to_json() const {
  return {
      {"knn_k", knn_k},
      {"cart", {{"max_depth", cart.max_depth}, {"min_samples_split", cart.min_samples_split}}},
      {"rfc",
       {{"n_trees", rfc.n_trees}, {"features_per_split", rfc.features_per_split}, {"bootstrap", rfc.bootstrap}}},
      {"adb", {{"n_rounds", adb.n_rounds}}},
      {"svm", {{"lambda", svm.lambda}, {"epochs", svm.epochs}}},
      {"lda", {{"ridge", lda.ridge ? json(*lda.ridge) : json(nullptr)}}},
  };
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [k, _] : j.items()) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* x) { return k == x; }) == keys.end()) {
      throw InputError("unknown hyperparameter '" + where + k + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

Hyperparams Hyperparams::from_json(const json& j) {
  Hyperparams hp;
  if (!j.is_object()) throw InputError("hyperparameters must be an object");
  try {
    reject_unknown(j, {"knn_k", "cart", "rfc", "adb", "svm", "lda"}, "");
    read(j, "knn_k", hp.knn_k);
    if (j.contains("cart")) {
      const auto& c = j.at("cart");
      reject_unknown(c, {"max_depth", "min_samples_split"}, "cart.");
      read(c, "max_depth", hp.cart.max_depth);
      read(c, "min_samples_split", hp.cart.min_samples_split);
    }
    if (j.contains("rfc")) {
      const auto& c = j.at("rfc");
      reject_unknown(c, {"n_trees", "features_per_split", "bootstrap"}, "rfc.");
      read(c, "n_trees", hp.rfc.n_trees);
      read(c, "features_per_split", hp.rfc.features_per_split);
      read(c, "bootstrap", hp.rfc.bootstrap);
    }
    if (j.contains("adb")) {
      const auto& c = j.at("adb");
      reject_unknown(c, {"n_rounds"}, "adb.");
      read(c, "n_rounds", hp.adb.n_rounds);
    }
    if (j.contains("svm")) {
      const auto& c = j.at("svm");
      reject_unknown(c, {"lambda", "epochs"}, "svm.");
      read(c, "lambda", hp.svm.lambda);
      read(c, "epochs", hp.svm.epochs);
    }
    if (j.contains("lda")) {
      const auto& c = j.at("lda");
      reject_unknown(c, {"ridge"}, "lda.");
      if (c.contains("ridge") && !c.at("ridge").is_null()) hp.lda.ridge = c.at("ridge").get<double>();
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed hyperparameters: ") + e.what());
  }
  hp.validate();
  return hp;
}

std::string Hyperparams::digest() const { return sha256_hex(to_json().dump()); }

// ------------------------------------------------------------ snapshot

TrainedModel::TrainedModel(ModelKind kind, std::vector<Label> class_set, Payload payload, Hyperparams hp,
                           TrainMeta meta)
    : kind_(kind), class_set_(std::move(class_set)), payload_(std::move(payload)), hp_(std::move(hp)),
      meta_(std::move(meta)) {
  if (class_set_.empty() || !std::is_sorted(class_set_.begin(), class_set_.end()) ||
      std::adjacent_find(class_set_.begin(), class_set_.end()) != class_set_.end()) {
    throw InputError("class set must be non-empty, sorted and unique");
  }
}

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from(const json& j, std::size_t cols) {
  std::vector<std::vector<double>> rows = j.get<std::vector<std::vector<double>>>();
  for (const auto& r : rows) {
    if (r.size() != cols) throw ParseError("snapshot matrix row has the wrong width");
  }
  if (rows.empty()) return Matrix(0, cols);
  return Matrix::from_rows(rows);
}

json tree_json(const Tree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label});
  return nodes;
}

Tree tree_from(const json& j) {
  Tree t;
  for (const auto& a : j) {
    if (!a.is_array() || a.size() != 5) throw ParseError("snapshot tree node must have five fields");
    t.nodes.push_back({a[0].get<int>(), a[1].get<double>(), a[2].get<int>(), a[3].get<int>(), a[4].get<Label>()});
  }
  return t;
}

struct PayloadWriter {
  json operator()(const LdaModel& m) const {
    return {{"feature_mean", m.feature_mean}, {"feature_scale", m.feature_scale},
            {"class_means", matrix_json(m.class_means)}, {"priors", m.priors},
            {"ridge", m.ridge}, {"coef", matrix_json(m.coef)}, {"intercept", m.intercept}};
  }
  json operator()(const KnnModel& m) const {
    return {{"k", m.k}, {"labels", m.labels}, {"train", matrix_json(m.train)}};
  }
  json operator()(const Tree& t) const { return {{"nodes", tree_json(t)}}; }
  json operator()(const SvmModel& m) const {
    return {{"feature_mean", m.feature_mean}, {"feature_scale", m.feature_scale},
            {"weights", matrix_json(m.weights)}, {"bias", m.bias}};
  }
  json operator()(const AdaBoostModel& m) const {
    json stumps = json::array();
    for (const auto& s : m.stumps) stumps.push_back({s.feature, s.threshold, s.left, s.right});
    return {{"stumps", stumps}, {"alphas", m.alphas}};
  }
  json operator()(const ForestModel& m) const {
    json trees = json::array();
    for (const auto& t : m.trees) trees.push_back(tree_json(t));
    return {{"seeds", m.seeds}, {"trees", trees}};
  }
};

class PayloadChecker {
 public:
  PayloadChecker(std::size_t width, const std::vector<Label>& classes) : d_(width), classes_(classes) {}

  void operator()(const LdaModel& m) const {
    const std::size_t K = classes_.size();
    require(m.feature_mean.size() == d_ && m.feature_scale.size() == d_, "lda standardization width");
    require(m.class_means.rows() == K && m.coef.rows() == K && m.coef.cols() == d_, "lda coefficient shape");
    require(m.priors.size() == K && m.intercept.size() == K, "lda class count");
    for (double s : m.feature_scale) require(s > 0.0, "lda scale must be positive");
  }
  void operator()(const KnnModel& m) const {
    require(m.train.cols() == d_ && m.train.rows() == m.labels.size(), "knn stored shape");
    require(m.k >= 1 && static_cast<std::size_t>(m.k) <= m.labels.size(), "knn k");
    for (Label l : m.labels) label(l);
  }
  void operator()(const Tree& t) const { tree(t); }
  void operator()(const SvmModel& m) const {
    require(m.feature_mean.size() == d_ && m.feature_scale.size() == d_, "svm standardization width");
    require(m.weights.rows() == classes_.size() && m.weights.cols() == d_, "svm weight shape");
    require(m.bias.size() == classes_.size(), "svm bias count");
    for (double s : m.feature_scale) require(s > 0.0, "svm scale must be positive");
  }
  void operator()(const AdaBoostModel& m) const {
    require(!m.stumps.empty() && m.stumps.size() == m.alphas.size(), "adaboost member count");
    for (const auto& s : m.stumps) {
      require(s.feature >= -1 && (s.feature < 0 || static_cast<std::size_t>(s.feature) < d_), "stump feature");
      label(s.left);
      label(s.right);
    }
  }
  void operator()(const ForestModel& m) const {
    require(!m.trees.empty() && m.trees.size() == m.seeds.size(), "forest tree count");
    for (const auto& t : m.trees) tree(t);
  }

 private:
  static void require(bool ok, const char* what) {
    if (!ok) throw ParseError(std::string("inconsistent snapshot: ") + what);
  }
  void label(Label l) const {
    require(std::binary_search(classes_.begin(), classes_.end(), l), "label outside class set");
  }
  void tree(const Tree& t) const {
    require(!t.nodes.empty(), "empty tree");
    const auto n = static_cast<int>(t.nodes.size());
    for (int i = 0; i < n; ++i) {
      const auto& node = t.nodes[static_cast<std::size_t>(i)];
      if (node.feature < 0) {
        label(node.label);
        continue;
      }
      require(static_cast<std::size_t>(node.feature) < d_, "tree feature index");
      // Children always follow their parent, which also rules out cycles.
      require(node.left > i && node.left < n && node.right > i && node.right < n, "tree child index");
    }
  }

  std::size_t d_;
  const std::vector<Label>& classes_;
};

}  // namespace

json TrainedModel::to_json() const {
  return {{"format_version", kModelFormatVersion},
          {"kind", learners::to_string(kind_)},
          {"class_set", class_set_},
          {"hyperparams", hp_.to_json()},
          {"train_meta",
           {{"seed", meta_.seed},
            {"hyperparams_digest", meta_.hyperparams_digest},
            {"feature_columns", meta_.feature_columns}}},
          {"payload", std::visit(PayloadWriter{}, payload_)}};
}

TrainedModel TrainedModel::from_json(const json& j) {
  try {
    if (!j.is_object() || !j.contains("format_version")) throw ParseError("snapshot lacks format_version");
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw ParseError("unsupported snapshot format_version " + std::to_string(version));
    }
    ModelKind kind;
    try {
      kind = parse_model_kind(j.at("kind").get<std::string>());
    } catch (const InputError& e) {
      throw ParseError(e.what());
    }
    auto classes = j.at("class_set").get<std::vector<Label>>();
    Hyperparams hp;
    try {
      hp = Hyperparams::from_json(j.at("hyperparams"));
    } catch (const InputError& e) {
      throw ParseError(e.what());
    }
    const auto& m = j.at("train_meta");
    TrainMeta meta{m.at("seed").get<std::uint64_t>(), m.at("hyperparams_digest").get<std::string>(),
                   m.at("feature_columns").get<std::vector<std::string>>()};
    const std::size_t d = meta.feature_columns.size();
    const auto& p = j.at("payload");
    Payload payload;
    switch (kind) {
      case ModelKind::LDA: {
        LdaModel lda;
        lda.feature_mean = p.at("feature_mean").get<std::vector<double>>();
        lda.feature_scale = p.at("feature_scale").get<std::vector<double>>();
        lda.class_means = matrix_from(p.at("class_means"), d);
        lda.priors = p.at("priors").get<std::vector<double>>();
        lda.ridge = p.at("ridge").get<double>();
        lda.coef = matrix_from(p.at("coef"), d);
        lda.intercept = p.at("intercept").get<std::vector<double>>();
        payload = std::move(lda);
        break;
      }
      case ModelKind::KNN: {
        KnnModel knn;
        knn.k = p.at("k").get<int>();
        knn.labels = p.at("labels").get<std::vector<Label>>();
        knn.train = matrix_from(p.at("train"), d);
        payload = std::move(knn);
        break;
      }
      case ModelKind::CART:
        payload = tree_from(p.at("nodes"));
        break;
      case ModelKind::SVM: {
        SvmModel svm;
        svm.feature_mean = p.at("feature_mean").get<std::vector<double>>();
        svm.feature_scale = p.at("feature_scale").get<std::vector<double>>();
        svm.weights = matrix_from(p.at("weights"), d);
        svm.bias = p.at("bias").get<std::vector<double>>();
        payload = std::move(svm);
        break;
      }
      case ModelKind::ADB: {
        AdaBoostModel adb;
        for (const auto& a : p.at("stumps")) {
          if (!a.is_array() || a.size() != 4) throw ParseError("snapshot stump must have four fields");
          adb.stumps.push_back({a[0].get<int>(), a[1].get<double>(), a[2].get<Label>(), a[3].get<Label>()});
        }
        adb.alphas = p.at("alphas").get<std::vector<double>>();
        payload = std::move(adb);
        break;
      }
      case ModelKind::RFC: {
        ForestModel rf;
        rf.seeds = p.at("seeds").get<std::vector<std::uint64_t>>();
        for (const auto& t : p.at("trees")) rf.trees.push_back(tree_from(t));
        payload = std::move(rf);
        break;
      }
    }
    std::visit(PayloadChecker(d, classes), payload);
    try {
      return TrainedModel(kind, std::move(classes), std::move(payload), std::move(hp), std::move(meta));
    } catch (const InputError& e) {
      throw ParseError(e.what());
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed snapshot: ") + e.what());
  }
}

// ------------------------------------------------------------ fit / predict

TrainedModel fit(ModelKind kind, const Matrix& X, std::span<const double> y, const Hyperparams& hp,
                 std::uint64_t seed, std::vector<std::string> feature_columns, FitOptions options) {
  hp.validate();
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  if (n != y.size()) throw InputError("fit: X has " + std::to_string(n) + " rows but y has " + std::to_string(y.size()));
  if (n < 2) throw InputError("fit: need at least two samples");
  if (d == 0) throw InputError("fit: no feature columns");
  for (double v : X.data()) {
    if (!std::isfinite(v)) throw InputError("fit: non-finite feature value");
  }
  if (feature_columns.empty()) {
    for (std::size_t j = 0; j < d; ++j) feature_columns.push_back("x" + std::to_string(j));
  } else if (feature_columns.size() != d) {
    throw InputError("fit: feature column list does not match the matrix width");
  }
  const auto labels = to_labels(y);
  const auto enc = detail::encode_classes(labels);

  Payload payload;
  switch (kind) {
    case ModelKind::LDA:
      payload = lda_fit(X, labels, hp.lda.ridge);
      break;
    case ModelKind::KNN:
      if (static_cast<std::size_t>(hp.knn_k) > n) throw InputError("fit: knn_k exceeds the number of rows");
      payload = KnnModel{X, labels, hp.knn_k};
      break;
    case ModelKind::CART: {
      const std::vector<double> ones(n, 1.0);
      const detail::FeatureIndex fx(X);
      TreeOptions opt{hp.cart.max_depth, hp.cart.min_samples_split, 0};
      payload = detail::grow_tree(fx, enc.index, ones, static_cast<int>(enc.codes.size()), enc.codes, opt,
                                  nullptr);
      break;
    }
    case ModelKind::SVM:
      payload = svm_fit_ovr(X, labels, hp.svm, derive_seed(seed, "svm"));
      break;
    case ModelKind::ADB:
      payload = detail::adaboost_fit(X, labels, enc.codes, hp.adb);
      break;
    case ModelKind::RFC:
      payload = detail::forest_fit(X, labels, hp.rfc, seed, options.threads);
      break;
  }
  TrainMeta meta{seed, hp.digest(), std::move(feature_columns)};
  return TrainedModel(kind, enc.codes, std::move(payload), hp, std::move(meta));
}

std::vector<Label> predict(const TrainedModel& model, const Matrix& X) {
  if (X.cols() != model.width()) {
    throw InputError("predict: matrix has " + std::to_string(X.cols()) + " columns, model expects " +
                     std::to_string(model.width()));
  }
  const auto& codes = model.class_set();
  std::vector<Label> out(X.rows());
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        for (std::size_t i = 0; i < X.rows(); ++i) {
          const auto x = X.row(i);
          if constexpr (std::is_same_v<T, LdaModel>) {
            out[i] = lda_predict(m, codes, x);
          } else if constexpr (std::is_same_v<T, KnnModel>) {
            out[i] = knn_predict(m.train, m.labels, x, m.k);
          } else if constexpr (std::is_same_v<T, Tree>) {
            out[i] = m.predict(x);
          } else if constexpr (std::is_same_v<T, SvmModel>) {
            out[i] = svm_predict(m, codes, x);
          } else if constexpr (std::is_same_v<T, AdaBoostModel>) {
            out[i] = detail::adaboost_predict(m, codes, x);
          } else {
            out[i] = detail::forest_predict(m, codes, x);
          }
        }
      },
      model.payload());
  return out;
}

}  // namespace occupant::learners
