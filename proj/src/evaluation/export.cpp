#include <cmath>
#include <fstream>
#include <limits>

#include "occupant/evaluation.hpp"

namespace occupant::evaluation {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string num(double v) { return ingest::format_number(v); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q.push_back('"');
    q.push_back(c);
  }
  q.push_back('"');
  return q;
}

std::string join_models(const std::vector<ModelKind>& models) {
  std::string s;
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (i) s.push_back(';');
    s += learners::to_string(models[i]);
  }
  return s;
}

json number_json(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::vector<ModelKind> models_from(const json& j) {
  std::vector<ModelKind> out;
  for (const auto& m : j) out.push_back(learners::parse_model_kind(m.get<std::string>()));
  return out;
}

json models_json(const std::vector<ModelKind>& models) {
  json a = json::array();
  for (ModelKind m : models) a.push_back(learners::to_string(m));
  return a;
}

void check_version(const json& j, const char* what) {
  if (!j.is_object() || !j.contains("format_version") ||
      j.at("format_version").get<int>() != kResultsFormatVersion) {
    throw ParseError(std::string("unsupported or missing format_version in ") + what);
  }
}

}  // namespace

void write_results_csv(const ResultsTable& table, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "target,model,train_acc,test_acc,mae,r2,status\n";
  for (const auto& r : table.rows) {
    out << r.target << ',' << learners::to_string(r.model) << ',' << num(r.train_accuracy) << ','
        << num(r.test_accuracy) << ',' << num(r.mae) << ',' << num(r.r2) << ',' << csv_field(r.status) << '\n';
  }
}

void write_best_scores_csv(const BestScores& best, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "target,best_test_acc,test_acc_models,best_mae,mae_models,best_r2,r2_models\n";
  for (const auto& e : best.entries) {
    out << e.target << ',' << num(e.test_accuracy) << ',' << join_models(e.accuracy_models) << ','
        << num(e.mae) << ',' << join_models(e.mae_models) << ',' << num(e.r2) << ','
        << join_models(e.r2_models) << '\n';
  }
  out << "AVERAGE," << num(best.average_accuracy) << ",," << num(best.average_mae) << ",,"
      << num(best.average_r2) << ",\n";
}

void write_fold_detail_csv(const ResultsTable& table, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "target,model";
  for (std::size_t f = 0; f < table.k; ++f) out << ",fold_" << f;
  out << '\n';
  for (const auto& r : table.rows) {
    out << r.target << ',' << learners::to_string(r.model);
    for (std::size_t f = 0; f < table.k; ++f) {
      out << ',';
      if (f < r.fold_accuracy.size()) out << num(r.fold_accuracy[f]);
    }
    out << '\n';
  }
}

json to_json(const ResultsTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"target", r.target},
                    {"model", learners::to_string(r.model)},
                    {"train_acc", number_json(r.train_accuracy)},
                    {"test_acc", number_json(r.test_accuracy)},
                    {"mae", number_json(r.mae)},
                    {"r2", number_json(r.r2)},
                    {"fold_accuracy", r.fold_accuracy},
                    {"status", r.status}});
  }
  return {{"format_version", kResultsFormatVersion}, {"k", table.k}, {"rows", rows}};
}

ResultsTable results_from_json(const json& j) {
  try {
    check_version(j, "results document");
    ResultsTable t;
    t.k = j.at("k").get<std::size_t>();
    for (const auto& r : j.at("rows")) {
      MetricsRow row;
      row.target = r.at("target").get<std::string>();
      row.model = learners::parse_model_kind(r.at("model").get<std::string>());
      row.train_accuracy = number_from(r.at("train_acc"));
      row.test_accuracy = number_from(r.at("test_acc"));
      row.mae = number_from(r.at("mae"));
      row.r2 = number_from(r.at("r2"));
      row.fold_accuracy = r.at("fold_accuracy").get<std::vector<double>>();
      row.status = r.at("status").get<std::string>();
      t.rows.push_back(std::move(row));
    }
    return t;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed results document: ") + e.what());
  }
}

json to_json(const BestScores& best) {
  json entries = json::array();
  for (const auto& e : best.entries) {
    entries.push_back({{"target", e.target},
                       {"best_test_acc", number_json(e.test_accuracy)},
                       {"test_acc_models", models_json(e.accuracy_models)},
                       {"best_mae", number_json(e.mae)},
                       {"mae_models", models_json(e.mae_models)},
                       {"best_r2", number_json(e.r2)},
                       {"r2_models", models_json(e.r2_models)}});
  }
  return {{"format_version", kResultsFormatVersion},
          {"entries", entries},
          {"average",
           {{"test_acc", number_json(best.average_accuracy)},
            {"mae", number_json(best.average_mae)},
            {"r2", number_json(best.average_r2)}}}};
}

BestScores best_scores_from_json(const json& j) {
  try {
    check_version(j, "best-scores document");
    BestScores b;
    for (const auto& e : j.at("entries")) {
      BestEntry x;
      x.target = e.at("target").get<std::string>();
      x.test_accuracy = number_from(e.at("best_test_acc"));
      x.accuracy_models = models_from(e.at("test_acc_models"));
      x.mae = number_from(e.at("best_mae"));
      x.mae_models = models_from(e.at("mae_models"));
      x.r2 = number_from(e.at("best_r2"));
      x.r2_models = models_from(e.at("r2_models"));
      b.entries.push_back(std::move(x));
    }
    const auto& a = j.at("average");
    b.average_accuracy = number_from(a.at("test_acc"));
    b.average_mae = number_from(a.at("mae"));
    b.average_r2 = number_from(a.at("r2"));
    return b;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed best-scores document: ") + e.what());
  }
}

}  // namespace occupant::evaluation
