#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <set>

#include "occupant/features.hpp"
#include "occupant/ingest.hpp"
#include "occupant/persona.hpp"

namespace occupant::cli {

namespace {

using learners::ModelKind;

std::string fixed(double v, int digits = 4) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? sep : "") + parts[i];
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// Everything derived from the prepared dataset that several commands share.
struct Workspace {
  ingest::Codebook codebook;
  features::TargetSpec spec;
  ingest::Dataset data;
  std::string dataset_digest;
  std::string model_digest;
  ingest::Split split;

  static Workspace open(const RunConfig& cfg) {
    const fs::path path = cfg.prepared_dataset();
    if (!fs::exists(path)) {
      throw DataError("prepared dataset " + path.string() + " not found; run 'occupant prepare' first");
    }
    Workspace w;
    w.codebook = ingest::Codebook::load(cfg.codebook_path);
    w.spec = features::TargetSpec::from_codebook(w.codebook);
    w.data = ingest::read_dataset_csv(path);
    w.dataset_digest = w.data.provenance().source_digest;
    w.model_digest = cfg.model_digest(w.dataset_digest);
    w.split = ingest::split(w.data, cfg.split_fraction, derive_seed(cfg.seed, "split"));
    return w;
  }
};

// Model choice per target: a single --model wins, otherwise the first
// best-accuracy model of the latest evaluation among the allowed models.
std::map<std::string, ModelKind> choose_models(const RunConfig& cfg, const std::vector<std::string>& targets) {
  std::map<std::string, ModelKind> chosen;
  if (cfg.models.size() == 1) {
    for (const auto& t : targets) chosen[t] = cfg.models.front();
    return chosen;
  }
  const fs::path best_path = cfg.evaluation_dir() / "best_scores.json";
  if (!fs::exists(best_path)) {
    throw UsageError("no evaluation results at " + best_path.string() +
                     "; run 'occupant evaluate' first or pass a single --model");
  }
  const auto best = evaluation::best_scores_from_json(read_json(best_path));
  const auto allowed = cfg.model_list();
  for (const auto& t : targets) {
    const auto* e = best.find(t);
    if (!e) continue;
    for (ModelKind m : e->accuracy_models) {
      if (std::find(allowed.begin(), allowed.end(), m) != allowed.end()) {
        chosen[t] = m;
        break;
      }
    }
  }
  return chosen;
}

struct RowInput {
  std::string label;  // used in file names and reports
  std::vector<std::string> columns;
  std::vector<double> values;
  double lookup(const std::string& column) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == column) return values[i];
    }
    throw DataError("input row lacks feature column " + column);
  }
};

std::vector<RowInput> gather_rows(const CommandArgs& args, const RunConfig& cfg, const Workspace& w) {
  std::vector<RowInput> rows;
  if (!args.input.empty()) {
    if (!fs::exists(args.input)) throw DataError("input file " + args.input.string() + " not found");
    ingest::CleaningRules rules;
    const auto data = ingest::clean(ingest::load_table(args.input), rules, &w.codebook);
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
      const auto row = data.matrix().row(r);
      rows.push_back({"input" + std::to_string(r), data.columns(), {row.begin(), row.end()}});
    }
    if (rows.empty()) throw DataError("input file " + args.input.string() + " has no rows");
    return rows;
  }
  const auto& test = w.split.test;
  if (args.row >= test.n_rows()) {
    throw UsageError("row " + std::to_string(args.row) + " is outside the test split (" +
                     std::to_string(test.n_rows()) + " rows)");
  }
  const auto row = test.matrix().row(args.row);
  rows.push_back({"row" + std::to_string(args.row), test.columns(), {row.begin(), row.end()}});
  (void)cfg;
  return rows;
}

Matrix feature_matrix(const RowInput& row, const learners::TrainedModel& model) {
  const auto& cols = model.meta().feature_columns;
  Matrix X(1, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) X(0, j) = row.lookup(cols[j]);
  return X;
}

struct LoadedModels {
  std::map<std::string, evaluation::CachedCell> cells;
  std::map<std::string, ModelKind> kinds;
  std::map<std::string, std::string> files;
  std::vector<std::string> gaps;
};

LoadedModels load_models(const RunConfig& cfg, const CommandArgs& args, const Workspace& w,
                         const std::vector<std::string>& targets, std::ostream& err) {
  LoadedModels out;
  const auto chosen = choose_models(cfg, targets);
  const SnapshotStore store(cfg.models_dir());
  for (const auto& t : targets) {
    const auto it = chosen.find(t);
    if (it == chosen.end()) {
      out.gaps.push_back(t + " (not in the latest evaluation)");
      continue;
    }
    fs::path found;
    auto cell = store.load(t, it->second, cfg.seed, w.model_digest, args.allow_stale, &found);
    if (!cell) {
      out.gaps.push_back(t + " (" + learners::to_string(it->second) + ")");
      continue;
    }
    if (found.filename() != store.path_for(t, it->second, cfg.seed, w.model_digest).filename()) {
      err << "warning: using snapshot with a different config digest: " << found.filename().string() << '\n';
    }
    out.kinds[t] = it->second;
    out.files[t] = found.string();
    out.cells.emplace(t, std::move(*cell));
  }
  return out;
}

const std::vector<std::pair<char, const char*>> kCategories = {
    {'A', "Structural Characteristics"}, {'B', "Kitchen Appliances"},
    {'C', "Home Appliances and Electronics"}, {'D', "Space Heating"},
    {'E', "Air Conditioning"}, {'F', "Water Heating"},
    {'G', "Miscellaneous"}, {'H', "Fuels Used"},
    {'I', "Housing Unit Measurement"}, {'J', "Fuel Bills"},
    {'K', "Housing Unit Characteristics"}, {'L', "Energy Insecurity and Assistance"}};

// Honors SOURCE_DATE_EPOCH so repeated runs can produce identical cards.
std::string card_timestamp() {
  const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
  if (!epoch || !*epoch) return persona::utc_timestamp();
  char* end = nullptr;
  const long long secs = std::strtoll(epoch, &end, 10);
  if (*end != '\0' || secs < 0) throw UsageError("SOURCE_DATE_EPOCH must be a non-negative integer");
  const std::time_t t = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

constexpr std::size_t kSurveyColumns = 759;
constexpr std::size_t kExpectedRetained = 389;

}  // namespace

// ------------------------------------------------------------ fetch

int cmd_fetch(const RunConfig& cfg, const CommandArgs& args, std::ostream& out, std::ostream& err) {
  ingest::FetchResult res;
  try {
    res = ingest::fetch_recs(cfg.url, cfg.data_path, args.overwrite);
  } catch (const ingest::FetchError& e) {
    if (e.kind() == ingest::FetchErrorKind::InvalidUrl) throw UsageError(e.what());
    throw;
  }
  if (res.from_cache) {
    out << "using cached file " << res.path.string() << " (0 bytes downloaded)\n";
  } else {
    out << "downloaded " << res.bytes_downloaded << " bytes to " << res.path.string() << '\n';
  }
  const auto table = ingest::load_table(res.path);
  out << table.n_rows() << " rows, " << table.n_cols() << " columns\n";
  (void)err;
  return kExitOk;
}

// ------------------------------------------------------------ prepare

int cmd_prepare(const RunConfig& cfg, const CommandArgs&, std::ostream& out, std::ostream& err) {
  if (!fs::exists(cfg.data_path)) {
    throw DataError("raw data file " + cfg.data_path.string() + " not found; run 'occupant fetch' or set data_path");
  }
  const auto codebook = ingest::Codebook::load(cfg.codebook_path);
  const auto rules = features::DropRules::load(cfg.drop_rules_path);
  const ingest::CleaningRules cleaning;
  const auto raw = ingest::load_table(cfg.data_path);
  const auto cleaned = ingest::clean(raw, cleaning, &codebook);
  const auto dropped = features::apply_drop_rules(cleaned, rules);
  const auto& kept = dropped.data;
  for (const auto& w : dropped.warnings) err << "warning: " << w << '\n';

  // Everything is computed before the first file is written.
  std::map<char, std::pair<std::size_t, std::size_t>> per_category;
  std::size_t unknown_before = 0, unknown_after = 0;
  auto bucket = [&](const std::string& col, bool selected) {
    const auto* e = codebook.find(col);
    if (!e) {
      (selected ? unknown_after : unknown_before)++;
      return;
    }
    auto& p = per_category[e->category];
    (selected ? p.second : p.first)++;
  };
  for (const auto& c : cleaned.columns()) bucket(c, false);
  for (const auto& c : kept.columns()) bucket(c, true);

  std::string summary = "category,name,original,selected\n";
  for (const auto& [letter, name] : kCategories) {
    const auto p = per_category[letter];
    summary += std::string(1, letter) + "," + name + "," + std::to_string(p.first) + "," +
               std::to_string(p.second) + "\n";
  }
  summary += "?,unknown," + std::to_string(unknown_before) + "," + std::to_string(unknown_after) + "\n";
  summary += "*,total," + std::to_string(cleaned.n_cols()) + "," + std::to_string(kept.n_cols()) + "\n";

  std::vector<std::string> missing_targets;
  for (const char* t : features::kTargetCodes) {
    if (!kept.has_column(t)) missing_targets.emplace_back(t);
  }

  const fs::path dir = cfg.prepared_dir();
  fs::create_directories(dir);
  ingest::write_dataset_csv(kept, dir / "dataset.csv");
  write_text(dir / "summary.csv", summary);
  const auto& prov = cleaned.provenance();
  const json provenance = {{"format_version", 1},
                           {"source", cfg.data_path.string()},
                           {"source_digest", sha256_file(cfg.data_path.string())},
                           {"cleaning_rules_digest", prov.rules_digest},
                           {"drop_rules_digest", rules.digest()},
                           {"rows", kept.n_rows()},
                           {"columns_before", cleaned.n_cols()},
                           {"columns_after", kept.n_cols()},
                           {"dropped", dropped.dropped},
                           {"warnings", dropped.warnings},
                           {"unknown_columns", codebook.unknown_columns(kept.columns())},
                           {"raw_age", prov.raw_age}};
  write_text(dir / "provenance.json", provenance.dump(2) + "\n");

  out << "rows: " << kept.n_rows() << '\n';
  out << "columns: " << cleaned.n_cols() << " -> " << kept.n_cols() << " (" << dropped.dropped.size()
      << " dropped)\n";
  out << "category  original  selected\n";
  for (const auto& [letter, name] : kCategories) {
    const auto p = per_category[letter];
    out << "  " << letter << "       " << p.first << "  " << p.second << "  " << name << '\n';
  }
  out << "  ?       " << unknown_before << "  " << unknown_after << "  not in codebook\n";
  if (cleaned.n_cols() == kSurveyColumns && kept.n_cols() != kExpectedRetained) {
    err << "note: expected " << kExpectedRetained << " retained columns for the full survey file, got "
        << kept.n_cols() << '\n';
  }
  if (!missing_targets.empty()) err << "warning: targets absent after preparation: " << join(missing_targets, ", ") << '\n';
  out << "wrote " << (dir / "dataset.csv").string() << '\n';
  return kExitOk;
}

// ------------------------------------------------------------ correlations

int cmd_correlations(const RunConfig& cfg, const CommandArgs&, std::ostream& out, std::ostream&) {
  const fs::path path = cfg.prepared_dataset();
  if (!fs::exists(path)) throw DataError("prepared dataset " + path.string() + " not found; run 'occupant prepare' first");
  const auto data = ingest::read_dataset_csv(path);
  const fs::path dir = cfg.out_dir / "correlations";
  std::vector<features::CorrelationReport> reports;
  for (const auto& t : cfg.target_list()) reports.push_back(features::top_correlates(data, t, 10));
  for (const auto& r : reports) {
    features::write_correlation_report(r, dir);
    out << r.target << ":";
    for (const auto& [code, value] : r.ranked) out << ' ' << code << '(' << fixed(value, 3) << ')';
    out << '\n';
  }
  out << "wrote " << reports.size() << " reports to " << dir.string() << '\n';
  return kExitOk;
}

// ------------------------------------------------------------ train

int cmd_train(const RunConfig& cfg, const CommandArgs&, std::ostream& out, std::ostream& err) {
  const auto w = Workspace::open(cfg);
  const auto parts = features::separate(w.split.train, w.spec);
  const auto& X = parts.features.matrix();
  const SnapshotStore store(cfg.models_dir());
  int status = kExitOk;
  for (const auto& t : cfg.target_list()) {
    const auto y = parts.targets.column(t);
    for (ModelKind m : cfg.model_list()) {
      try {
        const auto cell = evaluation::train_cell(m, X, y, parts.features.columns(), t, cfg.hyperparams, cfg.seed,
                                                 cfg.k, cfg.stratified, cfg.threads);
        store.save(t, m, cfg.seed, w.model_digest, cell);
        out << t << ' ' << learners::to_string(m) << " folds:";
        for (double a : cell.cv.fold_accuracy) out << ' ' << fixed(a);
        out << " mean " << fixed(cell.cv.mean) << '\n';
        out << "  snapshot " << store.path_for(t, m, cfg.seed, w.model_digest).string() << '\n';
      } catch (const Error& e) {
        err << t << ' ' << learners::to_string(m) << " failed: " << e.what() << '\n';
        status = kExitFailure;
      }
    }
  }
  return status;
}

// ------------------------------------------------------------ evaluate

int cmd_evaluate(const RunConfig& cfg, const CommandArgs& args, std::ostream& out, std::ostream& err) {
  const auto w = Workspace::open(cfg);
  const SnapshotStore store(cfg.models_dir());
  std::mutex log_mutex;

  evaluation::SuiteOptions opt;
  opt.targets = cfg.target_list();
  opt.models = cfg.model_list();
  opt.k = cfg.k;
  opt.stratified = cfg.stratified;
  opt.threads = cfg.threads;
  opt.hooks.load = [&](const std::string& t, ModelKind m) {
    return store.load(t, m, cfg.seed, w.model_digest, args.allow_stale);
  };
  opt.hooks.store = [&](const std::string& t, ModelKind m, const evaluation::CachedCell& cell) {
    store.save(t, m, cfg.seed, w.model_digest, cell);
    std::lock_guard<std::mutex> lock(log_mutex);
    err << "trained " << t << ' ' << learners::to_string(m) << '\n';
  };
  const auto table = evaluation::evaluate_suite(w.split.train, w.split.test, w.spec, cfg.hyperparams, cfg.seed, opt);

  const fs::path dir = cfg.evaluation_dir();
  evaluation::write_results_csv(table, dir / "results.csv");
  evaluation::write_fold_detail_csv(table, dir / "fold_detail.csv");
  write_text(dir / "results.json", evaluation::to_json(table).dump(2) + "\n");

  int status = kExitOk;
  out << "target       model  train_acc  test_acc  mae      r2\n";
  for (const auto& r : table.rows) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %-5s  %-9s  %-8s  %-7s  %s", r.target.c_str(),
                  learners::to_string(r.model).c_str(), fixed(r.train_accuracy).c_str(),
                  fixed(r.test_accuracy).c_str(), fixed(r.mae).c_str(), fixed(r.r2).c_str());
    out << line;
    if (!r.ok()) {
      out << "  " << r.status;
      status = kExitFailure;
    }
    out << '\n';
  }
  try {
    const auto best = evaluation::best_scores(table);
    evaluation::write_best_scores_csv(best, dir / "best_scores.csv");
    write_text(dir / "best_scores.json", evaluation::to_json(best).dump(2) + "\n");
    out << "average best test accuracy " << fixed(best.average_accuracy) << ", MAE " << fixed(best.average_mae)
        << ", R2 " << fixed(best.average_r2) << '\n';
  } catch (const DataError& e) {
    err << "no best scores: " << e.what() << '\n';
    status = kExitFailure;
  }
  out << "wrote " << dir.string() << '\n';
  return status;
}

// ------------------------------------------------------------ predict

int cmd_predict(const RunConfig& cfg, const CommandArgs& args, std::ostream& out, std::ostream& err) {
  const auto w = Workspace::open(cfg);
  const auto targets = cfg.target_list();
  auto models = load_models(cfg, args, w, targets, err);
  if (!models.gaps.empty()) throw DataError("missing snapshots for: " + join(models.gaps, ", "));
  const auto rows = gather_rows(args, cfg, w);

  std::string csv = "row";
  for (const auto& t : targets) csv += "," + t;
  csv += "\n";
  for (const auto& row : rows) {
    csv += row.label;
    out << row.label << ':';
    for (const auto& t : targets) {
      const auto& cell = models.cells.at(t);
      const Label p = learners::predict(cell.model, feature_matrix(row, cell.model)).front();
      csv += "," + std::to_string(p);
      out << ' ' << t << '=' << p;
    }
    csv += "\n";
    out << '\n';
  }
  std::string model_line = "target,model,snapshot\n";
  for (const auto& t : targets) {
    model_line += t + "," + learners::to_string(models.kinds.at(t)) + "," + models.files.at(t) + "\n";
  }
  const fs::path dir = cfg.out_dir / "predictions";
  write_text(dir / "predictions.csv", csv);
  write_text(dir / "models.csv", model_line);
  out << "wrote " << (dir / "predictions.csv").string() << '\n';
  return kExitOk;
}

// ------------------------------------------------------------ persona

int cmd_persona(const RunConfig& cfg, const CommandArgs& args, std::ostream& out, std::ostream& err) {
  std::vector<persona::Format> formats;
  for (const auto& f : cfg.formats) formats.push_back(persona::parse_format(f));
  const auto w = Workspace::open(cfg);
  const auto labels = persona::LabelMap::load(cfg.labels_path);
  const std::vector<std::string> targets(features::kTargetCodes.begin(), features::kTargetCodes.end());
  auto models = load_models(cfg, args, w, targets, err);
  if (!models.gaps.empty()) throw DataError("missing snapshots for: " + join(models.gaps, ", "));

  std::string digest_input;
  for (const auto& t : targets) digest_input += t + ":" + sha256_file(models.files.at(t)) + "\n";
  const std::string snapshot_digest = sha256_hex(digest_input);

  const auto rows = gather_rows(args, cfg, w);
  const std::string timestamp = card_timestamp();
  const fs::path dir = cfg.out_dir / "persona";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    persona::PredictionVector pv;
    for (const auto& t : targets) {
      const auto& cell = models.cells.at(t);
      pv.values[t] = learners::predict(cell.model, feature_matrix(row, cell.model)).front();
      pv.models[t] = learners::to_string(models.kinds.at(t));
    }
    pv.snapshot_digest = snapshot_digest;
    persona::BuildOptions bo;
    bo.seed = cfg.seed + (args.input.empty() ? args.row : i);
    bo.annotations = args.annotations;
    bo.generated_at = timestamp;
    const auto card = persona::build_persona(pv, labels, bo);
    for (auto f : formats) {
      const fs::path path = dir / ("persona_" + row.label + persona::extension(f));
      write_text(path, persona::render(card, f));
      out << "wrote " << path.string() << '\n';
    }
    out << card.narrative << '\n';
  }
  return kExitOk;
}

}  // namespace occupant::cli
