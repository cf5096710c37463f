#include <fstream>
#include <functional>
#include <optional>

#include <CLI11.hpp>

#include "commands.hpp"
#include "occupant/ingest.hpp"

namespace occupant::cli {

namespace {

// Raw flag values; unset optionals leave the config file or defaults alone.
struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> targets;
  std::vector<std::string> models;
  std::vector<std::string> formats;
  std::optional<std::string> url;
  std::optional<std::string> data;
  std::optional<std::string> codebook;
  std::optional<std::string> drop_rules;
  std::optional<std::string> labels;
  std::optional<std::size_t> k;
  std::optional<double> split;
  bool stratified = false;
  std::optional<unsigned> threads;
};

RunConfig resolve(const Flags& f) {
  RunConfig cfg = RunConfig::defaults();
  if (!f.config.empty()) {
    std::ifstream in(f.config, std::ios::binary);
    if (!in) throw UsageError("cannot open config file " + f.config);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw UsageError("config file " + f.config + " is not valid JSON: " + e.what());
    }
    cfg.apply_json(j);
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.out) cfg.out_dir = *f.out;
  if (!f.targets.empty()) {
    cfg.targets.clear();
    for (const auto& t : f.targets) cfg.targets.push_back(to_upper(trim(t)));
  }
  if (!f.models.empty()) {
    cfg.models.clear();
    for (const auto& m : f.models) {
      try {
        cfg.models.push_back(learners::parse_model_kind(trim(m)));
      } catch (const InputError& e) {
        throw UsageError(e.what());
      }
    }
  }
  if (!f.formats.empty()) cfg.formats = f.formats;
  if (f.url) cfg.url = *f.url;
  if (f.data) cfg.data_path = *f.data;
  if (f.codebook) cfg.codebook_path = *f.codebook;
  if (f.drop_rules) cfg.drop_rules_path = *f.drop_rules;
  if (f.labels) cfg.labels_path = *f.labels;
  if (f.k) cfg.k = *f.k;
  if (f.split) cfg.split_fraction = *f.split;
  if (f.stratified) cfg.stratified = true;
  if (f.threads) cfg.threads = *f.threads;
  cfg.validate();
  return cfg;
}

using Command = std::function<int(const RunConfig&, const CommandArgs&, std::ostream&, std::ostream&)>;

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Occupant characteristic prediction from household survey attributes", "occupant"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "occupant 1.0.0");

  Flags f;
  CommandArgs args;
  app.add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "Master seed (default 42)");
  app.add_option("--out", f.out, "Output directory (default out)");
  app.add_option("--target", f.targets, "Targets to process, comma separated")->delimiter(',');
  app.add_option("--model", f.models, "Models: LDA, KNN, CART, SVM, ADB, RFC")->delimiter(',');
  app.add_option("--format", f.formats, "Persona formats: json, markdown, plain")->delimiter(',');

  Command selected;
  auto add = [&](const char* name, const char* help, Command cmd) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    sub->callback([&selected, cmd] { selected = cmd; });
    return sub;
  };
  auto data_opts = [&](CLI::App* sub) {
    sub->add_option("--data", f.data, "Raw survey CSV");
  };
  auto prep_opts = [&](CLI::App* sub) {
    sub->add_option("--codebook", f.codebook, "Codebook JSON");
  };
  auto model_opts = [&](CLI::App* sub) {
    sub->add_option("--k", f.k, "Cross-validation folds (default 10)");
    sub->add_option("--split", f.split, "Training fraction (default 0.8)");
    sub->add_flag("--stratified", f.stratified, "Stratify cross-validation folds by label");
    sub->add_option("--threads", f.threads, "Worker threads, 0 = all cores");
    prep_opts(sub);
  };
  auto stale_opt = [&](CLI::App* sub) {
    sub->add_flag("--allow-stale", args.allow_stale, "Accept snapshots built under another configuration");
  };
  auto row_opts = [&](CLI::App* sub) {
    sub->add_option("--row", args.row, "Row of the held-out split (default 0)");
    sub->add_option("--input", args.input, "CSV of rows to predict instead of --row");
    stale_opt(sub);
    model_opts(sub);
  };

  auto* fetch = add("fetch", "Download the raw survey file", cmd_fetch);
  fetch->add_option("--url", f.url, "Source URL");
  data_opts(fetch);
  fetch->add_flag("--overwrite", args.overwrite, "Replace an existing download");

  auto* prepare = add("prepare", "Clean the raw file and apply drop rules", cmd_prepare);
  data_opts(prepare);
  prep_opts(prepare);
  prepare->add_option("--drop-rules", f.drop_rules, "Drop rules JSON");

  add("correlations", "Top correlated attributes per target", cmd_correlations);

  auto* train = add("train", "Cross-validate and snapshot models", cmd_train);
  model_opts(train);

  auto* evaluate = add("evaluate", "Score every target and model on the held-out split", cmd_evaluate);
  model_opts(evaluate);
  stale_opt(evaluate);

  auto* predict = add("predict", "Predict targets for held-out or supplied rows", cmd_predict);
  row_opts(predict);

  auto* persona = add("persona", "Build persona cards from predictions", cmd_persona);
  row_opts(persona);
  persona->add_option("--labels", f.labels, "Label map JSON");
  persona->add_option("--annotation", args.annotations, "Free-text note added to the card");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const RunConfig cfg = resolve(f);
    return selected(cfg, args, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ingest::FetchError& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ingest::FetchErrorKind::InvalidUrl ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace occupant::cli
