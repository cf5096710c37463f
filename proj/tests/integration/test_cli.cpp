#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "generators.hpp"
#include "occupant/cli.hpp"
#include "occupant/features.hpp"

using namespace occupant;
using cli::json;
using occupant::testing::fixture_csv;
using occupant::testing::scratch_dir;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::initializer_list<std::string> args) {
  std::vector<std::string> store{"occupant"};
  store.insert(store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : store) argv.push_back(s.data());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// One prepared and evaluated workspace shared by the tests below.
const fs::path& workspace() {
  static const fs::path dir = [] {
    const auto d = scratch_dir("cli_ws");
    const auto p = run({"--out", d.string(), "prepare", "--data", fixture_csv().string()});
    REQUIRE(p.code == 0);
    const auto e = run({"--out", d.string(), "evaluate", "--k", "5"});
    REQUIRE(e.code == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"evaluate", "--no-such-flag"}).code == 2);
  const auto bad_model = run({"--model", "GBM", "evaluate"});
  CHECK(bad_model.code == 2);
  CHECK(bad_model.err.find("GBM") != std::string::npos);
  CHECK(run({"--target", "KWH", "evaluate"}).code == 2);
  CHECK(run({"evaluate", "--split", "1.5"}).code == 2);
  CHECK(run({"--format", "pdf", "persona"}).code == 2);
  CHECK(run({"fetch", "--url", "not a url"}).code == 2);

  const auto dir = scratch_dir("cli_config");
  std::ofstream(dir / "bad.json") << R"({"sede": 1})";
  CHECK(run({"--config", (dir / "bad.json").string(), "evaluate"}).code == 2);
}

TEST_CASE("config defaults and overrides") {
  auto cfg = cli::RunConfig::defaults();
  CHECK(cfg.seed == 42);
  CHECK(cfg.k == 10);
  CHECK(cfg.split_fraction == 0.8);
  CHECK(cfg.target_list().size() == 16);
  CHECK(cfg.model_list().size() == 6);
  cfg.apply_json({{"seed", 7}, {"models", {"knn", "CART"}}, {"hyperparams", {{"knn_k", 3}}}});
  CHECK(cfg.seed == 7);
  CHECK(cfg.model_list() == std::vector<learners::ModelKind>{learners::ModelKind::KNN, learners::ModelKind::CART});
  CHECK(cfg.hyperparams.knn_k == 3);
  CHECK(cfg.hyperparams.rfc.n_trees == 100);
  CHECK_THROWS_AS(cfg.apply_json({{"k", "ten"}}), UsageError);
  const auto a = cfg.model_digest("d");
  cfg.hyperparams.knn_k = 4;
  CHECK(cfg.model_digest("d") != a);
  CHECK(cli::RunConfig::defaults().to_json() == [] {
    auto c = cli::RunConfig::defaults();
    c.apply_json(c.to_json());
    return c.to_json();
  }());
}

TEST_CASE("flags take precedence over the config file") {
  const auto dir = scratch_dir("cli_precedence");
  std::ofstream(dir / "cfg.json") << R"({"out": ")" << (dir / "from_config").string() << R"("})";
  const auto r = run({"--config", (dir / "cfg.json").string(), "--out", (dir / "from_flag").string(), "prepare",
                      "--data", fixture_csv().string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "from_flag" / "prepared" / "dataset.csv"));
  CHECK_FALSE(fs::exists(dir / "from_config"));
  const auto r2 = run({"--config", (dir / "cfg.json").string(), "prepare", "--data", fixture_csv().string()});
  REQUIRE(r2.code == 0);
  CHECK(fs::exists(dir / "from_config" / "prepared" / "dataset.csv"));
}

TEST_CASE("prepare writes dataset, summary and provenance") {
  const auto& ws = workspace();
  const auto summary = slurp(ws / "prepared" / "summary.csv");
  CHECK(count_lines(summary) == 1 + 12 + 2);
  CHECK(summary.find("\nL,") != std::string::npos);
  const auto prov = json::parse(slurp(ws / "prepared" / "provenance.json"));
  CHECK(prov["columns_before"] == 40);
  CHECK(prov["columns_after"] == 36);
  CHECK(prov["rows"] == 200);
  CHECK(prov["source_digest"] == sha256_file(fixture_csv().string()));
}

TEST_CASE("prepare leaves nothing behind when the raw file is missing") {
  const auto dir = scratch_dir("cli_missing");
  const auto r = run({"--out", (dir / "out").string(), "prepare", "--data", (dir / "absent.csv").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("absent.csv") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("evaluate writes the full results table") {
  const auto& ws = workspace();
  const auto results = slurp(ws / "evaluation" / "results.csv");
  CHECK(count_lines(results) == 1 + 96);
  CHECK(results.find("failed") == std::string::npos);
  const auto best = slurp(ws / "evaluation" / "best_scores.csv");
  CHECK(count_lines(best) == 1 + 16 + 1);
  CHECK(best.find("\nAVERAGE,") != std::string::npos);
  const auto folds = slurp(ws / "evaluation" / "fold_detail.csv");
  CHECK(folds.rfind("target,model,fold_0,fold_1,fold_2,fold_3,fold_4\n", 0) == 0);
  std::size_t snapshots = 0;
  for (const auto& e : fs::directory_iterator(ws / "models")) snapshots += e.path().extension() == ".json";
  CHECK(snapshots == 96);
}

TEST_CASE("evaluation is byte-identical across runs and thread counts") {
  const auto a = scratch_dir("cli_det_a");
  const auto b = scratch_dir("cli_det_b");
  for (const auto& [dir, threads] : {std::pair{a, "1"}, std::pair{b, "3"}}) {
    REQUIRE(run({"--out", dir.string(), "prepare", "--data", fixture_csv().string()}).code == 0);
    REQUIRE(run({"--out", dir.string(), "evaluate", "--k", "5", "--threads", threads}).code == 0);
  }
  for (const char* f : {"results.csv", "results.json", "best_scores.csv", "best_scores.json", "fold_detail.csv"}) {
    CAPTURE(f);
    CHECK(slurp(a / "evaluation" / f) == slurp(b / "evaluation" / f));
  }
  for (const auto& e : fs::directory_iterator(a / "models")) {
    CHECK(slurp(e.path()) == slurp(b / "models" / e.path().filename()));
  }
}

TEST_CASE("a second evaluate reuses snapshots") {
  const auto& ws = workspace();
  const auto before = slurp(ws / "evaluation" / "results.csv");
  const auto r = run({"--out", ws.string(), "evaluate", "--k", "5"});
  CHECK(r.code == 0);
  CHECK(r.err.find("trained") == std::string::npos);
  CHECK(slurp(ws / "evaluation" / "results.csv") == before);
}

TEST_CASE("train prints fold accuracies and stores one snapshot") {
  const auto dir = scratch_dir("cli_train");
  REQUIRE(run({"--out", dir.string(), "prepare", "--data", fixture_csv().string()}).code == 0);
  const auto r = run({"--out", dir.string(), "--target", "USEWWAC", "--model", "rfc", "train", "--k", "4"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("USEWWAC RFC folds:") != std::string::npos);
  CHECK(r.out.find(" mean ") != std::string::npos);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir / "models")) files.push_back(e.path());
  REQUIRE(files.size() == 1);
  CHECK(files[0].filename().string().rfind("USEWWAC__RFC__s42__", 0) == 0);
}

TEST_CASE("persona and predict from the evaluated workspace") {
  const auto& ws = workspace();
  ::setenv("SOURCE_DATE_EPOCH", "1600000000", 1);
  const auto r = run({"--out", ws.string(), "persona", "--row", "2", "--k", "5", "--format", "json,markdown,plain"});
  REQUIRE(r.code == 0);
  const auto card = slurp(ws / "persona" / "persona_row2.json");
  CHECK(card.find("2020-09-13T12:26:40Z") != std::string::npos);
  CHECK(fs::exists(ws / "persona" / "persona_row2.md"));
  CHECK(fs::exists(ws / "persona" / "persona_row2.txt"));
  REQUIRE(run({"--out", ws.string(), "persona", "--row", "2", "--k", "5", "--format", "json"}).code == 0);
  CHECK(slurp(ws / "persona" / "persona_row2.json") == card);
  ::unsetenv("SOURCE_DATE_EPOCH");

  CHECK(run({"--out", ws.string(), "persona", "--row", "100000", "--k", "5"}).code == 2);

  const auto p = run({"--out", ws.string(), "predict", "--row", "0", "--k", "5"});
  REQUIRE(p.code == 0);
  const auto preds = slurp(ws / "predictions" / "predictions.csv");
  CHECK(count_lines(preds) == 2);
  CHECK(preds.rfind("row,EQUIPMUSE,", 0) == 0);
}

TEST_CASE("persona accepts external rows") {
  const auto& ws = workspace();
  const auto dir = scratch_dir("cli_input");
  // The first three raw fixture rows, ages and text codes included.
  std::ifstream in(fixture_csv());
  std::ofstream rows(dir / "rows.csv");
  std::string line;
  for (int i = 0; i < 4 && std::getline(in, line); ++i) rows << line << '\n';
  rows.close();
  const auto r = run({"--out", ws.string(), "persona", "--input", (dir / "rows.csv").string(), "--k", "5",
                      "--format", "json"});
  REQUIRE(r.code == 0);
  for (int i = 0; i < 3; ++i) CHECK(fs::exists(ws / "persona" / ("persona_input" + std::to_string(i) + ".json")));
}

TEST_CASE("a corrupt snapshot fails only its cell") {
  const auto dir = scratch_dir("cli_corrupt");
  REQUIRE(run({"--out", dir.string(), "prepare", "--data", fixture_csv().string()}).code == 0);
  REQUIRE(run({"--out", dir.string(), "--target", "HHAGE,MONEYPY", "--model", "CART,KNN", "evaluate", "--k", "3"})
              .code == 0);
  fs::path victim;
  for (const auto& e : fs::directory_iterator(dir / "models")) {
    if (e.path().filename().string().rfind("MONEYPY__KNN", 0) == 0) victim = e.path();
  }
  REQUIRE_FALSE(victim.empty());
  std::ofstream(victim, std::ios::trunc) << "{\"format_version\": 1, \"model\": [";
  const auto r = run({"--out", dir.string(), "--target", "HHAGE,MONEYPY", "--model", "CART,KNN", "evaluate", "--k",
                      "3"});
  CHECK(r.code == 1);
  const auto results = slurp(dir / "evaluation" / "results.csv");
  CHECK(count_lines(results) == 5);
  CHECK(results.find("MONEYPY,KNN,nan,nan,nan,nan,\"failed: ") != std::string::npos);
  CHECK(results.find("HHAGE,CART,") != std::string::npos);
}

TEST_CASE("persona names the target whose snapshot is missing") {
  const auto dir = scratch_dir("cli_gap");
  REQUIRE(run({"--out", dir.string(), "prepare", "--data", fixture_csv().string()}).code == 0);
  REQUIRE(run({"--out", dir.string(), "--model", "CART", "train", "--k", "3"}).code == 0);
  for (const auto& e : fs::directory_iterator(dir / "models")) {
    if (e.path().filename().string().rfind("MONEYPY__", 0) == 0) fs::remove(e.path());
  }
  const auto r = run({"--out", dir.string(), "--model", "CART", "persona", "--k", "3"});
  CHECK(r.code == 1);
  CHECK(r.err.find("MONEYPY") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "persona"));
}

TEST_CASE("stale snapshots need an explicit opt-in") {
  const auto dir = scratch_dir("cli_stale");
  REQUIRE(run({"--out", dir.string(), "prepare", "--data", fixture_csv().string()}).code == 0);
  REQUIRE(run({"--out", dir.string(), "--model", "CART", "train", "--k", "3"}).code == 0);
  CHECK(run({"--out", dir.string(), "--model", "CART", "persona", "--k", "4"}).code == 1);
  const auto r = run({"--out", dir.string(), "--model", "CART", "persona", "--k", "4", "--allow-stale"});
  CHECK(r.code == 0);
  CHECK(r.err.find("different config digest") != std::string::npos);
}

TEST_CASE("correlations write one pair of files per target") {
  const auto& ws = workspace();
  const auto r = run({"--out", ws.string(), "correlations"});
  REQUIRE(r.code == 0);
  for (const char* t : features::kTargetCodes) {
    CHECK(fs::exists(ws / "correlations" / (std::string(t) + "_matrix.csv")));
    CHECK(fs::exists(ws / "correlations" / (std::string(t) + "_ranked.csv")));
  }
}
