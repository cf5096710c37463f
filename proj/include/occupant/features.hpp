#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "occupant/core.hpp"
#include "occupant/ingest.hpp"

namespace occupant::features {

using ingest::Dataset;

// ------------------------------------------------------------ drop rules

enum class DropRuleType { Prefix, Exact, PatternClass };

/// Named column classes understood by PatternClass rules.
///   imputation-flags   Z<code> where <code> is another column of the table
///   replicate-weights  BRRWT followed by digits
///   dollar-amounts     DOL* and TOTALDOL*
///   phone-count        the household phone-count attributes
inline constexpr std::array<const char*, 4> kPatternClasses = {
    "imputation-flags", "replicate-weights", "dollar-amounts", "phone-count"};

struct DropRule {
  DropRuleType type;
  std::string value;
  bool operator==(const DropRule&) const = default;
};

class DropRules {
 public:
  DropRules() = default;
  explicit DropRules(std::vector<DropRule> rules);

  static DropRules load(const std::filesystem::path& path);
  static DropRules from_json_text(const std::string& text);

  const std::vector<DropRule>& rules() const noexcept { return rules_; }
  bool empty() const noexcept { return rules_.empty(); }
  std::string digest() const;

  /// True when `column` matches any rule. `all_columns` resolves
  /// imputation flags against their base attribute.
  bool matches(const std::string& column, const std::vector<std::string>& all_columns) const;

 private:
  std::vector<DropRule> rules_;
};

struct DropResult {
  Dataset data;
  std::vector<std::string> dropped;
  std::vector<std::string> warnings;
};

DropResult apply_drop_rules(const Dataset& data, const DropRules& rules);

// ------------------------------------------------------------ targets

inline constexpr std::array<const char*, 16> kTargetCodes = {
    "EQUIPMUSE", "TEMPHOME", "TEMPGONE", "TEMPNITE", "USEWWAC",  "TEMPHOMEAC",
    "TEMPGONEAC", "TEMPNITEAC", "HHAGE",  "EMPLOYHH", "EDUCATION", "NHSLDMEM",
    "NUMADULT",  "NUMCHILD",  "ATHOME",   "MONEYPY"};

enum class DomainKind { Enumerated, IntegerRange };

struct TargetDef {
  std::string code;
  std::string description;
  DomainKind kind = DomainKind::Enumerated;
  /// Inclusive bounds for IntegerRange targets.
  std::pair<Label, Label> range{0, 0};
  std::string unit;
  /// Labels for enumerated codes, plus survey sentinels such as -2.
  std::map<Label, std::string> decode_map;

  bool in_domain(Label value) const;
  /// Every code in the domain, ascending.
  std::vector<Label> domain() const;
};

/// The sixteen occupant-characteristic targets.
class TargetSpec {
 public:
  /// Builds all sixteen definitions from codebook entries; throws if any
  /// target is missing from the codebook.
  static TargetSpec from_codebook(const ingest::Codebook& codebook);

  const std::vector<TargetDef>& entries() const noexcept { return entries_; }
  const TargetDef& at(const std::string& code) const;
  bool contains(const std::string& code) const;
  std::vector<std::string> codes() const;

 private:
  std::vector<TargetDef> entries_;
};

struct Separated {
  Dataset features;
  Dataset targets;
};

/// Splits off all sixteen target columns; throws if one is missing or if no
/// descriptive column would remain.
Separated separate(const Dataset& data, const TargetSpec& spec);
Separated separate(const Dataset& data, const std::vector<std::string>& target_codes);

// --------------------------------------------------------- correlation

/// Pearson correlation coefficient, clamped to [-1, 1].
double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationReport {
  std::string target;
  std::vector<std::pair<std::string, double>> ranked;
  /// Row/column order: target first, then the ranked attributes.
  std::vector<std::string> matrix_columns;
  Matrix matrix;
};

/// The k attributes with the largest |r| against `target`, ties broken by
/// ascending attribute code. Zero-variance columns are skipped.
CorrelationReport top_correlates(const Dataset& data, const std::string& target, std::size_t k = 10);

/// Writes <dir>/<target>_matrix.csv and <dir>/<target>_ranked.csv.
void write_correlation_report(const CorrelationReport& report, const std::filesystem::path& dir);

}  // namespace occupant::features
