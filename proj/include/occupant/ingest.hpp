#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "occupant/core.hpp"

namespace occupant::ingest {

/// Header plus raw string cells, exactly as read from a CSV file.
struct RawTable {
  std::vector<std::string> column_names;
  std::vector<std::vector<std::string>> rows;

  std::size_t n_rows() const noexcept { return rows.size(); }
  std::size_t n_cols() const noexcept { return column_names.size(); }
};

enum class AttributeKind { Numeric, CategoricalCoded };

struct CodebookEntry {
  char category = '?';  // survey section letter A..L
  std::string description;
  AttributeKind kind = AttributeKind::Numeric;
  std::map<std::int64_t, std::string> value_labels;
  std::optional<std::pair<std::int64_t, std::int64_t>> range;  // inclusive
  std::string unit;
};

/// Attribute metadata keyed by attribute code.
class Codebook {
 public:
  static Codebook load(const std::filesystem::path& path);
  static Codebook from_json_text(const std::string& text);

  /// Adds or replaces entries from another codebook.
  void merge(const Codebook& other);

  const CodebookEntry* find(const std::string& code) const;
  bool contains(const std::string& code) const { return find(code) != nullptr; }
  const std::map<std::string, CodebookEntry>& entries() const noexcept { return entries_; }

  /// Columns with no entry; callers treat these as category `unknown`.
  std::vector<std::string> unknown_columns(const std::vector<std::string>& columns) const;

 private:
  std::map<std::string, CodebookEntry> entries_;
};

enum class AgeGroup : int { Children = 0, YoungAdult = 1, MiddleAdult = 2, SeniorAdult = 3, Senior = 4 };

struct AgeBin {
  int lower;
  int upper;  // inclusive
  AgeGroup group;
  std::string name;
};

/// The five survey age ranges, inclusive at both ends.
const std::vector<AgeBin>& standard_age_bins();

/// Display name, e.g. "Young Adult".
std::string age_group_name(AgeGroup g);

/// Maps an age in years (0..110) to its group.
AgeGroup bin_age(int years);
AgeGroup bin_age(int years, const std::vector<AgeBin>& bins);

struct CleaningRules {
  double missing_sentinel = -1.0;
  double infinity_sentinel = 2147483647.0;
  std::vector<AgeBin> age_bins = standard_age_bins();
  std::vector<std::string> infinity_markers = {"inf", "+inf", "infinity", "+infinity"};
  std::vector<std::string> negative_infinity_markers = {"-inf", "-infinity"};
  std::vector<std::string> null_markers = {"null", "na", "nan", "none"};
  std::string age_column = "HHAGE";

  /// Throws InputError unless the age bins are contiguous and cover 0..110.
  void validate() const;
  /// Stable digest of every rule, stored in dataset provenance.
  std::string digest() const;
};

struct Provenance {
  std::string source;         // file path or label
  std::string source_digest;  // SHA-256 of the source bytes, when known
  std::string rules_digest;
  std::vector<double> raw_age;  // pre-binning HHAGE per row; empty if absent
};

/// Cleaned numeric table. Every cell is finite.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> columns, Matrix matrix, Provenance provenance = {});

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const Matrix& matrix() const noexcept { return matrix_; }
  const Provenance& provenance() const noexcept { return provenance_; }

  std::size_t n_rows() const noexcept { return matrix_.rows(); }
  std::size_t n_cols() const noexcept { return columns_.size(); }

  std::optional<std::size_t> column_index(const std::string& code) const;
  bool has_column(const std::string& code) const { return column_index(code).has_value(); }
  std::vector<double> column(const std::string& code) const;

  Dataset select_rows(std::span<const std::size_t> rows) const;
  Dataset select_columns(std::span<const std::size_t> cols) const;

 private:
  std::vector<std::string> columns_;
  Matrix matrix_;
  Provenance provenance_;
};

enum class FetchErrorKind { InvalidUrl, Network, HttpStatus, DiskWrite };

class FetchError : public Error {
 public:
  FetchError(FetchErrorKind kind, const std::string& what, int http_status = 0)
      : Error(what), kind_(kind), http_status_(http_status) {}
  FetchErrorKind kind() const noexcept { return kind_; }
  int http_status() const noexcept { return http_status_; }

 private:
  FetchErrorKind kind_;
  int http_status_;
};

struct FetchResult {
  std::filesystem::path path;
  std::uint64_t bytes_downloaded = 0;
  bool from_cache = false;
};

inline constexpr const char* kDefaultRecsUrl =
    "https://www.eia.gov/consumption/residential/data/2015/csv/recs2015_public_v4.csv";

/// Downloads url to dest. An existing dest is returned untouched unless
/// overwrite is set. The body is written to a temporary sibling and renamed,
/// so a failed download never leaves a partial file at dest.
FetchResult fetch_recs(const std::string& url, const std::filesystem::path& dest, bool overwrite);

/// Reads a header-first CSV (RFC 4180 quoting, CRLF tolerant, BOM skipped).
RawTable load_table(const std::filesystem::path& path);
RawTable parse_table(const std::string& text, const std::string& source = "<memory>");

/// Converts raw cells to numbers, substituting sentinels and binning ages.
/// Cells of categorical-coded codebook attributes may also hold a value
/// label, which is replaced by its numeric code.
Dataset clean(const RawTable& raw, const CleaningRules& rules, const Codebook* codebook = nullptr);

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

/// Uniform random row partition with |train| = floor(fraction * n).
/// When `stratify_by` is given, rows are shuffled within each label and
/// dealt proportionally instead.
Split split(const Dataset& data, double train_fraction, std::uint64_t seed,
            const std::vector<double>* stratify_by = nullptr);

/// Only the partition indices, for callers that hold row counts only.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double train_fraction, std::uint64_t seed);

/// Writes the dataset with its header order preserved.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);
/// Reads a dataset written by write_dataset_csv.
Dataset read_dataset_csv(const std::filesystem::path& path);

std::string format_number(double v);

}  // namespace occupant::ingest
