#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "occupant/ingest.hpp"

namespace occupant::ingest {

using nlohmann::json;

// ---------------------------------------------------------------- Dataset

Dataset::Dataset(std::vector<std::string> columns, Matrix matrix, Provenance provenance)
    : columns_(std::move(columns)), matrix_(std::move(matrix)), provenance_(std::move(provenance)) {
  if (columns_.size() != matrix_.cols() && !(matrix_.rows() == 0 && matrix_.cols() == 0)) {
    throw InputError("dataset column list does not match matrix width");
  }
  if (matrix_.rows() == 0 && matrix_.cols() == 0 && !columns_.empty()) {
    matrix_ = Matrix(0, columns_.size());
  }
  for (double v : matrix_.data()) {
    if (!std::isfinite(v)) throw DataError("dataset contains a non-finite cell");
  }
}

std::optional<std::size_t> Dataset::column_index(const std::string& code) const {
  auto it = std::find(columns_.begin(), columns_.end(), code);
  if (it == columns_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns_.begin());
}

std::vector<double> Dataset::column(const std::string& code) const {
  auto idx = column_index(code);
  if (!idx) throw DataError("no column named " + code);
  return matrix_.column(*idx);
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  Provenance prov = provenance_;
  if (!prov.raw_age.empty()) {
    std::vector<double> ages;
    ages.reserve(rows.size());
    for (auto r : rows) ages.push_back(provenance_.raw_age.at(r));
    prov.raw_age = std::move(ages);
  }
  return Dataset(columns_, matrix_.select_rows(rows), std::move(prov));
}

Dataset Dataset::select_columns(std::span<const std::size_t> cols) const {
  std::vector<std::string> names;
  names.reserve(cols.size());
  for (auto c : cols) names.push_back(columns_.at(c));
  return Dataset(std::move(names), matrix_.select_cols(cols), provenance_);
}

// --------------------------------------------------------------- Codebook

namespace {

AttributeKind parse_kind(const std::string& s, const std::string& code) {
  if (s == "numeric") return AttributeKind::Numeric;
  if (s == "categorical" || s == "categorical-coded") return AttributeKind::CategoricalCoded;
  throw ParseError("codebook entry " + code + ": unknown kind '" + s + "'");
}

}  // namespace

Codebook Codebook::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("codebook is not valid JSON: ") + e.what());
  }
  if (doc.value("format_version", 0) != 1) throw ParseError("codebook format_version must be 1");
  Codebook book;
  for (const auto& [code, node] : doc.at("attributes").items()) {
    CodebookEntry e;
    const std::string cat = node.value("category", std::string("?"));
    if (cat.size() != 1 || cat[0] < 'A' || cat[0] > 'L') {
      throw ParseError("codebook entry " + code + ": category must be one letter A..L");
    }
    e.category = cat[0];
    e.description = node.value("description", std::string());
    e.kind = parse_kind(node.value("kind", std::string("numeric")), code);
    if (node.contains("value_labels")) {
      for (const auto& [k, label] : node.at("value_labels").items()) {
        std::int64_t key = 0;
        auto res = std::from_chars(k.data(), k.data() + k.size(), key);
        if (res.ec != std::errc() || res.ptr != k.data() + k.size()) {
          throw ParseError("codebook entry " + code + ": value label key '" + k +
                           "' is not an integer");
        }
        e.value_labels[key] = label.get<std::string>();
      }
    }
    if (node.contains("range")) {
      const auto& r = node.at("range");
      e.range = std::make_pair(r.at(0).get<std::int64_t>(), r.at(1).get<std::int64_t>());
      if (e.range->first > e.range->second) {
        throw ParseError("codebook entry " + code + ": empty range");
      }
    }
    e.unit = node.value("unit", std::string());
    book.entries_[code] = std::move(e);
  }
  return book;
}

Codebook Codebook::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open codebook: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

void Codebook::merge(const Codebook& other) {
  for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

const CodebookEntry* Codebook::find(const std::string& code) const {
  auto it = entries_.find(code);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> Codebook::unknown_columns(const std::vector<std::string>& columns) const {
  std::vector<std::string> out;
  for (const auto& c : columns) {
    if (!contains(c)) out.push_back(c);
  }
  return out;
}

// ------------------------------------------------------------------- Ages

const std::vector<AgeBin>& standard_age_bins() {
  static const std::vector<AgeBin> bins = {
      {0, 12, AgeGroup::Children, "Children"},
      {13, 30, AgeGroup::YoungAdult, "Young Adult"},
      {31, 50, AgeGroup::MiddleAdult, "Middle Adult"},
      {51, 70, AgeGroup::SeniorAdult, "Senior Adult"},
      {71, 110, AgeGroup::Senior, "Senior"},
  };
  return bins;
}

std::string age_group_name(AgeGroup g) {
  for (const auto& b : standard_age_bins()) {
    if (b.group == g) return b.name;
  }
  throw InputError("unknown age group");
}

AgeGroup bin_age(int years, const std::vector<AgeBin>& bins) {
  for (const auto& b : bins) {
    if (years >= b.lower && years <= b.upper) return b.group;
  }
  throw InputError("age " + std::to_string(years) + " is outside 0..110");
}

AgeGroup bin_age(int years) { return bin_age(years, standard_age_bins()); }

// ---------------------------------------------------------- CleaningRules

void CleaningRules::validate() const {
  if (age_bins.empty()) throw InputError("cleaning rules need at least one age bin");
  if (age_bins.front().lower != 0) throw InputError("age bins must start at 0");
  if (age_bins.back().upper != 110) throw InputError("age bins must end at 110");
  for (std::size_t i = 0; i < age_bins.size(); ++i) {
    if (age_bins[i].lower > age_bins[i].upper) throw InputError("age bin with lower > upper");
    if (i > 0) {
      if (age_bins[i].lower != age_bins[i - 1].upper + 1) {
        throw InputError("age bins must be contiguous and non-overlapping");
      }
      if (static_cast<int>(age_bins[i].group) <= static_cast<int>(age_bins[i - 1].group)) {
        throw InputError("age bin groups must ascend with age");
      }
    }
  }
  if (!std::isfinite(missing_sentinel) || !std::isfinite(infinity_sentinel)) {
    throw InputError("sentinels must be finite");
  }
}

std::string CleaningRules::digest() const {
  json j;
  j["missing_sentinel"] = missing_sentinel;
  j["infinity_sentinel"] = infinity_sentinel;
  j["age_column"] = age_column;
  j["infinity_markers"] = infinity_markers;
  j["negative_infinity_markers"] = negative_infinity_markers;
  j["null_markers"] = null_markers;
  for (const auto& b : age_bins) j["age_bins"].push_back({b.lower, b.upper, static_cast<int>(b.group)});
  return sha256_hex(j.dump());
}

// ------------------------------------------------------------------ clean

namespace {

enum class CellClass { Number, Missing, PosInf, NegInf, Text };

CellClass classify(const std::string& raw, const CleaningRules& rules, double& value) {
  std::string cell = trim(raw);
  if (cell.empty()) return CellClass::Missing;
  const std::string lower = to_lower(cell);
  auto listed = [&](const std::vector<std::string>& markers) {
    return std::any_of(markers.begin(), markers.end(),
                       [&](const std::string& m) { return to_lower(m) == lower; });
  };
  if (listed(rules.null_markers)) return CellClass::Missing;
  if (listed(rules.infinity_markers)) return CellClass::PosInf;
  if (listed(rules.negative_infinity_markers)) return CellClass::NegInf;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, last, value);
  if (res.ptr != last) return CellClass::Text;
  if (res.ec == std::errc::result_out_of_range) {
    // Overflow counts as infinite; strtod reports it as HUGE_VAL.
    value = std::strtod(cell.c_str(), nullptr);
    if (std::isinf(value)) return value > 0 ? CellClass::PosInf : CellClass::NegInf;
    value = 0.0;
    return CellClass::Number;
  }
  if (res.ec != std::errc()) return CellClass::Text;
  if (std::isnan(value)) return CellClass::Missing;
  if (std::isinf(value)) return value > 0 ? CellClass::PosInf : CellClass::NegInf;
  return CellClass::Number;
}

}  // namespace

Dataset clean(const RawTable& raw, const CleaningRules& rules, const Codebook* codebook) {
  rules.validate();
  const std::size_t n = raw.n_rows();
  const std::size_t d = raw.n_cols();
  Matrix m(n, d);

  // Reverse label lookup for text-valued categorical columns.
  std::vector<std::map<std::string, double>> text_codes(d);
  if (codebook) {
    for (std::size_t c = 0; c < d; ++c) {
      const auto* e = codebook->find(raw.column_names[c]);
      if (e && e->kind == AttributeKind::CategoricalCoded) {
        for (const auto& [code, label] : e->value_labels) {
          text_codes[c][label] = static_cast<double>(code);
        }
      }
    }
  }

  std::optional<std::size_t> age_col;
  for (std::size_t c = 0; c < d; ++c) {
    if (raw.column_names[c] == rules.age_column) age_col = c;
  }

  Provenance prov;
  prov.rules_digest = rules.digest();
  if (age_col) prov.raw_age.resize(n);

  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = raw.rows[r];
    if (row.size() != d) {
      throw ParseError("row " + std::to_string(r) + " has the wrong cell count", r);
    }
    for (std::size_t c = 0; c < d; ++c) {
      double v = 0.0;
      switch (classify(row[c], rules, v)) {
        case CellClass::Number:
          break;
        case CellClass::Missing:
          v = rules.missing_sentinel;
          break;
        case CellClass::PosInf:
          v = rules.infinity_sentinel;
          break;
        case CellClass::NegInf:
          v = -rules.infinity_sentinel;
          break;
        case CellClass::Text: {
          auto it = text_codes[c].find(trim(row[c]));
          if (it == text_codes[c].end()) {
            throw ParseError("cell '" + row[c] + "' at row " + std::to_string(r) + ", column " +
                                 raw.column_names[c] + " is not numeric",
                             r, c);
          }
          v = it->second;
        }
      }
      m(r, c) = v;
    }
    if (age_col) {
      const double years = m(r, *age_col);
      prov.raw_age[r] = years;
      // Sentinels stay sentinels; only real ages are binned.
      if (years != rules.missing_sentinel && years != rules.infinity_sentinel &&
          years != -rules.infinity_sentinel) {
        if (years != std::floor(years)) {
          throw ParseError("non-integer age at row " + std::to_string(r), r, *age_col);
        }
        try {
          m(r, *age_col) = static_cast<double>(bin_age(static_cast<int>(years), rules.age_bins));
        } catch (const InputError& e) {
          throw ParseError(std::string(e.what()) + " at row " + std::to_string(r), r, *age_col);
        }
      }
    }
  }
  return Dataset(raw.column_names, std::move(m), std::move(prov));
}

}  // namespace occupant::ingest
