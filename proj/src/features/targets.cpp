#include <algorithm>
#include <set>

#include "occupant/features.hpp"

namespace occupant::features {

bool TargetDef::in_domain(Label value) const {
  if (decode_map.count(value)) return true;
  return kind == DomainKind::IntegerRange && value >= range.first && value <= range.second;
}

std::vector<Label> TargetDef::domain() const {
  std::set<Label> all;
  for (const auto& [code, label] : decode_map) all.insert(code);
  if (kind == DomainKind::IntegerRange) {
    for (Label v = range.first; v <= range.second; ++v) all.insert(v);
  }
  return {all.begin(), all.end()};
}

TargetSpec TargetSpec::from_codebook(const ingest::Codebook& codebook) {
  TargetSpec spec;
  std::vector<std::string> missing;
  for (const char* code : kTargetCodes) {
    const auto* entry = codebook.find(code);
    if (!entry) {
      missing.emplace_back(code);
      continue;
    }
    TargetDef def;
    def.code = code;
    def.description = entry->description;
    def.unit = entry->unit;
    for (const auto& [k, label] : entry->value_labels) {
      if (label.empty()) throw DataError(std::string("empty value label for ") + code);
      def.decode_map[static_cast<Label>(k)] = label;
    }
    if (entry->range) {
      def.kind = DomainKind::IntegerRange;
      def.range = {static_cast<Label>(entry->range->first), static_cast<Label>(entry->range->second)};
    } else {
      def.kind = DomainKind::Enumerated;
      if (def.decode_map.empty()) {
        throw DataError(std::string("target ") + code + " has neither a range nor value labels");
      }
    }
    spec.entries_.push_back(std::move(def));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw DataError("codebook lacks target definitions for: " + list);
  }
  return spec;
}

const TargetDef& TargetSpec::at(const std::string& code) const {
  for (const auto& e : entries_) {
    if (e.code == code) return e;
  }
  throw InputError("unknown target " + code);
}

bool TargetSpec::contains(const std::string& code) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const TargetDef& e) { return e.code == code; });
}

std::vector<std::string> TargetSpec::codes() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.code);
  return out;
}

Separated separate(const Dataset& data, const std::vector<std::string>& target_codes) {
  std::vector<std::size_t> target_idx;
  for (const auto& code : target_codes) {
    auto idx = data.column_index(code);
    if (!idx) throw DataError("dataset is missing target column " + code);
    target_idx.push_back(*idx);
  }
  std::set<std::size_t> is_target(target_idx.begin(), target_idx.end());
  std::vector<std::size_t> feature_idx;
  for (std::size_t c = 0; c < data.n_cols(); ++c) {
    if (!is_target.count(c)) feature_idx.push_back(c);
  }
  if (feature_idx.empty()) throw DataError("no descriptive columns remain after removing targets");
  return {data.select_columns(feature_idx), data.select_columns(target_idx)};
}

Separated separate(const Dataset& data, const TargetSpec& spec) {
  return separate(data, spec.codes());
}

}  // namespace occupant::features
