#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

#include "occupant/features.hpp"

namespace occupant::features {

using nlohmann::json;

namespace {

const char* type_name(DropRuleType t) {
  switch (t) {
    case DropRuleType::Prefix:
      return "prefix";
    case DropRuleType::Exact:
      return "exact";
    case DropRuleType::PatternClass:
      return "pattern-class";
  }
  return "?";
}

bool starts_with(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }

bool is_replicate_weight(const std::string& c) {
  if (!starts_with(c, "BRRWT") || c.size() == 5) return false;
  return std::all_of(c.begin() + 5, c.end(), [](unsigned char ch) { return std::isdigit(ch); });
}

bool is_dollar_amount(const std::string& c) {
  return starts_with(c, "DOL") || starts_with(c, "TOTALDOL");
}

bool is_phone_count(const std::string& c) {
  static const std::set<std::string> codes = {"CELLPHONE", "NUMPHONE", "NUMCELL", "NUMSMPHONE"};
  return codes.count(c) > 0;
}

}  // namespace

DropRules::DropRules(std::vector<DropRule> rules) : rules_(std::move(rules)) {
  for (const auto& r : rules_) {
    if (r.value.empty()) throw InputError("drop rule with an empty value");
    if (r.type == DropRuleType::PatternClass &&
        std::find_if(kPatternClasses.begin(), kPatternClasses.end(),
                     [&](const char* n) { return r.value == n; }) == kPatternClasses.end()) {
      throw InputError("unknown pattern class '" + r.value + "'");
    }
  }
}

DropRules DropRules::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("drop rules are not valid JSON: ") + e.what());
  }
  if (doc.value("format_version", 0) != 1) throw ParseError("drop rules format_version must be 1");
  std::vector<DropRule> rules;
  for (const auto& node : doc.at("rules")) {
    const std::string type = node.at("type").get<std::string>();
    DropRule r;
    if (type == "prefix") {
      r = {DropRuleType::Prefix, node.at("prefix").get<std::string>()};
    } else if (type == "exact") {
      r = {DropRuleType::Exact, node.at("column").get<std::string>()};
    } else if (type == "pattern-class") {
      r = {DropRuleType::PatternClass, node.at("name").get<std::string>()};
    } else {
      throw ParseError("unknown drop rule type '" + type + "'");
    }
    rules.push_back(std::move(r));
  }
  try {
    return DropRules(std::move(rules));
  } catch (const InputError& e) {
    throw ParseError(e.what());
  }
}

DropRules DropRules::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open drop rules: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string DropRules::digest() const {
  // Set semantics: the digest ignores rule order and duplicates.
  std::set<std::string> canon;
  for (const auto& r : rules_) canon.insert(std::string(type_name(r.type)) + ":" + r.value);
  json j = canon;
  return sha256_hex(j.dump());
}

bool DropRules::matches(const std::string& column, const std::vector<std::string>& all_columns) const {
  for (const auto& r : rules_) {
    switch (r.type) {
      case DropRuleType::Prefix:
        if (starts_with(column, r.value)) return true;
        break;
      case DropRuleType::Exact:
        if (column == r.value) return true;
        break;
      case DropRuleType::PatternClass:
        if (r.value == "imputation-flags") {
          if (column.size() > 1 && column[0] == 'Z' &&
              std::find(all_columns.begin(), all_columns.end(), column.substr(1)) !=
                  all_columns.end()) {
            return true;
          }
        } else if (r.value == "replicate-weights") {
          if (is_replicate_weight(column)) return true;
        } else if (r.value == "dollar-amounts") {
          if (is_dollar_amount(column)) return true;
        } else if (r.value == "phone-count") {
          if (is_phone_count(column)) return true;
        }
        break;
    }
  }
  return false;
}

DropResult apply_drop_rules(const Dataset& data, const DropRules& rules) {
  const auto& cols = data.columns();
  DropResult out;
  for (const auto& r : rules.rules()) {
    if (r.type == DropRuleType::Exact && !data.has_column(r.value)) {
      out.warnings.push_back("exact drop rule names absent column " + r.value);
    }
  }
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (rules.matches(cols[c], cols)) {
      out.dropped.push_back(cols[c]);
    } else {
      keep.push_back(c);
    }
  }
  out.data = data.select_columns(keep);
  return out;
}

}  // namespace occupant::features
