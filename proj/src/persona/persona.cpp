#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "occupant/persona.hpp"

namespace occupant::persona {

namespace {

std::string range_label(Label v, const std::string& unit) {
  if (unit.empty()) return std::to_string(v);
  const auto bar = unit.find('|');
  if (bar == std::string::npos) return std::to_string(v) + " " + unit;
  return std::to_string(v) + " " + (v == 1 ? unit.substr(0, bar) : unit.substr(bar + 1));
}

}  // namespace

// ------------------------------------------------------------ label map

LabelMap LabelMap::from_spec(const features::TargetSpec& spec) {
  LabelMap map;
  for (const auto& def : spec.entries()) {
    TargetLabels t;
    t.description = def.description;
    for (Label code : def.domain()) {
      const auto it = def.decode_map.find(code);
      t.labels[code] = it != def.decode_map.end() ? it->second : range_label(code, def.unit);
    }
    map.targets_[def.code] = std::move(t);
  }
  return map;
}

LabelMap LabelMap::from_json(const json& j) {
  try {
    if (!j.is_object() || j.value("format_version", 0) != kLabelMapFormatVersion) {
      throw ParseError("label map has a missing or unsupported format_version");
    }
    LabelMap map;
    for (const auto& [code, entry] : j.at("targets").items()) {
      TargetLabels t;
      t.description = entry.value("description", std::string());
      for (const auto& [k, v] : entry.at("labels").items()) {
        std::size_t used = 0;
        const int value = std::stoi(k, &used);
        if (used != k.size()) throw ParseError("label map key '" + k + "' for " + code + " is not an integer");
        auto label = v.get<std::string>();
        if (trim(label).empty()) throw ParseError("empty label for " + code + " code " + k);
        t.labels[value] = std::move(label);
      }
      if (t.labels.empty()) throw ParseError("label map target " + code + " has no labels");
      map.targets_[code] = std::move(t);
    }
    return map;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed label map: ") + e.what());
  } catch (const std::logic_error& e) {
    throw ParseError(std::string("malformed label map key: ") + e.what());
  }
}

LabelMap LabelMap::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open label map " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

json LabelMap::to_json() const {
  json targets = json::object();
  for (const auto& [code, t] : targets_) {
    json labels = json::object();
    for (const auto& [k, v] : t.labels) labels[std::to_string(k)] = v;
    targets[code] = {{"description", t.description}, {"labels", labels}};
  }
  return {{"format_version", kLabelMapFormatVersion}, {"targets", targets}};
}

void LabelMap::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

const LabelMap::TargetLabels& LabelMap::at(const std::string& target) const {
  const auto it = targets_.find(target);
  if (it == targets_.end()) throw InputError("no labels for target " + target);
  return it->second;
}

const std::string& decode(const std::string& target, Label value, const LabelMap& labels) {
  const auto& t = labels.at(target);
  const auto it = t.labels.find(value);
  if (it == t.labels.end()) {
    throw InputError("code " + std::to_string(value) + " is outside the domain of " + target);
  }
  return it->second;
}

// ------------------------------------------------------------ card layout

namespace {

const std::vector<std::pair<std::string, std::vector<std::string>>>& layout() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> groups = {
      {"Household composition", {"NHSLDMEM", "NUMADULT", "NUMCHILD", "ATHOME"}},
      {"Thermal preferences", {"TEMPHOME", "TEMPGONE", "TEMPNITE", "TEMPHOMEAC", "TEMPGONEAC", "TEMPNITEAC"}},
      {"Equipment behavior", {"EQUIPMUSE", "USEWWAC"}},
      {"Demographics", {"HHAGE", "EMPLOYHH", "EDUCATION"}},
      {"Economics", {"MONEYPY"}},
  };
  return groups;
}

}  // namespace

const std::string& group_of(const std::string& target) {
  for (const auto& [group, targets] : layout()) {
    if (std::find(targets.begin(), targets.end(), target) != targets.end()) return group;
  }
  throw InputError("unknown target " + target);
}

const std::vector<std::string>& group_order() {
  static const std::vector<std::string> order = [] {
    std::vector<std::string> o;
    for (const auto& [group, _] : layout()) o.push_back(group);
    return o;
  }();
  return order;
}

const Characteristic& PersonaCard::at(const std::string& target) const {
  for (const auto& c : characteristics) {
    if (c.target == target) return c;
  }
  throw InputError("card has no characteristic " + target);
}

const std::vector<std::string>& placeholder_names() {
  static const std::vector<std::string> names = {
      "Avery", "Blair", "Casey", "Devon", "Emerson", "Finley", "Harper", "Jordan",
      "Kendall", "Morgan", "Quinn", "Riley", "Rowan", "Sage", "Taylor", "Wren"};
  return names;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ------------------------------------------------------------ narrative

namespace {

// Thermostat span over the non-sentinel settings of one season.
std::string thermostat_phrase(const PersonaCard& card, const std::vector<std::string>& targets,
                              const std::string& season) {
  const Characteristic* lo = nullptr;
  const Characteristic* hi = nullptr;
  for (const auto& t : targets) {
    const auto& c = card.at(t);
    if (c.code < 0) continue;
    if (!lo || c.code < lo->code) lo = &c;
    if (!hi || c.code > hi->code) hi = &c;
  }
  if (!lo) return season + " thermostat settings do not apply to this household.";
  const auto& home = card.at(targets.front());
  std::string s = "In " + to_lower(season) + " the thermostat is set ";
  s += lo->code == hi->code ? "at " + lo->label : "between " + lo->label + " and " + hi->label;
  if (home.code >= 0) s += ", with " + home.label + " when someone is home during the day";
  return s + ".";
}

std::string narrative(const PersonaCard& card) {
  auto L = [&](const char* t) -> const std::string& { return card.at(t).label; };
  std::ostringstream o;
  o << card.name << " is a fictional occupant in the " << L("HHAGE") << " age group. ";
  o << "The household has " << L("NHSLDMEM") << " (" << L("NUMADULT") << " and " << L("NUMCHILD")
    << "), and someone is at home on " << L("ATHOME") << ". ";
  o << "Employment status: " << L("EMPLOYHH") << ". ";
  o << "Highest education: " << L("EDUCATION") << ". ";
  o << "Annual household income: " << L("MONEYPY") << ". ";
  o << "Main heating behavior: " << L("EQUIPMUSE") << ". ";
  o << thermostat_phrase(card, {"TEMPHOME", "TEMPGONE", "TEMPNITE"}, "Winter") << ' ';
  o << "Individual air conditioner behavior: " << L("USEWWAC") << ". ";
  o << thermostat_phrase(card, {"TEMPHOMEAC", "TEMPGONEAC", "TEMPNITEAC"}, "Summer");
  return o.str();
}

}  // namespace

PersonaCard build_persona(const PredictionVector& pred, const LabelMap& labels, const BuildOptions& options) {
  std::vector<std::string> missing;
  for (const char* code : features::kTargetCodes) {
    if (!pred.values.count(code)) missing.emplace_back(code);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw DataError("prediction vector is missing targets: " + list);
  }
  PersonaCard card;
  const auto& names = placeholder_names();
  card.name = names[options.seed % names.size()];
  card.fictional = true;
  for (const auto& [group, targets] : layout()) {
    for (const auto& t : targets) {
      const Label code = pred.values.at(t);
      card.characteristics.push_back({group, t, labels.at(t).description, code, decode(t, code, labels)});
    }
  }
  card.narrative = narrative(card);
  card.generated_at = options.generated_at.empty() ? utc_timestamp() : options.generated_at;
  card.source = pred;
  card.annotations = options.annotations;
  return card;
}

// ------------------------------------------------------------ rendering

Format parse_format(const std::string& name) {
  const std::string n = to_lower(trim(name));
  if (n == "json" || n == "structured") return Format::Json;
  if (n == "markdown" || n == "md") return Format::Markdown;
  if (n == "plain" || n == "text" || n == "txt") return Format::Plain;
  throw UsageError("unsupported persona format '" + name + "' (expected json, markdown or plain)");
}

std::string extension(Format format) {
  switch (format) {
    case Format::Json: return ".json";
    case Format::Markdown: return ".md";
    case Format::Plain: return ".txt";
  }
  return "";
}

json to_json(const PersonaCard& card) {
  json chars = json::array();
  for (const auto& c : card.characteristics) {
    chars.push_back({{"group", c.group},
                     {"target", c.target},
                     {"description", c.description},
                     {"code", c.code},
                     {"label", c.label}});
  }
  return {{"format_version", kPersonaFormatVersion},
          {"name", card.name},
          {"fictional", card.fictional},
          {"generated_at", card.generated_at},
          {"characteristics", chars},
          {"narrative", card.narrative},
          {"annotations", card.annotations},
          {"source",
           {{"predictions", card.source.values},
            {"models", card.source.models},
            {"snapshot_digest", card.source.snapshot_digest}}}};
}

PersonaCard card_from_json(const json& j) {
  try {
    if (!j.is_object() || j.value("format_version", 0) != kPersonaFormatVersion) {
      throw ParseError("persona card has a missing or unsupported format_version");
    }
    PersonaCard card;
    card.name = j.at("name").get<std::string>();
    card.fictional = j.at("fictional").get<bool>();
    card.generated_at = j.at("generated_at").get<std::string>();
    for (const auto& c : j.at("characteristics")) {
      card.characteristics.push_back({c.at("group").get<std::string>(), c.at("target").get<std::string>(),
                                      c.at("description").get<std::string>(), c.at("code").get<Label>(),
                                      c.at("label").get<std::string>()});
    }
    card.narrative = j.at("narrative").get<std::string>();
    card.annotations = j.at("annotations").get<std::vector<std::string>>();
    const auto& s = j.at("source");
    card.source.values = s.at("predictions").get<std::map<std::string, Label>>();
    card.source.models = s.at("models").get<std::map<std::string, std::string>>();
    card.source.snapshot_digest = s.at("snapshot_digest").get<std::string>();

    std::set<std::string> seen;
    for (const auto& c : card.characteristics) seen.insert(c.target);
    if (card.characteristics.size() != features::kTargetCodes.size() ||
        seen.size() != features::kTargetCodes.size()) {
      throw ParseError("persona card must hold sixteen distinct characteristics");
    }
    if (card.narrative.empty()) throw ParseError("persona card has an empty narrative");
    return card;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed persona card: ") + e.what());
  }
}

PersonaCard parse_card(const std::string& text) {
  try {
    return card_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("persona card is not valid JSON: ") + e.what());
  }
}

namespace {

std::string source_line(const PersonaCard& card) {
  std::string s = "Models:";
  bool first = true;
  for (const auto& [t, m] : card.source.models) {
    s += (first ? " " : ", ") + t + "=" + m;
    first = false;
  }
  if (first) s += " n/a";
  if (!card.source.snapshot_digest.empty()) s += ". Snapshot digest: " + card.source.snapshot_digest;
  return s;
}

}  // namespace

std::string render(const PersonaCard& card, Format format) {
  if (format == Format::Json) return to_json(card).dump(2) + "\n";
  std::ostringstream o;
  const bool md = format == Format::Markdown;
  if (md) {
    o << "# " << card.name << "\n\n";
    o << "_Fictional persona generated " << card.generated_at << "._\n";
  } else {
    o << card.name << " (fictional persona)\n";
    o << "Generated " << card.generated_at << "\n";
  }
  for (const auto& group : group_order()) {
    o << '\n' << (md ? "## " : "") << group << (md ? "\n\n" : "\n");
    for (const auto& c : card.characteristics) {
      if (c.group != group) continue;
      if (md) {
        o << "- **" << c.description << "** (" << c.target << "): " << c.label << '\n';
      } else {
        o << "  " << c.description << " (" << c.target << "): " << c.label << '\n';
      }
    }
  }
  o << '\n' << (md ? "## Narrative\n\n" : "Narrative\n  ") << card.narrative << '\n';
  if (!card.annotations.empty()) {
    o << '\n' << (md ? "## Notes\n\n" : "Notes\n");
    for (const auto& a : card.annotations) o << (md ? "" : "  ") << a << (md ? "\n\n" : "\n");
  }
  o << '\n' << (md ? "## Source\n\n" : "Source\n  ") << source_line(card) << '\n';
  return o.str();
}

}  // namespace occupant::persona
