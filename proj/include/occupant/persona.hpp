#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "occupant/core.hpp"
#include "occupant/features.hpp"

namespace occupant::persona {

using json = nlohmann::json;

inline constexpr int kPersonaFormatVersion = 1;
inline constexpr int kLabelMapFormatVersion = 1;

/// Display labels for every code in each target's domain.
class LabelMap {
 public:
  struct TargetLabels {
    std::string description;
    std::map<Label, std::string> labels;
    bool operator==(const TargetLabels&) const = default;
  };

  /// Enumerated codes take their codebook label; range codes render as
  /// "<value> <unit>", with "singular|plural" units chosen by value.
  static LabelMap from_spec(const features::TargetSpec& spec);
  static LabelMap from_json(const json& j);
  static LabelMap load(const std::filesystem::path& path);
  json to_json() const;
  void save(const std::filesystem::path& path) const;

  bool contains(const std::string& target) const { return targets_.count(target) != 0; }
  const TargetLabels& at(const std::string& target) const;
  const std::map<std::string, TargetLabels>& targets() const noexcept { return targets_; }

  bool operator==(const LabelMap&) const = default;

 private:
  std::map<std::string, TargetLabels> targets_;
};

/// Throws InputError for an unknown target or an out-of-domain code.
const std::string& decode(const std::string& target, Label value, const LabelMap& labels);

struct PredictionVector {
  std::map<std::string, Label> values;
  std::map<std::string, std::string> models;  // target -> model kind
  std::string snapshot_digest;

  bool operator==(const PredictionVector&) const = default;
};

struct Characteristic {
  std::string group;
  std::string target;
  std::string description;
  Label code = 0;
  std::string label;

  bool operator==(const Characteristic&) const = default;
};

/// Section a target belongs to on the card.
const std::string& group_of(const std::string& target);
/// Section titles in card order.
const std::vector<std::string>& group_order();

struct PersonaCard {
  std::string name;
  bool fictional = true;
  std::vector<Characteristic> characteristics;  // card order
  std::string narrative;
  std::string generated_at;  // UTC, ISO 8601
  PredictionVector source;
  std::vector<std::string> annotations;  // optional free text

  const Characteristic& at(const std::string& target) const;
  bool operator==(const PersonaCard&) const = default;
};

struct BuildOptions {
  std::uint64_t seed = 42;         // selects the placeholder name
  std::string generated_at;        // empty: current time
  std::vector<std::string> annotations;
};

/// Placeholder names; every card is flagged as fictional.
const std::vector<std::string>& placeholder_names();

/// Decodes all sixteen predictions and fills the narrative template.
/// Throws DataError listing any missing targets.
PersonaCard build_persona(const PredictionVector& pred, const LabelMap& labels,
                          const BuildOptions& options = {});

enum class Format { Json, Markdown, Plain };

/// Accepts json, markdown (md) and plain (text, txt); throws UsageError.
Format parse_format(const std::string& name);
std::string extension(Format format);

std::string render(const PersonaCard& card, Format format);
json to_json(const PersonaCard& card);
/// Inverse of render(card, Format::Json).
PersonaCard card_from_json(const json& j);
PersonaCard parse_card(const std::string& text);

std::string utc_timestamp();

}  // namespace occupant::persona
