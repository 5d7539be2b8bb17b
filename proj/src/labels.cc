#include "sdoh/labels.h"

#include <algorithm>

namespace sdoh {
namespace {

constexpr std::array<std::string_view, kNumEntityTypes> kTypeNames = {
    "Access_To_Care",   "Age",
    "Condition",        "Diet",
    "Disability",       "Education",
    "Employment",       "Exercise",
    "Family_Member",    "Gender",
    "Geographic_Entity", "Housing",
    "Income",           "Insurance_Status",
    "Language",         "Marital_Status",
    "Mental_Health",    "Race_Ethnicity",
    "Severity",         "Sexual_Orientation",
    "Social_Support",   "Spiritual_Beliefs",
    "Substance",        "Treatment",
    "Vaccine",          "Violence_Or_Abuse",
};

std::array<EntityType, kNumEntityTypes> make_all_types() {
  std::array<EntityType, kNumEntityTypes> out{};
  for (std::size_t i = 0; i < kNumEntityTypes; ++i) {
    out[i] = static_cast<EntityType>(i);
  }
  return out;
}

}  // namespace

std::string_view entity_type_name(EntityType type) {
  return kTypeNames[type_index(type)];
}

std::optional<EntityType> parse_entity_type(std::string_view name) {
  auto it = std::find(kTypeNames.begin(), kTypeNames.end(), name);
  if (it == kTypeNames.end()) return std::nullopt;
  return static_cast<EntityType>(it - kTypeNames.begin());
}

const std::array<EntityType, kNumEntityTypes>& all_entity_types() {
  static const auto types = make_all_types();
  return types;
}

BioLabel BioLabel::from_index(std::size_t index) {
  if (index == 0 || index >= kNumLabels) return outside();
  const auto type = static_cast<EntityType>((index - 1) / 2);
  return (index - 1) % 2 == 0 ? begin(type) : inside(type);
}

std::optional<BioLabel> BioLabel::parse(std::string_view text) {
  if (text == "O") return outside();
  if (text.size() < 3 || text[1] != '-') return std::nullopt;
  auto type = parse_entity_type(text.substr(2));
  if (!type) return std::nullopt;
  if (text[0] == 'B') return begin(*type);
  if (text[0] == 'I') return inside(*type);
  return std::nullopt;
}

std::string BioLabel::str() const {
  if (is_outside()) return "O";
  std::string out(is_begin() ? "B-" : "I-");
  out += entity_type_name(type_);
  return out;
}

bool bio_transition_allowed(std::optional<BioLabel> prev, BioLabel next) {
  if (!next.is_inside()) return true;
  return prev && !prev->is_outside() && prev->type() == next.type();
}

}  // namespace sdoh
