#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace sdoh {

// The 26 refined entity types, in canonical (alphabetical) order.
enum class EntityType : std::uint8_t {
  kAccessToCare,
  kAge,
  kCondition,
  kDiet,
  kDisability,
  kEducation,
  kEmployment,
  kExercise,
  kFamilyMember,
  kGender,
  kGeographicEntity,
  kHousing,
  kIncome,
  kInsuranceStatus,
  kLanguage,
  kMaritalStatus,
  kMentalHealth,
  kRaceEthnicity,
  kSeverity,
  kSexualOrientation,
  kSocialSupport,
  kSpiritualBeliefs,
  kSubstance,
  kTreatment,
  kVaccine,
  kViolenceOrAbuse,
};

inline constexpr std::size_t kNumEntityTypes = 26;
// O plus B-/I- for every type.
inline constexpr std::size_t kNumLabels = 2 * kNumEntityTypes + 1;

// Underscore-joined name, e.g. "Access_To_Care".
std::string_view entity_type_name(EntityType type);
std::optional<EntityType> parse_entity_type(std::string_view name);
const std::array<EntityType, kNumEntityTypes>& all_entity_types();

inline std::size_t type_index(EntityType type) {
  return static_cast<std::size_t>(type);
}

enum class Position : std::uint8_t { kOutside, kBegin, kInside };

// A BIO label. `type` is meaningless when position is kOutside and is kept at
// its zero value so that equality behaves.
class BioLabel {
 public:
  constexpr BioLabel() = default;

  static constexpr BioLabel outside() { return BioLabel(); }
  static constexpr BioLabel begin(EntityType t) {
    return BioLabel(Position::kBegin, t);
  }
  static constexpr BioLabel inside(EntityType t) {
    return BioLabel(Position::kInside, t);
  }

  // Canonical index: O = 0, then per type B before I.
  static BioLabel from_index(std::size_t index);
  std::size_t index() const {
    if (position_ == Position::kOutside) return 0;
    return 1 + 2 * type_index(type_) + (position_ == Position::kInside ? 1 : 0);
  }

  // Strict parse of "O", "B-Type", "I-Type".
  static std::optional<BioLabel> parse(std::string_view text);
  std::string str() const;

  Position position() const { return position_; }
  EntityType type() const { return type_; }
  bool is_outside() const { return position_ == Position::kOutside; }
  bool is_begin() const { return position_ == Position::kBegin; }
  bool is_inside() const { return position_ == Position::kInside; }

  BioLabel as_begin() const { return is_outside() ? *this : begin(type_); }
  BioLabel as_inside() const { return is_outside() ? *this : inside(type_); }

  friend bool operator==(const BioLabel&, const BioLabel&) = default;
  friend auto operator<=>(const BioLabel& a, const BioLabel& b) {
    return a.index() <=> b.index();
  }

 private:
  constexpr BioLabel(Position p, EntityType t) : position_(p), type_(t) {}

  Position position_ = Position::kOutside;
  EntityType type_ = EntityType::kAccessToCare;
};

// True when `next` may follow `prev` in a valid BIO sequence. `prev` empty
// means sentence start.
bool bio_transition_allowed(std::optional<BioLabel> prev, BioLabel next);

}  // namespace sdoh
