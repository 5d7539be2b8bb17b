#include "sdoh/refine.h"

#include <nlohmann/json.hpp>

#include "sdoh/errors.h"
#include "sdoh/log.h"

namespace sdoh {
namespace {

struct SourceLabel {
  Position position;
  std::string name;
};

std::optional<SourceLabel> split_source_label(std::string_view label) {
  if (label == "O") return SourceLabel{Position::kOutside, ""};
  if (label.size() < 3 || label[1] != '-') return std::nullopt;
  if (label[0] == 'B') return SourceLabel{Position::kBegin, std::string(label.substr(2))};
  if (label[0] == 'I') return SourceLabel{Position::kInside, std::string(label.substr(2))};
  return std::nullopt;
}

}  // namespace

std::string normalize_source_label(std::string_view name) {
  std::string out(name);
  for (char& c : out) {
    if (c == '_') c = ' ';
  }
  return out;
}

const std::vector<std::string>& default_source_inventory() {
  static const std::vector<std::string> names = {
      // Excluded (mapped to O).
      "Community Safety", "Date", "Healthcare Institution", "Legal Issues",
      "Other SDoH Keywords", "Population Group", "Quality Of Life", "Sexual Activity",
      "Substance Duration", "Substance Frequency", "Substance Quantity", "Transportation",
      "Childhood Event", "Environmental Condition",
      // Included.
      "Access To Care", "Age", "Alcohol", "Communicable Disease", "Diet", "Disability",
      "Eating Disorder", "Education", "Employment", "Exercise", "Family Member",
      "Financial Status", "Food Insecurity", "Gender", "Geographic Entity", "Housing",
      "Hyperlipidemia", "Hypertension", "Income", "Insurance Status", "Language",
      "Marital Status", "Mental Health", "Obesity", "Other Disease", "Race Ethnicity",
      "Sexual Orientation", "Smoking", "Social Exclusion", "Social Support",
      "Spiritual Beliefs", "Substance Use", "Violence Or Abuse", "Vaccine",
      "Admission Discharge",
      // From the COVID-trials inventory.
      "Severity", "Treatment"};
  return names;
}

const std::vector<std::string>& ambiguous_source_labels() {
  static const std::vector<std::string> names = {"Transportation"};
  return names;
}

void LabelMapping::set(std::string_view source, std::optional<EntityType> target) {
  entries_[normalize_source_label(source)] = target;
}

std::optional<std::optional<EntityType>> LabelMapping::lookup(std::string_view source) const {
  auto it = entries_.find(normalize_source_label(source));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

LabelMapping LabelMapping::from_json(std::string_view json_text) {
  return from_json(json_text, default_source_inventory());
}

LabelMapping LabelMapping::from_json(std::string_view json_text,
                                     const std::vector<std::string>& required_sources) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("label mapping: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("label mapping must be a JSON object");

  LabelMapping mapping;
  for (const auto& [source, target] : j.items()) {
    if (!target.is_string()) {
      throw ValidationError("label mapping: target of '" + source + "' is not a string");
    }
    const auto name = target.get<std::string>();
    if (name == "O") {
      mapping.set(source, std::nullopt);
      continue;
    }
    auto type = parse_entity_type(name);
    if (!type) {
      throw ValidationError("label mapping: unknown target type '" + name + "' for '" +
                            source + "'");
    }
    mapping.set(source, *type);
  }

  std::string gaps;
  for (const auto& name : required_sources) {
    if (!mapping.lookup(name)) gaps += (gaps.empty() ? "" : ", ") + name;
  }
  if (!gaps.empty()) throw ValidationError("label mapping is missing source labels: " + gaps);

  std::vector<bool> reached(kNumEntityTypes, false);
  for (const auto& [_, target] : mapping.entries_) {
    if (target) reached[type_index(*target)] = true;
  }
  std::string unreached;
  for (auto t : all_entity_types()) {
    if (!reached[type_index(t)]) {
      unreached += (unreached.empty() ? "" : ", ") + std::string(entity_type_name(t));
    }
  }
  if (!unreached.empty()) {
    throw ValidationError("label mapping never targets: " + unreached);
  }

  for (const auto& name : ambiguous_source_labels()) {
    if (auto t = mapping.lookup(name)) {
      log::warn("source label '" + name +
                "' is listed as both excluded and included; mapped to " +
                (*t ? std::string(entity_type_name(**t)) : std::string("O")));
    }
  }
  return mapping;
}

Document refine_labels(const RawDocument& doc, const LabelMapping& mapping) {
  Document out;
  out.id = doc.id;
  out.provenance = doc.provenance;
  out.sentences.reserve(doc.sentences.size());
  for (const auto& raw : doc.sentences) {
    Sentence sentence;
    sentence.synthetic_id = raw.synthetic_id;
    sentence.tokens.reserve(raw.tokens.size());
    std::string prev_source;
    for (const auto& tok : raw.tokens) {
      auto parts = split_source_label(tok.label);
      if (!parts) throw UnknownLabelError(tok.line, tok.label);
      BioLabel label = BioLabel::outside();
      std::string source = normalize_source_label(parts->name);
      if (parts->position != Position::kOutside) {
        auto target = mapping.lookup(source);
        if (!target) throw UnknownLabelError(tok.line, tok.label);
        if (*target) {
          label = parts->position == Position::kBegin ? BioLabel::begin(**target)
                                                      : BioLabel::inside(**target);
          // A new source span directly after a different source span of the
          // same refined type continues that span.
          if (label.is_begin() && !sentence.tokens.empty()) {
            const BioLabel prev = sentence.tokens.back().label;
            if (!prev.is_outside() && prev.type() == label.type() && prev_source != source) {
              label = label.as_inside();
            }
          }
        }
      }
      prev_source = label.is_outside() ? std::string() : source;
      sentence.tokens.push_back(Token{tok.surface, label, tok.confidence});
    }
    repair_bio_in_place(sentence.tokens);
    out.sentences.push_back(std::move(sentence));
  }
  return out;
}

Corpus refine_corpus(const RawCorpus& corpus, const LabelMapping& mapping) {
  Corpus out;
  out.reserve(corpus.size());
  for (const auto& d : corpus) out.push_back(refine_labels(d, mapping));
  return out;
}

RawDocument to_raw(const Document& doc) {
  RawDocument out;
  out.id = doc.id;
  out.provenance = doc.provenance;
  for (const auto& s : doc.sentences) {
    RawSentence rs;
    rs.synthetic_id = s.synthetic_id;
    for (const auto& t : s.tokens) rs.tokens.push_back({t.surface, t.label.str(), t.confidence, 0});
    out.sentences.push_back(std::move(rs));
  }
  return out;
}

RawCorpus to_raw(const Corpus& corpus) {
  RawCorpus out;
  for (const auto& d : corpus) out.push_back(to_raw(d));
  return out;
}

MergePolicy MergePolicy::defaults() {
  return MergePolicy{{EntityType::kAge, EntityType::kVaccine}};
}

Document merge_annotations(const Document& base, const Document& overlay,
                           const MergePolicy& policy) {
  if (policy.overlay_types.empty()) throw ArgumentError("merge policy has no overlay types");
  if (base.sentences.size() != overlay.sentences.size()) {
    throw AlignmentError("document '" + base.id + "': sentence count differs (" +
                         std::to_string(base.sentences.size()) + " vs " +
                         std::to_string(overlay.sentences.size()) + ")");
  }
  Document out = base;
  for (std::size_t s = 0; s < base.sentences.size(); ++s) {
    auto& dst = out.sentences[s].tokens;
    const auto& src = overlay.sentences[s].tokens;
    if (dst.size() != src.size()) {
      throw AlignmentError("document '" + base.id + "' sentence " + std::to_string(s) +
                           ": token count differs");
    }
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (dst[i].surface != src[i].surface) {
        throw AlignmentError("document '" + base.id + "' sentence " + std::to_string(s) +
                             " token " + std::to_string(i) + ": '" + dst[i].surface +
                             "' vs '" + src[i].surface + "'");
      }
      const BioLabel ov = src[i].label;
      if (!ov.is_outside() && policy.overlay_types.contains(ov.type())) {
        dst[i].label = ov;
        dst[i].confidence = src[i].confidence;
      }
    }
    repair_bio_in_place(dst);
  }
  return out;
}

}  // namespace sdoh
