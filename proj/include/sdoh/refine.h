#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sdoh/conll.h"

namespace sdoh {

// Source label name -> refined type (nullopt means 'O').
class LabelMapping {
 public:
  LabelMapping() = default;

  // `{"Source Label": "Target_Type" | "O", ...}`. Validates target names,
  // totality over `required_sources` and that every refined type is reachable.
  static LabelMapping from_json(std::string_view json_text,
                                const std::vector<std::string>& required_sources);
  static LabelMapping from_json(std::string_view json_text);

  // Lookup treats '_' and ' ' as equivalent. Outer optional: is the name
  // mapped at all; inner: refined type or O.
  std::optional<std::optional<EntityType>> lookup(std::string_view source) const;
  std::size_t size() const { return entries_.size(); }

  void set(std::string_view source, std::optional<EntityType> target);

 private:
  std::map<std::string, std::optional<EntityType>, std::less<>> entries_;
};

// Table-1 label names of the two pretrained inventories that are publicly
// known: excluded names, included names, plus Severity and Treatment.
const std::vector<std::string>& default_source_inventory();
// Names listed both as excluded and included.
const std::vector<std::string>& ambiguous_source_labels();

// Canonical key: underscores become spaces.
std::string normalize_source_label(std::string_view name);

// Maps every label into the refined space and repairs BIO. Adjacent spans of
// different source labels that collapse onto the same refined type are joined
// into one span. Throws UnknownLabelError for unmapped labels.
Document refine_labels(const RawDocument& doc, const LabelMapping& mapping);
Corpus refine_corpus(const RawCorpus& corpus, const LabelMapping& mapping);

RawDocument to_raw(const Document& doc);
RawCorpus to_raw(const Corpus& corpus);

struct MergePolicy {
  std::set<EntityType> overlay_types;

  static MergePolicy defaults();  // {Age, Vaccine}
};

// Overlay labels of policy types replace base labels token by token; the
// result is BIO-repaired. Throws AlignmentError when surfaces differ.
Document merge_annotations(const Document& base, const Document& overlay,
                           const MergePolicy& policy);

}  // namespace sdoh
