#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdoh/conll.h"

namespace sdoh {

// ---------------------------------------------------------------------------
// Filtration
// ---------------------------------------------------------------------------

inline constexpr double kDefaultConfidenceThreshold = 0.90;

// Non-O tokens with confidence strictly below `threshold` become O (their
// confidence is kept). `relabeled` receives the number of changed tokens.
Document confidence_filter(const Document& doc,
                           double threshold = kDefaultConfidenceThreshold,
                           std::size_t* relabeled = nullptr);

// Numeric surfaces carrying a label other than B-Age/I-Age become O.
Document numeric_age_filter(const Document& doc, std::size_t* relabeled = nullptr);

Document drop_all_o_sentences(const Document& doc, std::size_t* dropped = nullptr);

// ---------------------------------------------------------------------------
// Templates and lexicons
// ---------------------------------------------------------------------------

struct TemplateSlot {
  bool placeholder = false;
  std::string literal;  // when !placeholder
  BioLabel label;       // when placeholder

  friend bool operator==(const TemplateSlot&, const TemplateSlot&) = default;
};

struct SentenceTemplate {
  std::string id;
  std::vector<TemplateSlot> slots;

  std::vector<BioLabel> placeholders() const;
  std::size_t literal_count() const;
};

// Throws ValidationError when an I-X placeholder does not directly follow a
// B-X or I-X placeholder.
void validate_template(const SentenceTemplate& t);

// `[{"id": ..., "slots": [{"lit": word} | {"ph": "B-X"}, ...]}, ...]`
std::vector<SentenceTemplate> load_templates(std::string_view json_text);

// B-/I- qualified label -> candidate surface words.
using VariationLexicon = std::map<BioLabel, std::vector<std::string>>;

// `{"B-X": [...], "I-X": [...]}`
VariationLexicon load_lexicon(std::string_view json_text);

// Distinct non-O surfaces per label, in first-appearance order.
VariationLexicon harvest_lexicon(const Corpus& corpus);

// Per label: words of `a`, then words of `b` not already present; duplicates
// dropped.
VariationLexicon merge_lexicons(const VariationLexicon& a, const VariationLexicon& b);

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

enum class LexiconSource { kFull, kGenerated };

struct AugmentationPlan {
  std::vector<SentenceTemplate> templates;
  VariationLexicon lexicon_full;
  VariationLexicon lexicon_generated;
  std::size_t total_sets = 3000;
  double full_fraction = 0.5;
  std::uint64_t seed = 0;
  // Goes into synthetic ids: SYN-<tag>-00001.
  std::string tag = "train";
};

struct SyntheticSet {
  std::string id;
  LexiconSource source = LexiconSource::kFull;
  // One sentence per template, all carrying `id` as synthetic_id.
  std::vector<Sentence> sentences;
};

// round(full_fraction * total_sets) sets use lexicon_full, the rest
// lexicon_generated. Each placeholder word is drawn uniformly and
// independently from its list. Output is identical for any thread count.
std::vector<SyntheticSet> generate_synthetic_sets(const AugmentationPlan& plan,
                                                  std::size_t threads = 1);

std::size_t full_set_count(const AugmentationPlan& plan);

std::vector<Sentence> flatten_sets(const std::vector<SyntheticSet>& sets);

// Checks the evaluation template constraints (Gender missing from at least one
// template; when `training_templates` is given: a strictly higher literal
// ratio and placeholder orders that differ from every training template),
// then generates like generate_synthetic_sets.
std::vector<SyntheticSet> build_eval_augmentation(
    const AugmentationPlan& plan, std::span<const SentenceTemplate> training_templates = {},
    std::size_t threads = 1);

void validate_eval_templates(std::span<const SentenceTemplate> eval_templates,
                             std::span<const SentenceTemplate> training_templates);

double literal_ratio(std::span<const SentenceTemplate> templates);

// ---------------------------------------------------------------------------
// Embedding
// ---------------------------------------------------------------------------

// Consecutive sentences sharing a synthetic_id form one unit; each unit is
// inserted at a uniformly drawn (document, sentence gap) of the input corpus.
// Original sentences keep their relative order.
Corpus embed_synthetic(const Corpus& corpus, std::span<const Sentence> synthetic,
                       std::uint64_t seed);

// Removes every sentence that carries a synthetic_id.
Corpus strip_synthetic(const Corpus& corpus);

}  // namespace sdoh
