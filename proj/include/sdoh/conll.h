#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdoh/labels.h"

namespace sdoh {

struct Token {
  std::string surface;
  BioLabel label;
  double confidence = 1.0;

  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::vector<Token> tokens;
  // Set on sentences produced by synthetic augmentation.
  std::optional<std::string> synthetic_id;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

enum class Provenance { kSubset1, kSubset2, kSubset3, kFullCorpus, kSyntheticHost };

std::string_view provenance_name(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view name);

struct Document {
  std::string id;
  std::vector<Sentence> sentences;
  Provenance provenance = Provenance::kFullCorpus;

  std::size_t token_count() const;
  friend bool operator==(const Document&, const Document&) = default;
};

using Corpus = std::vector<Document>;

std::size_t corpus_token_count(const Corpus& corpus);

// A maximal B(I)* run inside one sentence.
struct Mention {
  EntityType type = EntityType::kAccessToCare;
  std::string document_id;
  std::size_t sentence_index = 0;
  std::size_t start = 0;
  std::vector<std::string> surfaces;

  std::size_t length() const { return surfaces.size(); }
  // Surfaces joined by single spaces.
  std::string text() const;
  friend bool operator==(const Mention&, const Mention&) = default;
};

// ---------------------------------------------------------------------------
// File format
//
//   -DOCSTART- <id>[ <provenance>]      begins a document
//   # synthetic_id = <id>               optional, precedes a sentence
//   surface<TAB>label[<TAB>confidence]  one token per line
//   <blank>                             ends a sentence
//
// The confidence column is written with 4 decimals and omitted when it is
// exactly 1. The provenance suffix is omitted for full_corpus.
// ---------------------------------------------------------------------------

// Strict reader: labels must be one of the 53 refined BIO labels.
Corpus parse_conll(std::string_view text);
std::string serialize_conll(const Corpus& corpus);

// Permissive reader used for pre-refinement files: any label text is kept.
struct RawToken {
  std::string surface;
  std::string label;
  double confidence = 1.0;
  std::size_t line = 0;
};

struct RawSentence {
  std::vector<RawToken> tokens;
  std::optional<std::string> synthetic_id;
};

struct RawDocument {
  std::string id;
  std::vector<RawSentence> sentences;
  Provenance provenance = Provenance::kFullCorpus;
};

using RawCorpus = std::vector<RawDocument>;

RawCorpus parse_conll_raw(std::string_view text);

// ---------------------------------------------------------------------------
// BIO scheme
// ---------------------------------------------------------------------------

enum class BioViolationKind {
  kInsideWithoutBegin,  // I-X at sentence start or after O
  kInsideTypeMismatch,  // I-X after B-Y/I-Y with Y != X
};

struct BioViolation {
  std::size_t index = 0;
  BioViolationKind kind = BioViolationKind::kInsideWithoutBegin;
  friend bool operator==(const BioViolation&, const BioViolation&) = default;
};

std::vector<BioViolation> validate_bio(std::span<const Token> tokens);
inline std::vector<BioViolation> validate_bio(const Sentence& s) {
  return validate_bio(s.tokens);
}

// Rewrites every flagged I-X to B-X; nothing else changes.
void repair_bio_in_place(std::span<Token> tokens);
Sentence repair_bio(Sentence sentence);
void repair_document(Document& doc);

// Throws InvalidSchemeError when the sentence does not pass validate_bio.
std::vector<Mention> mention_spans(const Sentence& sentence);
// All mentions of a corpus with document id and sentence index filled in.
std::vector<Mention> corpus_mentions(const Corpus& corpus);

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

struct Window {
  // Offset of the first token in the document's flattened token sequence.
  std::size_t offset = 0;
  std::vector<Token> tokens;
};

inline constexpr std::size_t kDefaultWindowTokens = 512;

// Greedy packing of whole sentences; a sentence longer than max_tokens is
// hard-split and the piece starting at the cut is BIO-repaired.
std::vector<Window> segment_windows(const Document& doc,
                                    std::size_t max_tokens = kDefaultWindowTokens);

}  // namespace sdoh
