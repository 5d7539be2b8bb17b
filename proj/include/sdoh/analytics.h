#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "sdoh/conll.h"

namespace sdoh {

enum class Denominator { kAllTokens, kNonOMentions };

struct DistributionEntry {
  std::string label;  // type name, or "O" for the token distribution
  std::size_t count = 0;
  double pct = 0.0;
};

struct Distribution {
  Denominator denominator = Denominator::kAllTokens;
  std::size_t total = 0;
  std::vector<DistributionEntry> entries;
};

// B and I tokens pooled per type, plus an "O" entry; over all tokens.
// DataError on an empty corpus.
Distribution token_label_distribution(const Corpus& corpus);
// Mentions per type over all non-O mentions (all zero when there are none).
// DataError on an empty corpus.
Distribution mention_type_distribution(const Corpus& corpus);

// Distinct mentioned types per document.
std::vector<std::size_t> document_richness(const Corpus& corpus);
// richness -> number of documents, richness 0..26.
std::array<std::size_t, kNumEntityTypes + 1> entity_richness(const Corpus& corpus);

struct TrigramStat {
  std::array<EntityType, 3> types;
  std::size_t count = 0;
  double pct = 0.0;
};

// Mentions restricted to the top_k types by mention count (ties by canonical
// order); sliding ordered triples within a document. Sorted by count
// descending, then by types. ArgumentError when top_k is 0.
std::vector<TrigramStat> trigram_frequencies(const Corpus& corpus, std::size_t top_k = 25);

struct ExtractionTotals {
  std::size_t documents = 0;
  std::size_t tokens = 0;
  std::size_t mentions = 0;
  std::size_t o_tokens = 0;
  struct PerProvenance {
    std::size_t documents = 0, mentions = 0, o_tokens = 0;
  };
  std::map<std::string, PerProvenance> by_provenance;
};

ExtractionTotals extraction_totals(const Corpus& corpus);

// label,count,pct
std::string distribution_csv(const Distribution& d);
// richness,count,pct
std::string richness_csv(const std::array<std::size_t, kNumEntityTypes + 1>& histogram);
// label,count,pct with label "A,B,C" quoted
std::string trigrams_csv(const std::vector<TrigramStat>& trigrams);
std::string totals_json(const ExtractionTotals& totals);

}  // namespace sdoh
