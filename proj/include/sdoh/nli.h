#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdoh/conll.h"

namespace sdoh {

enum class NliVerdict { kEntailment, kContradiction, kNotApplicable };
std::string_view verdict_name(NliVerdict v);

struct NliStatement {
  EntityType type;
  std::string text;
  std::set<std::string> entail;  // normalized terms
  std::set<std::string> contra;
};

using StatementSet = std::vector<NliStatement>;  // one per type, canonical order

// Lowercase, '-'/'_' to spaces, outer punctuation and spaces stripped,
// whitespace runs collapsed.
std::string normalize_term(std::string_view text);

// `{"Type": {"statement": ..., "entailment": [...], "contradiction": [...]}}`.
// Keys may use '_' or spaces. ValidationError on a missing type, an empty set
// or a term present in both sets.
StatementSet load_statements(std::string_view json_text);
void validate_statement(const NliStatement& s);

class SynonymProvider {
 public:
  virtual ~SynonymProvider() = default;
  // Raw synonyms of a term; throws DataError on failure.
  virtual std::vector<std::string> synonyms(const std::string& term) const = 0;
};

// JSON thesaurus: `{"term": ["syn", ...], ...}`, keys compared normalized.
class ThesaurusProvider : public SynonymProvider {
 public:
  explicit ThesaurusProvider(std::string_view json_text);
  std::vector<std::string> synonyms(const std::string& term) const override;

 private:
  std::map<std::string, std::vector<std::string>> table_;
};

// Adds the normalized synonyms of every term (depth rounds) to its own set.
// A synonym already in the opposing set is skipped with a warning.
StatementSet expand_synonyms(const StatementSet& statements, const SynonymProvider& provider,
                             std::size_t depth = 1);

struct Classification {
  NliVerdict verdict = NliVerdict::kNotApplicable;
  bool dual_match = false;  // both sets matched; entailment wins
};

Classification classify_mention(std::string_view mention_text, const NliStatement& statement);

struct VerdictRecord {
  std::string document_id;
  std::size_t sentence_index = 0;
  std::size_t start = 0;
  EntityType mention_type;
  std::string mention_text;
  EntityType statement_type;
  NliVerdict verdict;
  bool dual_match = false;
};

// Each mention against the statement of its own type.
std::vector<VerdictRecord> run_restricted(std::span<const Mention> mentions,
                                          const StatementSet& statements, std::size_t threads = 1);
// Each mention against every statement, statement-major within a mention.
std::vector<VerdictRecord> run_full(std::span<const Mention> mentions,
                                    const StatementSet& statements, std::size_t threads = 1);

struct NliAggregateRow {
  EntityType type;
  std::string statement;
  std::size_t n_entail = 0, n_contra = 0, n_na = 0;
  std::optional<double> pct_entail, pct_contra;  // over entail + contra
};

// One row per statement, in statement order.
std::vector<NliAggregateRow> aggregate(std::span<const VerdictRecord> verdicts,
                                       const StatementSet& statements);

// statement,n_entail,n_contra,n_na,pct_entail,pct_contra (empty pct cells when absent)
std::string aggregate_csv(std::span<const NliAggregateRow> rows);
std::string verdicts_csv(std::span<const VerdictRecord> verdicts);

}  // namespace sdoh
