#pragma once

#include <cstdint>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sdoh/conll.h"

namespace sdoh {

// Heading rules for locating the case-report section of a raw article.
// Patterns are ECMAScript regexes, matched case-insensitively at the start of
// a line (after optional numbering such as "2." or "II." and markdown '#').
class SectionRuleSet {
 public:
  enum class Action { kKeepFrom, kStopAt };

  struct Rule {
    std::string pattern;
    Action action;
  };

  explicit SectionRuleSet(std::vector<Rule> rules);

  // `{"keep_from": [...], "stop_at": [...]}`
  static SectionRuleSet from_json(std::string_view json_text);
  static SectionRuleSet defaults();

  const std::vector<Rule>& rules() const { return rules_; }
  bool line_matches(std::string_view line, Action action) const;

 private:
  std::vector<Rule> rules_;
  std::vector<std::regex> compiled_;
};

// Span from the first keep_from heading line to the first later stop_at
// heading line (exclusive) or the end. Absent when no keep_from heading exists.
std::optional<std::string> extract_case_section(std::string_view raw,
                                                const SectionRuleSet& rules);

// Whitespace split, leading/trailing punctuation detached, sentence break
// after . ! ? when the next token starts with an uppercase letter. All labels
// are O.
std::vector<Sentence> tokenize(std::string_view text);

// Documents containing at least one keyword as a case-insensitive whole-word
// (or whole-phrase) match. Order preserved.
Corpus keyword_select(const Corpus& corpus, const std::vector<std::string>& keywords);

// The keywords used to pick the diversity-targeted development subset.
const std::vector<std::string>& default_subset_keywords();

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

// Seeded partition over documents sorted by id. |train| = round-half-up of
// train_fraction * N. Both halves are returned in id order.
std::pair<Corpus, Corpus> random_split(const Corpus& corpus, const SplitSpec& spec);

}  // namespace sdoh
