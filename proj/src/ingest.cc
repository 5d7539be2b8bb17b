#include "sdoh/ingest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "sdoh/errors.h"
#include "sdoh/rng.h"
#include "sdoh/text.h"

namespace sdoh {
namespace {

// Strips indentation, markdown hashes and section numbering ("3.", "2.1",
// "IV.") from a heading candidate.
std::string_view heading_body(std::string_view line) {
  std::size_t i = 0;
  auto skip_spaces = [&] {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  };
  skip_spaces();
  while (i < line.size() && line[i] == '#') ++i;
  skip_spaces();
  std::size_t j = i;
  while (j < line.size() && ((line[j] >= '0' && line[j] <= '9') || line[j] == '.')) ++j;
  if (j > i && j < line.size() && (line[j] == ' ' || line[j] == '\t')) {
    i = j;
  } else {
    j = i;
    while (j < line.size() && (line[j] == 'I' || line[j] == 'V' || line[j] == 'X')) ++j;
    if (j > i && j + 1 < line.size() && line[j] == '.' && line[j + 1] == ' ') i = j + 1;
  }
  skip_spaces();
  return line.substr(i);
}

bool starts_upper(std::string_view s) {
  return !s.empty() && s[0] >= 'A' && s[0] <= 'Z';
}

bool is_terminal(std::string_view s) { return s == "." || s == "!" || s == "?"; }

}  // namespace

SectionRuleSet::SectionRuleSet(std::vector<Rule> rules) : rules_(std::move(rules)) {
  bool has_keep = false;
  for (const auto& r : rules_) {
    if (r.action == Action::kKeepFrom) has_keep = true;
    try {
      compiled_.emplace_back(r.pattern, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw ValidationError("section rule '" + r.pattern + "' does not compile: " +
                            e.what());
    }
  }
  if (!has_keep) throw ValidationError("section rules need at least one keep_from");
}

SectionRuleSet SectionRuleSet::from_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("section rules: ") + e.what());
  }
  std::vector<Rule> rules;
  auto collect = [&](const char* key, Action action) {
    if (!j.contains(key)) return;
    if (!j[key].is_array()) throw ValidationError(std::string(key) + " must be a list");
    for (const auto& p : j[key]) {
      if (!p.is_string()) throw ValidationError(std::string(key) + " entries must be strings");
      rules.push_back({p.get<std::string>(), action});
    }
  };
  collect("keep_from", Action::kKeepFrom);
  collect("stop_at", Action::kStopAt);
  return SectionRuleSet(std::move(rules));
}

SectionRuleSet SectionRuleSet::defaults() {
  return SectionRuleSet({{"case\\s+(report|presentation|description)", Action::kKeepFrom},
                         {"discussion|conclusions?|references", Action::kStopAt}});
}

bool SectionRuleSet::line_matches(std::string_view line, Action action) const {
  const std::string_view body = heading_body(line);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (rules_[i].action != action) continue;
    if (std::regex_search(body.begin(), body.end(), compiled_[i],
                          std::regex_constants::match_continuous)) {
      return true;
    }
  }
  return false;
}

std::optional<std::string> extract_case_section(std::string_view raw,
                                                const SectionRuleSet& rules) {
  std::optional<std::size_t> keep_at;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    std::size_t end = raw.find('\n', pos);
    if (end == std::string_view::npos) end = raw.size();
    const std::string_view line = raw.substr(pos, end - pos);
    if (!keep_at) {
      if (rules.line_matches(line, SectionRuleSet::Action::kKeepFrom)) keep_at = pos;
    } else if (rules.line_matches(line, SectionRuleSet::Action::kStopAt)) {
      return std::string(raw.substr(*keep_at, pos - *keep_at));
    }
    pos = end + 1;
  }
  if (!keep_at) return std::nullopt;
  return std::string(raw.substr(*keep_at));
}

std::vector<Sentence> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  for (const auto& word : split_whitespace(text)) {
    std::size_t b = 0;
    std::size_t e = word.size();
    while (b < e && is_ascii_punct(word[b])) ++b;
    if (b == e) {
      // Pure punctuation: one token per character.
      for (char c : word) tokens.emplace_back(1, c);
      continue;
    }
    while (e > b && is_ascii_punct(word[e - 1])) --e;
    for (std::size_t i = 0; i < b; ++i) tokens.emplace_back(1, word[i]);
    tokens.push_back(word.substr(b, e - b));
    for (std::size_t i = e; i < word.size(); ++i) tokens.emplace_back(1, word[i]);
  }

  std::vector<Sentence> out;
  Sentence current;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    current.tokens.push_back(Token{tokens[i], BioLabel::outside(), 1.0});
    if (is_terminal(tokens[i]) && i + 1 < tokens.size() && starts_upper(tokens[i + 1])) {
      out.push_back(std::move(current));
      current = Sentence{};
    }
  }
  if (!current.tokens.empty()) out.push_back(std::move(current));
  return out;
}

Corpus keyword_select(const Corpus& corpus, const std::vector<std::string>& keywords) {
  if (keywords.empty()) throw ArgumentError("keyword list is empty");
  std::vector<std::vector<std::string>> phrases;
  for (const auto& k : keywords) {
    auto words = split_whitespace(to_lower(k));
    if (words.empty()) throw ArgumentError("blank keyword");
    phrases.push_back(std::move(words));
  }

  auto matches = [&](const Document& doc) {
    for (const auto& sentence : doc.sentences) {
      std::vector<std::string> lowered;
      lowered.reserve(sentence.tokens.size());
      for (const auto& t : sentence.tokens) lowered.push_back(to_lower(t.surface));
      for (const auto& phrase : phrases) {
        if (phrase.size() > lowered.size()) continue;
        for (std::size_t i = 0; i + phrase.size() <= lowered.size(); ++i) {
          if (std::equal(phrase.begin(), phrase.end(),
                         lowered.begin() + static_cast<std::ptrdiff_t>(i))) {
            return true;
          }
        }
      }
    }
    return false;
  };

  Corpus out;
  for (const auto& doc : corpus) {
    if (matches(doc)) out.push_back(doc);
  }
  return out;
}

const std::vector<std::string>& default_subset_keywords() {
  static const std::vector<std::string> keywords = {
      "homelessness", "housing-insecurity", "low-income", "poverty",
      "black",        "hispanic",           "uninsured",  "abused",
      "bisexual",     "homosexual",         "female"};
  return keywords;
}

std::pair<Corpus, Corpus> random_split(const Corpus& corpus, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ArgumentError("train_fraction must lie in (0,1)");
  }
  if (corpus.empty()) throw ArgumentError("cannot split an empty corpus");

  std::vector<std::size_t> by_id(corpus.size());
  std::iota(by_id.begin(), by_id.end(), 0);
  std::sort(by_id.begin(), by_id.end(),
            [&](std::size_t a, std::size_t b) { return corpus[a].id < corpus[b].id; });

  std::vector<std::size_t> perm = by_id;
  DerivedStream rng(spec.seed, "split", 0);
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.below(i)]);
  }

  const auto n = static_cast<double>(corpus.size());
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * n + 0.5));
  std::vector<bool> in_train(corpus.size(), false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[perm[i]] = true;

  std::pair<Corpus, Corpus> out;
  for (std::size_t idx : by_id) {
    (in_train[idx] ? out.first : out.second).push_back(corpus[idx]);
  }
  return out;
}

}  // namespace sdoh
