#include "sdoh/nli.h"

#include <json.hpp>

#include "sdoh/errors.h"
#include "sdoh/log.h"
#include "sdoh/parallel.h"
#include "sdoh/text.h"

namespace sdoh {

std::string_view verdict_name(NliVerdict v) {
  switch (v) {
    case NliVerdict::kEntailment: return "Entailment";
    case NliVerdict::kContradiction: return "Contradiction";
    case NliVerdict::kNotApplicable: return "Not Applicable";
  }
  return "?";
}

std::string normalize_term(std::string_view text) {
  std::string s = to_lower(text);
  for (char& c : s)
    if (c == '-' || c == '_') c = ' ';
  std::size_t b = 0, e = s.size();
  while (b < e && (is_ascii_punct(s[b]) || is_ascii_space(s[b]))) ++b;
  while (e > b && (is_ascii_punct(s[e - 1]) || is_ascii_space(s[e - 1]))) --e;
  return join(split_whitespace(std::string_view(s).substr(b, e - b)), " ");
}

void validate_statement(const NliStatement& s) {
  const std::string name(entity_type_name(s.type));
  if (s.entail.empty()) throw ValidationError("statement " + name + ": empty entailment set");
  if (s.contra.empty()) throw ValidationError("statement " + name + ": empty contradiction set");
  for (const auto& t : s.entail)
    if (s.contra.count(t))
      throw ValidationError("statement " + name + ": term '" + t + "' is in both sets");
}

StatementSet load_statements(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("statements file: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("statements file: top level must be an object");
  std::map<EntityType, NliStatement> by_type;
  for (const auto& [key, value] : j.items()) {
    std::string name = key;
    for (char& c : name)
      if (c == ' ') c = '_';
    auto type = parse_entity_type(name);
    if (!type) throw ValidationError("statements file: unknown type '" + key + "'");
    if (by_type.count(*type)) throw ValidationError("statements file: type '" + key + "' given twice");
    NliStatement s{*type, {}, {}, {}};
    try {
      s.text = value.at("statement").get<std::string>();
      for (const auto& t : value.at("entailment")) {
        auto n = normalize_term(t.get<std::string>());
        if (!n.empty()) s.entail.insert(n);
      }
      for (const auto& t : value.at("contradiction")) {
        auto n = normalize_term(t.get<std::string>());
        if (!n.empty()) s.contra.insert(n);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("statements file, type " + key + ": " + e.what());
    }
    validate_statement(s);
    by_type.emplace(*type, std::move(s));
  }
  StatementSet out;
  for (EntityType t : all_entity_types()) {
    auto it = by_type.find(t);
    if (it == by_type.end())
      throw ValidationError("statements file: missing type " + std::string(entity_type_name(t)));
    out.push_back(std::move(it->second));
  }
  return out;
}

ThesaurusProvider::ThesaurusProvider(std::string_view json_text) {
  try {
    auto j = nlohmann::json::parse(json_text);
    for (const auto& [key, value] : j.items()) {
      auto& list = table_[normalize_term(key)];
      for (const auto& v : value) list.push_back(v.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("thesaurus: ") + e.what());
  }
}

std::vector<std::string> ThesaurusProvider::synonyms(const std::string& term) const {
  auto it = table_.find(normalize_term(term));
  return it == table_.end() ? std::vector<std::string>{} : it->second;
}

StatementSet expand_synonyms(const StatementSet& statements, const SynonymProvider& provider,
                             std::size_t depth) {
  StatementSet out = statements;
  for (auto& s : out) {
    auto grow = [&](std::set<std::string>& own, const std::set<std::string>& other, const char* side) {
      std::set<std::string> frontier = own;
      for (std::size_t round = 0; round < depth && !frontier.empty(); ++round) {
        std::set<std::string> added;
        for (const auto& term : frontier)
          for (const auto& raw : provider.synonyms(term)) {
            auto n = normalize_term(raw);
            if (n.empty() || own.count(n)) continue;
            if (other.count(n)) {
              log::warn("synonym '" + n + "' of '" + term + "' skipped for " +
                        std::string(entity_type_name(s.type)) + " " + side +
                        ": already in the opposing set");
              continue;
            }
            own.insert(n);
            added.insert(n);
          }
        frontier = std::move(added);
      }
    };
    const auto entail0 = s.entail, contra0 = s.contra;
    std::set<std::string> entail = entail0, contra = contra0;
    grow(entail, contra0, "entailment");
    grow(contra, entail, "contradiction");
    s.entail = std::move(entail);
    s.contra = std::move(contra);
    validate_statement(s);
  }
  return out;
}

namespace {

bool contains_phrase(const std::vector<std::string>& words, const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > words.size()) return false;
  for (std::size_t i = 0; i + phrase.size() <= words.size(); ++i) {
    std::size_t k = 0;
    while (k < phrase.size() && words[i + k] == phrase[k]) ++k;
    if (k == phrase.size()) return true;
  }
  return false;
}

bool any_match(const std::vector<std::string>& words, const std::set<std::string>& terms) {
  for (const auto& t : terms)
    if (contains_phrase(words, split_whitespace(t))) return true;
  return false;
}

}  // namespace

Classification classify_mention(std::string_view mention_text, const NliStatement& statement) {
  auto words = split_whitespace(normalize_term(mention_text));
  bool e = any_match(words, statement.entail);
  bool c = any_match(words, statement.contra);
  Classification out;
  out.verdict = e ? NliVerdict::kEntailment : c ? NliVerdict::kContradiction : NliVerdict::kNotApplicable;
  out.dual_match = e && c;
  return out;
}

namespace {

VerdictRecord make_record(const Mention& m, const NliStatement& s) {
  auto text = m.text();
  auto c = classify_mention(text, s);
  return {m.document_id, m.sentence_index, m.start, m.type, text, s.type, c.verdict, c.dual_match};
}

}  // namespace

std::vector<VerdictRecord> run_restricted(std::span<const Mention> mentions,
                                          const StatementSet& statements, std::size_t threads) {
  std::vector<VerdictRecord> out(mentions.size());
  parallel_for(mentions.size(), threads, [&](std::size_t i) {
    const NliStatement* s = nullptr;
    for (const auto& st : statements)
      if (st.type == mentions[i].type) s = &st;
    if (!s) throw ArgumentError("no statement for type " + std::string(entity_type_name(mentions[i].type)));
    out[i] = make_record(mentions[i], *s);
  });
  return out;
}

std::vector<VerdictRecord> run_full(std::span<const Mention> mentions,
                                    const StatementSet& statements, std::size_t threads) {
  const std::size_t k = statements.size();
  std::vector<VerdictRecord> out(mentions.size() * k);
  parallel_for(mentions.size(), threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = make_record(mentions[i], statements[j]);
  });
  return out;
}

std::vector<NliAggregateRow> aggregate(std::span<const VerdictRecord> verdicts,
                                       const StatementSet& statements) {
  std::vector<NliAggregateRow> rows;
  std::map<EntityType, std::size_t> index;
  for (const auto& s : statements) {
    index[s.type] = rows.size();
    rows.push_back({s.type, s.text, 0, 0, 0, std::nullopt, std::nullopt});
  }
  for (const auto& v : verdicts) {
    auto it = index.find(v.statement_type);
    if (it == index.end()) continue;
    auto& r = rows[it->second];
    switch (v.verdict) {
      case NliVerdict::kEntailment: ++r.n_entail; break;
      case NliVerdict::kContradiction: ++r.n_contra; break;
      case NliVerdict::kNotApplicable: ++r.n_na; break;
    }
  }
  for (auto& r : rows) {
    const std::size_t decided = r.n_entail + r.n_contra;
    if (decided == 0) continue;
    r.pct_entail = 100.0 * double(r.n_entail) / double(decided);
    r.pct_contra = 100.0 * double(r.n_contra) / double(decided);
  }
  return rows;
}

std::string aggregate_csv(std::span<const NliAggregateRow> rows) {
  std::string out = "statement,n_entail,n_contra,n_na,pct_entail,pct_contra\n";
  auto pct = [](const std::optional<double>& v) { return v ? format_fixed(*v, 2) : std::string(); };
  for (const auto& r : rows)
    out += csv_field(r.statement) + "," + std::to_string(r.n_entail) + "," + std::to_string(r.n_contra) +
           "," + std::to_string(r.n_na) + "," + pct(r.pct_entail) + "," + pct(r.pct_contra) + "\n";
  return out;
}

std::string verdicts_csv(std::span<const VerdictRecord> verdicts) {
  std::string out = "document,sentence,start,mention_type,mention,statement_type,verdict,dual_match\n";
  for (const auto& v : verdicts)
    out += csv_field(v.document_id) + "," + std::to_string(v.sentence_index) + "," +
           std::to_string(v.start) + "," + std::string(entity_type_name(v.mention_type)) + "," +
           csv_field(v.mention_text) + "," + std::string(entity_type_name(v.statement_type)) + "," +
           std::string(verdict_name(v.verdict)) + "," + (v.dual_match ? "1" : "0") + "\n";
  return out;
}

}  // namespace sdoh
