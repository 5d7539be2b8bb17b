#include "sdoh/analytics.h"

#include <algorithm>

#include <json.hpp>

#include "sdoh/errors.h"
#include "sdoh/text.h"

namespace sdoh {
namespace {

double pct(std::size_t n, std::size_t total) {
  return total == 0 ? 0.0 : 100.0 * double(n) / double(total);
}

void require_nonempty(const Corpus& corpus, const char* what) {
  if (corpus_token_count(corpus) == 0) throw DataError(std::string(what) + ": empty corpus");
}

}  // namespace

Distribution token_label_distribution(const Corpus& corpus) {
  require_nonempty(corpus, "token_label_distribution");
  std::array<std::size_t, kNumEntityTypes> per_type{};
  std::size_t o = 0, total = 0;
  for (const auto& d : corpus)
    for (const auto& s : d.sentences)
      for (const auto& t : s.tokens) {
        ++total;
        if (t.label.is_outside())
          ++o;
        else
          ++per_type[type_index(t.label.type())];
      }
  Distribution out{Denominator::kAllTokens, total, {}};
  out.entries.push_back({"O", o, pct(o, total)});
  for (EntityType t : all_entity_types())
    out.entries.push_back({std::string(entity_type_name(t)), per_type[type_index(t)],
                           pct(per_type[type_index(t)], total)});
  return out;
}

Distribution mention_type_distribution(const Corpus& corpus) {
  require_nonempty(corpus, "mention_type_distribution");
  std::array<std::size_t, kNumEntityTypes> per_type{};
  auto mentions = corpus_mentions(corpus);
  for (const auto& m : mentions) ++per_type[type_index(m.type)];
  Distribution out{Denominator::kNonOMentions, mentions.size(), {}};
  for (EntityType t : all_entity_types())
    out.entries.push_back({std::string(entity_type_name(t)), per_type[type_index(t)],
                           pct(per_type[type_index(t)], mentions.size())});
  return out;
}

std::vector<std::size_t> document_richness(const Corpus& corpus) {
  std::vector<std::size_t> out;
  for (const auto& d : corpus) {
    std::array<bool, kNumEntityTypes> seen{};
    for (const auto& s : d.sentences)
      for (const auto& m : mention_spans(s)) seen[type_index(m.type)] = true;
    out.push_back(static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true)));
  }
  return out;
}

std::array<std::size_t, kNumEntityTypes + 1> entity_richness(const Corpus& corpus) {
  std::array<std::size_t, kNumEntityTypes + 1> hist{};
  for (auto r : document_richness(corpus)) ++hist[r];
  return hist;
}

std::vector<TrigramStat> trigram_frequencies(const Corpus& corpus, std::size_t top_k) {
  if (top_k == 0) throw ArgumentError("trigram_frequencies: top_k must be at least 1");
  auto mentions = corpus_mentions(corpus);
  std::array<std::size_t, kNumEntityTypes> freq{};
  for (const auto& m : mentions) ++freq[type_index(m.type)];
  std::vector<std::size_t> order(kNumEntityTypes);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return freq[a] > freq[b]; });
  std::array<bool, kNumEntityTypes> keep{};
  for (std::size_t i = 0; i < std::min(top_k, order.size()); ++i) keep[order[i]] = true;

  std::map<std::array<EntityType, 3>, std::size_t> counts;
  std::size_t total = 0;
  std::size_t i = 0;
  while (i < mentions.size()) {
    std::size_t j = i;
    std::vector<EntityType> seq;
    while (j < mentions.size() && mentions[j].document_id == mentions[i].document_id) {
      if (keep[type_index(mentions[j].type)]) seq.push_back(mentions[j].type);
      ++j;
    }
    for (std::size_t k = 0; k + 2 < seq.size(); ++k) {
      ++counts[{seq[k], seq[k + 1], seq[k + 2]}];
      ++total;
    }
    i = j;
  }
  std::vector<TrigramStat> out;
  for (const auto& [types, n] : counts) out.push_back({types, n, pct(n, total)});
  std::stable_sort(out.begin(), out.end(), [](const TrigramStat& a, const TrigramStat& b) { return a.count > b.count; });
  return out;
}

ExtractionTotals extraction_totals(const Corpus& corpus) {
  ExtractionTotals t;
  for (const auto& d : corpus) {
    auto& p = t.by_provenance[std::string(provenance_name(d.provenance))];
    ++t.documents;
    ++p.documents;
    for (const auto& s : d.sentences) {
      std::size_t m = mention_spans(s).size();
      t.mentions += m;
      p.mentions += m;
      for (const auto& tok : s.tokens) {
        ++t.tokens;
        if (tok.label.is_outside()) {
          ++t.o_tokens;
          ++p.o_tokens;
        }
      }
    }
  }
  return t;
}

std::string distribution_csv(const Distribution& d) {
  std::string out = "label,count,pct\n";
  for (const auto& e : d.entries)
    out += csv_field(e.label) + "," + std::to_string(e.count) + "," + format_fixed(e.pct, 4) + "\n";
  return out;
}

std::string richness_csv(const std::array<std::size_t, kNumEntityTypes + 1>& histogram) {
  std::size_t total = 0;
  for (auto n : histogram) total += n;
  std::string out = "richness,count,pct\n";
  for (std::size_t r = 0; r < histogram.size(); ++r)
    out += std::to_string(r) + "," + std::to_string(histogram[r]) + "," + format_fixed(pct(histogram[r], total), 4) + "\n";
  return out;
}

std::string trigrams_csv(const std::vector<TrigramStat>& trigrams) {
  std::string out = "label,count,pct\n";
  for (const auto& t : trigrams) {
    std::string label = std::string(entity_type_name(t.types[0])) + "," +
                        std::string(entity_type_name(t.types[1])) + "," +
                        std::string(entity_type_name(t.types[2]));
    out += csv_field(label) + "," + std::to_string(t.count) + "," + format_fixed(t.pct, 4) + "\n";
  }
  return out;
}

std::string totals_json(const ExtractionTotals& totals) {
  nlohmann::json j;
  j["documents"] = totals.documents;
  j["tokens"] = totals.tokens;
  j["mentions"] = totals.mentions;
  j["o_tokens"] = totals.o_tokens;
  nlohmann::json by = nlohmann::json::object();
  for (const auto& [name, p] : totals.by_provenance)
    by[name] = {{"documents", p.documents}, {"mentions", p.mentions}, {"o_tokens", p.o_tokens}};
  j["by_provenance"] = by;
  return j.dump(2) + "\n";
}

}  // namespace sdoh
