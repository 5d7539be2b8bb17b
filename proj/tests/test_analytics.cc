#include <doctest.h>

#include <numeric>
#include <random>

#include "sdoh/analytics.h"
#include "sdoh/errors.h"
#include "support.h"

using namespace sdoh;
using sdoh::testing::make_sentence;

namespace {

Document doc(const std::string& id, std::vector<Sentence> sentences,
             Provenance p = Provenance::kFullCorpus) {
  return {id, std::move(sentences), p};
}

// One single-token mention per type, separated by O tokens.
Sentence mentions_of(const std::vector<std::string>& types) {
  std::vector<std::pair<std::string, std::string>> toks;
  for (const auto& t : types) {
    toks.push_back({"x", "B-" + t});
    toks.push_back({"and", "O"});
  }
  return make_sentence(toks);
}

const DistributionEntry& entry(const Distribution& d, const std::string& label) {
  for (const auto& e : d.entries)
    if (e.label == label) return e;
  throw std::logic_error("no entry " + label);
}

}  // namespace

TEST_CASE("token label distribution") {
  std::vector<std::pair<std::string, std::string>> toks(10, {"w", "O"});
  toks[3] = {"72", "B-Age"};
  toks[4] = {"years", "I-Age"};
  Corpus c{doc("a", {make_sentence(toks)})};
  auto d = token_label_distribution(c);
  CHECK(d.total == 10);
  CHECK(d.entries.size() == kNumEntityTypes + 1);
  CHECK(d.entries[0].label == "O");
  CHECK(entry(d, "Age").pct == doctest::Approx(20.0));
  CHECK(entry(d, "O").pct == doctest::Approx(80.0));

  Corpus all_o{doc("a", {make_sentence({{"a", "O"}, {"b", "O"}})})};
  auto o = token_label_distribution(all_o);
  CHECK(entry(o, "O").pct == 100.0);
  CHECK(entry(o, "Diet").count == 0);
  auto m = mention_type_distribution(all_o);
  CHECK(m.total == 0);
  for (const auto& e : m.entries) CHECK(e.pct == 0.0);

  CHECK_THROWS_AS(token_label_distribution(Corpus{}), DataError);
  CHECK_THROWS_AS(mention_type_distribution(Corpus{doc("e", {})}), DataError);
}

TEST_CASE("mention distribution") {
  Corpus one{doc("a", {make_sentence({{"a", "O"}, {"housing", "B-Housing"}})})};
  auto d = mention_type_distribution(one);
  CHECK(d.entries.size() == kNumEntityTypes);
  CHECK(entry(d, "Housing").pct == 100.0);
}

TEST_CASE("percentages sum to 100") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 100; ++i) {
    Corpus c;
    for (int k = 0; k < 3; ++k) c.push_back(doc("d" + std::to_string(k), {sdoh::testing::random_valid_sentence(rng, 1 + rng() % 30)}));
    auto t = token_label_distribution(c);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& e : t.entries) {
      sum += e.pct;
      n += e.count;
    }
    CHECK(n == t.total);
    CHECK(sum == doctest::Approx(100.0));
    auto m = mention_type_distribution(c);
    if (m.total == 0) continue;
    double msum = 0.0;
    for (const auto& e : m.entries) msum += e.pct;
    CHECK(msum == doctest::Approx(100.0));
  }
}

TEST_CASE("entity richness") {
  Corpus c{doc("a", {mentions_of({"Age", "Gender", "Age"})}), doc("b", {mentions_of({})}),
           doc("c", {mentions_of({"Diet"}), mentions_of({"Housing", "Income"})})};
  CHECK(document_richness(c) == std::vector<std::size_t>{2, 0, 3});
  auto h = entity_richness(c);
  CHECK(h[0] == 1);
  CHECK(h[2] == 1);
  CHECK(h[3] == 1);
  CHECK(std::accumulate(h.begin(), h.end(), std::size_t{0}) == 3);
  CHECK(richness_csv(h).rfind("richness,count,pct\n0,1,33.3333\n1,0,0.0000\n", 0) == 0);
}

TEST_CASE("trigram frequencies") {
  Corpus c{doc("a", {mentions_of({"Age", "Gender", "Condition", "Gender"})})};
  auto t = trigram_frequencies(c, 25);
  REQUIRE(t.size() == 2);
  for (const auto& x : t) {
    CHECK(x.count == 1);
    CHECK(x.pct == 50.0);
  }
  CHECK(t[0].types == std::array<EntityType, 3>{EntityType::kAge, EntityType::kGender, EntityType::kCondition});
  CHECK(trigrams_csv(t) == "label,count,pct\n\"Age,Gender,Condition\",1,50.0000\n\"Gender,Condition,Gender\",1,50.0000\n");
  CHECK_THROWS_AS(trigram_frequencies(c, 0), ArgumentError);

  // Gender occurs twice, so top 1 keeps only it and no triple remains.
  CHECK(trigram_frequencies(c, 1).empty());
  Corpus split{doc("a", {mentions_of({"Age", "Gender"})}), doc("b", {mentions_of({"Condition"})})};
  CHECK(trigram_frequencies(split).empty());
}

TEST_CASE("trigram count equals mentions minus two per document") {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 100; ++i) {
    Corpus c;
    std::size_t expected = 0;
    for (int k = 0; k < 4; ++k) {
      std::vector<Sentence> ss;
      std::size_t m = 0;
      for (std::size_t s = 0; s < 1 + rng() % 3; ++s) {
        ss.push_back(sdoh::testing::random_valid_sentence(rng, rng() % 20));
        m += mention_spans(ss.back()).size();
      }
      expected += m >= 2 ? m - 2 : 0;
      c.push_back(doc("d" + std::to_string(k), std::move(ss)));
    }
    auto t = trigram_frequencies(c, kNumEntityTypes);
    std::size_t total = 0;
    double pct = 0.0;
    for (const auto& x : t) {
      total += x.count;
      pct += x.pct;
    }
    CHECK(total == expected);
    if (total > 0) CHECK(pct == doctest::Approx(100.0));
    for (std::size_t j = 1; j < t.size(); ++j) CHECK(t[j - 1].count >= t[j].count);
  }
}

TEST_CASE("extraction totals") {
  auto z = extraction_totals(Corpus{});
  CHECK(z.documents == 0);
  CHECK(z.tokens == 0);
  CHECK(z.mentions == 0);
  CHECK(z.by_provenance.empty());

  Corpus c{doc("a", {mentions_of({"Age", "Gender"})}, Provenance::kSubset1),
           doc("b", {mentions_of({"Diet"})}, Provenance::kSyntheticHost)};
  auto t = extraction_totals(c);
  CHECK(t.documents == 2);
  CHECK(t.tokens == 6);
  CHECK(t.mentions == 3);
  CHECK(t.o_tokens == 3);
  CHECK(t.by_provenance.size() == 2);
  std::size_t docs = 0, mentions = 0;
  for (const auto& [_, p] : t.by_provenance) {
    docs += p.documents;
    mentions += p.mentions;
  }
  CHECK(docs == 2);
  CHECK(mentions == 3);
  CHECK(totals_json(t).find("\"mentions\": 3") != std::string::npos);
}
