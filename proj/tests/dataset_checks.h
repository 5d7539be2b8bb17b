#pragma once

// Checks that need the released corpus (a CoNLL file named by the
// SDOH_RELEASED_CORPUS environment variable, e.g. the corpus.conll written by
// `sdoh-miner fetch --adapter ...`).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>

#include "sdoh/analytics.h"
#include "sdoh/conll.h"
#include "sdoh/nli.h"
#include "sdoh/text.h"

namespace sdoh::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

inline void print_line(const char* status, const std::string& name, const std::string& detail) {
  std::printf("%-7s %s: %s\n", status, name.c_str(), detail.c_str());
  std::fflush(stdout);
}

inline const char* kCorpusCriterion = "released-corpus reproduction";
inline const char* kNliCriterion = "NLI reproduction (synonyms off)";

inline std::optional<std::string> released_corpus_path() {
  const char* p = std::getenv("SDOH_RELEASED_CORPUS");
  if (!p || !*p) return std::nullopt;
  return std::string(p);
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline Outcome check_released_corpus(const Corpus& corpus, double load_seconds) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o{true, ""};
  auto expect = [&](bool ok, const std::string& what) {
    o.pass = o.pass && ok;
    o.detail += (o.detail.empty() ? "" : "; ") + what + (ok ? "" : " [out of range]");
  };
  auto dist = mention_type_distribution(corpus);
  auto pct_of = [&](const char* label) {
    for (const auto& e : dist.entries)
      if (e.label == label) return e.pct;
    return -1.0;
  };
  expect(std::abs(pct_of("Condition") - 37.27) <= 0.5, "Condition " + fmt(pct_of("Condition")) + "%");
  expect(std::abs(pct_of("Age") - 10.11) <= 0.5, "Age " + fmt(pct_of("Age")) + "%");

  auto hist = entity_richness(corpus);
  std::size_t mode = 0;
  for (std::size_t r = 1; r < hist.size(); ++r)
    if (hist[r] > hist[mode]) mode = r;
  expect(mode == 19, "richness mode " + std::to_string(mode));

  auto tri = trigram_frequencies(corpus, 25);
  const std::array<EntityType, 3> want{EntityType::kAge, EntityType::kGender, EntityType::kCondition};
  const bool top_ok = !tri.empty() && tri[0].types == want && std::abs(tri[0].pct - 0.72) <= 0.2;
  std::string top = "none";
  if (!tri.empty())
    top = std::string(entity_type_name(tri[0].types[0])) + "," + std::string(entity_type_name(tri[0].types[1])) +
          "," + std::string(entity_type_name(tri[0].types[2])) + " " + fmt(tri[0].pct) + "%";
  expect(top_ok, "top trigram " + top);

  const double mentions = static_cast<double>(dist.total);
  expect(std::abs(mentions - 1369863.0) <= 0.01 * 1369863.0, "mentions " + std::to_string(dist.total));

  const double seconds =
      load_seconds + std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  expect(seconds < 300.0, "runtime " + fmt(seconds) + " s");
  return o;
}

inline Outcome check_released_nli(const Corpus& corpus, const StatementSet& statements) {
  auto mentions = corpus_mentions(corpus);
  auto rows = aggregate(run_restricted(mentions, statements, 4), statements);
  Outcome o{true, ""};
  auto expect = [&](bool ok, const std::string& what) {
    o.pass = o.pass && ok;
    o.detail += (o.detail.empty() ? "" : "; ") + what + (ok ? "" : " [out of range]");
  };
  auto row = [&](EntityType t) -> const NliAggregateRow& {
    for (const auto& r : rows)
      if (r.type == t) return r;
    throw std::logic_error("missing statement row");
  };
  auto check = [&](EntityType t, bool entail, double target) {
    const auto& r = row(t);
    const auto& v = entail ? r.pct_entail : r.pct_contra;
    const std::string name = std::string(entity_type_name(t)) + (entail ? " entail " : " contra ");
    if (!v) {
      expect(false, name + "undefined");
      return;
    }
    expect(std::abs(*v - target) <= 10.0, name + fmt(*v) + "%");
  };
  check(EntityType::kViolenceOrAbuse, true, 82.4);
  check(EntityType::kInsuranceStatus, true, 80.3);
  check(EntityType::kGender, false, 98.5);
  bool identity = true;
  for (const auto& r : rows)
    if (r.pct_entail && std::abs(*r.pct_entail + *r.pct_contra - 100.0) > 1e-9) identity = false;
  expect(identity, "pct_entail + pct_contra = 100");
  return o;
}

// Prints one line per dataset criterion; returns false when the corpus is
// absent (lines marked BLOCKED) and sets `all_pass` otherwise.
inline bool run_dataset_criteria(bool& all_pass) {
  auto path = released_corpus_path();
  if (!path) {
    const std::string why = "SDOH_RELEASED_CORPUS not set; the hosted corpus could not be fetched";
    print_line("BLOCKED", kCorpusCriterion, why);
    print_line("BLOCKED", kNliCriterion, why);
    return false;
  }
  const auto start = std::chrono::steady_clock::now();
  Corpus corpus = parse_conll(read_file(*path));
  const double load = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  all_pass = true;
  auto a = check_released_corpus(corpus, load);
  print_line(a.pass ? "PASS" : "FAIL", kCorpusCriterion, a.detail);
  auto statements = load_statements(read_file(std::string(SDOH_DATA_DIR) + "/statements.json"));
  auto b = check_released_nli(corpus, statements);
  print_line(b.pass ? "PASS" : "FAIL", kNliCriterion, b.detail);
  all_pass = a.pass && b.pass;
  return true;
}

}  // namespace sdoh::acceptance
