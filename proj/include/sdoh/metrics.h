#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdoh/conll.h"
#include "sdoh/tagger.h"

namespace sdoh {

// One-vs-rest token counts per label.
struct ConfusionCounts {
  std::array<std::size_t, kNumLabels> tp{}, fp{}, fn{}, tn{};
  std::size_t total = 0;

  // Labels that occur in gold or prediction.
  std::vector<BioLabel> present_labels() const;
};

// Throws AlignmentError on a length mismatch.
ConfusionCounts confusion(std::span<const BioLabel> gold, std::span<const BioLabel> pred);

struct ClassMetrics {
  BioLabel label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold tokens
};

// 0/0 is taken as 0 throughout.
ClassMetrics class_metrics(BioLabel label, std::size_t tp, std::size_t fp, std::size_t fn);
double f1_score(double precision, double recall);

// Metrics for every label in counts.present_labels().
std::vector<ClassMetrics> prf1(const ConfusionCounts& counts);

// Unweighted mean of F1; throws ArgumentError when no class is left.
double macro_f1(std::span<const ClassMetrics> classes, bool include_o);

// Mann-Whitney AUC of `scores` with ties counted 0.5. Both classes must be
// non-empty (ArgumentError otherwise).
double binary_auc(std::span<const double> scores, std::span<const bool> positive);

struct AucResult {
  double macro = 0.0;
  std::vector<std::pair<BioLabel, double>> per_class;  // OVR only
  std::vector<BioLabel> skipped;                       // degenerate classes
};

// Classes default to the labels present in gold. Classes without positives
// or without negatives are skipped with a warning; DataError when none remain.
AucResult auc_ovr(std::span<const ScoreVector> scores, std::span<const BioLabel> gold,
                  std::span<const BioLabel> classes = {});
// Hand-and-Till: mean over class pairs present in gold of
// (AUC(i vs j on score_i) + AUC(j vs i on score_j)) / 2. DataError with fewer
// than two classes.
AucResult auc_ovo(std::span<const ScoreVector> scores, std::span<const BioLabel> gold);

struct SpanCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision() const;
  double recall() const;
  double f1() const;
};

// Exact (sentence, start, length, type) matches; prediction is BIO-repaired first.
SpanCounts span_counts(const Corpus& gold, const Corpus& pred);

struct MetricsReport {
  std::size_t token_count = 0;
  double accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
  double macro_f1_all = 0.0;
  std::optional<double> macro_f1_excl_o;  // absent when only O occurs
  std::optional<AucResult> auc_ovr;
  std::optional<AucResult> auc_ovo;
  SpanCounts spans;
};

// Flattened per-token labels; throws AlignmentError when documents,
// sentences, token counts or surfaces differ.
void check_aligned(const Corpus& gold, const Corpus& pred);
std::vector<BioLabel> flatten_labels(const Corpus& corpus);

// Score rows per token in corpus order; when absent, AUCs are computed from
// confidences (predicted label gets the confidence, the remainder is spread
// evenly over the other labels).
MetricsReport report(const Corpus& gold, const Corpus& pred,
                     std::optional<std::vector<ScoreVector>> scores = std::nullopt);

std::vector<ScoreVector> scores_from_confidence(const Corpus& pred);
std::vector<ScoreVector> parse_score_matrix_csv(std::string_view csv);

std::string metrics_json(const MetricsReport& r);
// class,precision,recall,f1
std::string per_class_csv(const MetricsReport& r);

}  // namespace sdoh
