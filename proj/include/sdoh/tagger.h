#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sdoh/augment.h"
#include "sdoh/conll.h"

namespace sdoh {

// One score per label in canonical order (see BioLabel::index()).
using ScoreVector = std::array<double, kNumLabels>;

// Softmax; the result sums to 1.
ScoreVector normalize_scores(const ScoreVector& raw);

struct TransitionScores {
  std::array<double, kNumLabels> start{};
  std::array<std::array<double, kNumLabels>, kNumLabels> next{};  // [from][to]

  friend bool operator==(const TransitionScores&, const TransitionScores&) = default;
};

// Maximizes the sum of token and transition scores over BIO-valid paths.
// Invalid moves are excluded regardless of `transitions`. Ties go to the
// lower label index. Throws ArgumentError on an empty lattice.
std::vector<BioLabel> decode_viterbi(std::span<const ScoreVector> lattice,
                                     const TransitionScores& transitions);

// Total score of a path (token scores + transitions); used by tests.
double path_score(std::span<const ScoreVector> lattice, const TransitionScores& transitions,
                  std::span<const BioLabel> path);

struct TokenPrediction {
  BioLabel label;
  double confidence = 1.0;
  ScoreVector scores{};  // normalized
};

class Tagger {
 public:
  virtual ~Tagger() = default;
  // Predicts one window; the output is BIO-valid.
  virtual std::vector<TokenPrediction> predict(std::span<const Token> tokens) const = 0;
  virtual std::string kind() const = 0;
};

// Tags a document window by window (see segment_windows).
std::vector<TokenPrediction> tag(const Tagger& tagger, const Document& doc,
                                 std::size_t max_tokens = kDefaultWindowTokens);

// Per-document predictions; identical for any thread count.
std::vector<std::vector<TokenPrediction>> tag_corpus(const Tagger& tagger, const Corpus& corpus,
                                                     std::size_t threads = 1,
                                                     std::size_t max_tokens = kDefaultWindowTokens);

// Copy of `doc` with predicted labels and confidences.
Document apply_predictions(const Document& doc, std::span<const TokenPrediction> predictions);

// ---------------------------------------------------------------------------
// Gazetteer
// ---------------------------------------------------------------------------

// Labels a token whose lowercased surface is listed under exactly one label.
class GazetteerTagger : public Tagger {
 public:
  explicit GazetteerTagger(const VariationLexicon& lexicon);

  std::vector<TokenPrediction> predict(std::span<const Token> tokens) const override;
  std::string kind() const override { return "gazetteer"; }

  std::size_t vocabulary_size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, BioLabel> entries_;
};

GazetteerTagger train_gazetteer(const VariationLexicon& lexicon);
// `{"kind": "gazetteer", "lexicon": {...}}`, loadable by load_tagger.
std::string save_gazetteer(const VariationLexicon& lexicon);

// ---------------------------------------------------------------------------
// Linear (averaged structured perceptron) tagger
// ---------------------------------------------------------------------------

struct LinearTaggerModel {
  std::uint64_t feature_salt = 0x5d0a11ULL;
  std::unordered_map<std::uint64_t, ScoreVector> weights;  // feature hash -> per label
  TransitionScores transitions;
  std::array<double, kNumLabels> class_weights{};

  friend bool operator==(const LinearTaggerModel&, const LinearTaggerModel&) = default;
};

struct LinearTrainOptions {
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  // Per label, default 1.0 everywhere.
  std::array<double, kNumLabels> class_weights = [] {
    std::array<double, kNumLabels> w{};
    w.fill(1.0);
    return w;
  }();
  // Optional per-sentence multiplier over the corpus' sentences in document
  // order; empty means 1.0 for all.
  std::vector<double> sample_weights;
  std::uint64_t feature_salt = 0x5d0a11ULL;
};

LinearTaggerModel train_linear(const Corpus& corpus, const LinearTrainOptions& options);

// Hashed feature ids of token `i` in `tokens`.
std::vector<std::uint64_t> token_features(std::span<const Token> tokens, std::size_t i,
                                          std::uint64_t salt);
std::string word_shape(std::string_view word);

class LinearTagger : public Tagger {
 public:
  explicit LinearTagger(LinearTaggerModel model) : model_(std::move(model)) {}

  std::vector<TokenPrediction> predict(std::span<const Token> tokens) const override;
  std::string kind() const override { return "linear"; }
  const LinearTaggerModel& model() const { return model_; }

 private:
  LinearTaggerModel model_;
};

// JSON weight dump with the label order and feature salt embedded.
std::string save_linear_model(const LinearTaggerModel& model);
LinearTaggerModel load_linear_model(std::string_view json_text);

// Tagger persisted by the CLI: either a gazetteer lexicon or a linear model.
std::unique_ptr<Tagger> load_tagger(std::string_view json_text);

// `token_index,<53 label columns>` with normalized scores.
std::string score_matrix_csv(std::span<const TokenPrediction> predictions);

}  // namespace sdoh
