#include "sdoh/tagger.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

#include "sdoh/errors.h"
#include "sdoh/log.h"
#include "sdoh/parallel.h"
#include "sdoh/rng.h"
#include "sdoh/text.h"

namespace sdoh {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool start_allowed(std::size_t label) { return bio_transition_allowed(std::nullopt, BioLabel::from_index(label)); }

const std::array<std::array<bool, kNumLabels>, kNumLabels>& allowed_table() {
  static const auto table = [] {
    std::array<std::array<bool, kNumLabels>, kNumLabels> t{};
    for (std::size_t a = 0; a < kNumLabels; ++a)
      for (std::size_t b = 0; b < kNumLabels; ++b)
        t[a][b] = bio_transition_allowed(BioLabel::from_index(a), BioLabel::from_index(b));
    return t;
  }();
  return table;
}

}  // namespace

ScoreVector normalize_scores(const ScoreVector& raw) {
  double top = *std::max_element(raw.begin(), raw.end());
  ScoreVector out{};
  double total = 0.0;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    out[i] = std::exp(raw[i] - top);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

std::vector<BioLabel> decode_viterbi(std::span<const ScoreVector> lattice,
                                     const TransitionScores& transitions) {
  if (lattice.empty()) throw ArgumentError("decode_viterbi: empty lattice");
  const auto& allowed = allowed_table();
  const std::size_t n = lattice.size();
  std::vector<std::array<double, kNumLabels>> best(n);
  std::vector<std::array<std::uint8_t, kNumLabels>> back(n);
  for (std::size_t l = 0; l < kNumLabels; ++l)
    best[0][l] = start_allowed(l) ? lattice[0][l] + transitions.start[l] : kNegInf;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t l = 0; l < kNumLabels; ++l) {
      double top = kNegInf;
      std::size_t arg = 0;
      for (std::size_t p = 0; p < kNumLabels; ++p) {
        if (!allowed[p][l] || best[i - 1][p] == kNegInf) continue;
        double s = best[i - 1][p] + transitions.next[p][l];
        if (s > top) {
          top = s;
          arg = p;
        }
      }
      best[i][l] = top == kNegInf ? kNegInf : top + lattice[i][l];
      back[i][l] = static_cast<std::uint8_t>(arg);
    }
  }
  std::size_t last = 0;
  for (std::size_t l = 1; l < kNumLabels; ++l)
    if (best[n - 1][l] > best[n - 1][last]) last = l;
  std::vector<BioLabel> path(n, BioLabel::outside());
  for (std::size_t i = n; i-- > 0;) {
    path[i] = BioLabel::from_index(last);
    if (i > 0) last = back[i][last];
  }
  return path;
}

double path_score(std::span<const ScoreVector> lattice, const TransitionScores& transitions,
                  std::span<const BioLabel> path) {
  double s = 0.0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    std::size_t l = path[i].index();
    s += lattice[i][l];
    s += i == 0 ? transitions.start[l] : transitions.next[path[i - 1].index()][l];
  }
  return s;
}

std::vector<TokenPrediction> tag(const Tagger& tagger, const Document& doc,
                                 std::size_t max_tokens) {
  std::set<std::size_t> sentence_starts;
  std::size_t offset = 0;
  for (const auto& s : doc.sentences) {
    sentence_starts.insert(offset);
    offset += s.tokens.size();
  }
  std::vector<TokenPrediction> out;
  out.reserve(offset);
  for (const Window& w : segment_windows(doc, max_tokens)) {
    std::span<const Token> tokens(w.tokens);
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= tokens.size(); ++i) {
      if (i < tokens.size() && !sentence_starts.count(w.offset + i)) continue;
      auto piece = tagger.predict(tokens.subspan(begin, i - begin));
      if (piece.size() != i - begin)
        throw DataError("tagger " + tagger.kind() + " returned a wrong number of predictions");
      out.insert(out.end(), piece.begin(), piece.end());
      begin = i;
    }
  }
  return out;
}

std::vector<std::vector<TokenPrediction>> tag_corpus(const Tagger& tagger, const Corpus& corpus,
                                                     std::size_t threads,
                                                     std::size_t max_tokens) {
  std::vector<std::vector<TokenPrediction>> out(corpus.size());
  parallel_for(corpus.size(), threads,
               [&](std::size_t i) { out[i] = tag(tagger, corpus[i], max_tokens); });
  return out;
}

Document apply_predictions(const Document& doc, std::span<const TokenPrediction> predictions) {
  if (predictions.size() != doc.token_count())
    throw AlignmentError("document " + doc.id + ": " + std::to_string(predictions.size()) +
                         " predictions for " + std::to_string(doc.token_count()) + " tokens");
  Document out = doc;
  std::size_t k = 0;
  for (auto& s : out.sentences)
    for (auto& t : s.tokens) {
      t.label = predictions[k].label;
      t.confidence = predictions[k].confidence;
      ++k;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Gazetteer

GazetteerTagger::GazetteerTagger(const VariationLexicon& lexicon) {
  std::map<std::string, std::set<BioLabel>> seen;
  for (const auto& [label, words] : lexicon) {
    if (label.is_outside()) continue;
    for (const auto& w : words) seen[to_lower(w)].insert(label);
  }
  std::size_t ambiguous = 0;
  for (const auto& [word, labels] : seen) {
    if (labels.size() == 1)
      entries_.emplace(word, *labels.begin());
    else
      ++ambiguous;
  }
  if (ambiguous > 0)
    log::info("gazetteer: " + std::to_string(ambiguous) + " surfaces listed under several labels are left untagged");
}

std::vector<TokenPrediction> GazetteerTagger::predict(std::span<const Token> tokens) const {
  std::vector<ScoreVector> lattice(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto it = entries_.find(to_lower(tokens[i].surface));
    lattice[i][it == entries_.end() ? 0 : it->second.index()] = 1.0;
  }
  std::vector<TokenPrediction> out;
  if (tokens.empty()) return out;
  auto path = decode_viterbi(lattice, TransitionScores{});
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i)
    out.push_back({path[i], lattice[i][path[i].index()], lattice[i]});
  return out;
}

GazetteerTagger train_gazetteer(const VariationLexicon& lexicon) { return GazetteerTagger(lexicon); }

std::string save_gazetteer(const VariationLexicon& lexicon) {
  nlohmann::json lex = nlohmann::json::object();
  for (const auto& [label, words] : lexicon) lex[label.str()] = words;
  nlohmann::json j;
  j["format"] = "sdoh-tagger";
  j["kind"] = "gazetteer";
  j["version"] = 1;
  j["lexicon"] = std::move(lex);
  return j.dump() + "\n";
}

// ---------------------------------------------------------------------------
// Linear tagger

std::string word_shape(std::string_view word) {
  std::string out;
  for (char c : word) {
    char k = c >= 'A' && c <= 'Z' ? 'X' : c >= 'a' && c <= 'z' ? 'x' : c >= '0' && c <= '9' ? 'd' : c;
    if (out.empty() || out.back() != k) out.push_back(k);
  }
  return out;
}

std::vector<std::uint64_t> token_features(std::span<const Token> tokens, std::size_t i,
                                          std::uint64_t salt) {
  const std::uint64_t basis = splitmix64(salt);
  const std::string w = to_lower(tokens[i].surface);
  std::vector<std::string> names = {
      "bias",
      "w=" + w,
      "shape=" + word_shape(tokens[i].surface),
      "p3=" + w.substr(0, 3),
      "s3=" + (w.size() > 3 ? w.substr(w.size() - 3) : w),
      "pw=" + (i > 0 ? to_lower(tokens[i - 1].surface) : std::string("<s>")),
      "nw=" + (i + 1 < tokens.size() ? to_lower(tokens[i + 1].surface) : std::string("</s>")),
      std::string("num=") + (is_numeric_surface(w) ? "1" : "0"),
  };
  std::vector<std::uint64_t> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(fnv1a64(n, basis));
  return out;
}

namespace {

using FeatureRows = std::vector<std::vector<std::uint64_t>>;

FeatureRows sentence_features(std::span<const Token> tokens, std::uint64_t salt) {
  FeatureRows rows(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) rows[i] = token_features(tokens, i, salt);
  return rows;
}

std::vector<ScoreVector> emissions(const std::unordered_map<std::uint64_t, ScoreVector>& weights,
                                   const FeatureRows& rows) {
  std::vector<ScoreVector> lattice(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (auto f : rows[i]) {
      auto it = weights.find(f);
      if (it == weights.end()) continue;
      for (std::size_t l = 0; l < kNumLabels; ++l) lattice[i][l] += it->second[l];
    }
  return lattice;
}

// Averaged perceptron bookkeeping: `total` holds the sum of c * delta.
struct Averaged {
  std::unordered_map<std::uint64_t, ScoreVector> w, total;
  TransitionScores t, t_total;

  void add_feature(std::uint64_t f, std::size_t l, double delta, double c) {
    w[f][l] += delta;
    total[f][l] += c * delta;
  }
  void add_start(std::size_t l, double delta, double c) {
    t.start[l] += delta;
    t_total.start[l] += c * delta;
  }
  void add_next(std::size_t a, std::size_t b, double delta, double c) {
    t.next[a][b] += delta;
    t_total.next[a][b] += c * delta;
  }
};

}  // namespace

LinearTaggerModel train_linear(const Corpus& corpus, const LinearTrainOptions& options) {
  struct Instance {
    FeatureRows rows;
    std::vector<std::size_t> gold;
    double weight;
  };
  std::vector<Instance> instances;
  std::size_t sentence_no = 0;
  for (const auto& doc : corpus)
    for (const auto& s : doc.sentences) {
      double weight = 1.0;
      if (!options.sample_weights.empty()) {
        if (sentence_no >= options.sample_weights.size())
          throw ArgumentError("train_linear: fewer sample weights than sentences");
        weight = options.sample_weights[sentence_no];
      }
      ++sentence_no;
      if (s.tokens.empty()) continue;
      if (!validate_bio(s).empty())
        throw InvalidSchemeError("train_linear: training sentence in document " + doc.id +
                                 " is not BIO-valid");
      Instance inst{sentence_features(s.tokens, options.feature_salt), {}, weight};
      for (const auto& t : s.tokens) inst.gold.push_back(t.label.index());
      instances.push_back(std::move(inst));
    }
  if (!options.sample_weights.empty() && sentence_no != options.sample_weights.size())
    throw ArgumentError("train_linear: sample weight count does not match sentence count");

  if (instances.empty()) throw DataError("train_linear: corpus has no tokens");
  if (options.epochs == 0) throw ArgumentError("train_linear: epochs must be at least 1");

  Averaged avg;
  double c = 1.0;
  std::vector<std::size_t> order(instances.size());
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    DerivedStream rng(options.seed, "train/shuffle", epoch);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t idx : order) {
      const Instance& inst = instances[idx];
      auto lattice = emissions(avg.w, inst.rows);
      auto path = decode_viterbi(lattice, avg.t);
      for (std::size_t i = 0; i < inst.gold.size(); ++i) {
        const std::size_t g = inst.gold[i], p = path[i].index();
        const double eta = options.class_weights[g] * inst.weight;
        if (g != p)
          for (auto f : inst.rows[i]) {
            avg.add_feature(f, g, eta, c);
            avg.add_feature(f, p, -eta, c);
          }
        if (i == 0) {
          if (g != p) {
            avg.add_start(g, eta, c);
            avg.add_start(p, -eta, c);
          }
        } else {
          const std::size_t gp = inst.gold[i - 1], pp = path[i - 1].index();
          if (gp != pp || g != p) {
            avg.add_next(gp, g, eta, c);
            avg.add_next(pp, p, -eta, c);
          }
        }
      }
      c += 1.0;
    }
  }

  LinearTaggerModel model;
  model.feature_salt = options.feature_salt;
  model.class_weights = options.class_weights;
  for (const auto& [f, row] : avg.w) {
    const auto& tot = avg.total[f];
    ScoreVector out{};
    bool nonzero = false;
    for (std::size_t l = 0; l < kNumLabels; ++l) {
      out[l] = row[l] - tot[l] / c;
      nonzero = nonzero || out[l] != 0.0;
    }
    if (nonzero) model.weights.emplace(f, out);
  }
  for (std::size_t a = 0; a < kNumLabels; ++a) {
    model.transitions.start[a] = avg.t.start[a] - avg.t_total.start[a] / c;
    for (std::size_t b = 0; b < kNumLabels; ++b)
      model.transitions.next[a][b] = avg.t.next[a][b] - avg.t_total.next[a][b] / c;
  }
  return model;
}

std::vector<TokenPrediction> LinearTagger::predict(std::span<const Token> tokens) const {
  std::vector<TokenPrediction> out;
  if (tokens.empty()) return out;
  auto lattice = emissions(model_.weights, sentence_features(tokens, model_.feature_salt));
  auto path = decode_viterbi(lattice, model_.transitions);
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto probs = normalize_scores(lattice[i]);
    out.push_back({path[i], probs[path[i].index()], probs});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

nlohmann::json label_order() {
  nlohmann::json labels = nlohmann::json::array();
  for (std::size_t l = 0; l < kNumLabels; ++l) labels.push_back(BioLabel::from_index(l).str());
  return labels;
}

void check_label_order(const nlohmann::json& j) {
  if (j.at("labels") != label_order())
    throw ValidationError("model label order does not match this build");
}

template <std::size_t N>
std::array<double, N> read_row(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != N) throw ValidationError("model row has the wrong length");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = j[i].get<double>();
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string save_linear_model(const LinearTaggerModel& model) {
  nlohmann::json j;
  j["format"] = "sdoh-tagger";
  j["kind"] = "linear";
  j["version"] = 1;
  j["labels"] = label_order();
  j["feature_salt"] = model.feature_salt;
  j["class_weights"] = model.class_weights;
  j["start"] = model.transitions.start;
  j["transitions"] = model.transitions.next;
  nlohmann::json features = nlohmann::json::object();
  for (const auto& [f, row] : model.weights) features[hex64(f)] = row;
  j["features"] = std::move(features);
  return j.dump() + "\n";
}

LinearTaggerModel load_linear_model(std::string_view json_text) {
  try {
    auto j = nlohmann::json::parse(json_text);
    if (j.value("kind", "") != "linear") throw ValidationError("not a linear tagger model");
    check_label_order(j);
    LinearTaggerModel m;
    m.feature_salt = j.at("feature_salt").get<std::uint64_t>();
    m.class_weights = read_row<kNumLabels>(j.at("class_weights"));
    m.transitions.start = read_row<kNumLabels>(j.at("start"));
    const auto& next = j.at("transitions");
    if (!next.is_array() || next.size() != kNumLabels)
      throw ValidationError("model transition matrix has the wrong shape");
    for (std::size_t a = 0; a < kNumLabels; ++a) m.transitions.next[a] = read_row<kNumLabels>(next[a]);
    for (const auto& [key, row] : j.at("features").items())
      m.weights.emplace(std::stoull(key, nullptr, 16), read_row<kNumLabels>(row));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed tagger model: ") + e.what());
  } catch (const std::logic_error& e) {
    throw ValidationError(std::string("malformed tagger model: ") + e.what());
  }
}

std::unique_ptr<Tagger> load_tagger(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed tagger model: ") + e.what());
  }
  const std::string kind = j.is_object() ? j.value("kind", "") : "";
  if (kind == "linear") return std::make_unique<LinearTagger>(load_linear_model(json_text));
  if (kind == "gazetteer") {
    try {
      return std::make_unique<GazetteerTagger>(load_lexicon(j.at("lexicon").dump()));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed gazetteer model: ") + e.what());
    }
  }
  throw ValidationError("unknown tagger kind '" + kind + "'");
}

std::string score_matrix_csv(std::span<const TokenPrediction> predictions) {
  std::string out = "token_index";
  for (std::size_t l = 0; l < kNumLabels; ++l) out += "," + BioLabel::from_index(l).str();
  out += "\n";
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    out += std::to_string(i);
    for (double v : predictions[i].scores) out += "," + format_fixed(v, 6);
    out += "\n";
  }
  return out;
}

}  // namespace sdoh
