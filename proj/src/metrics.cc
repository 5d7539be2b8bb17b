#include "sdoh/metrics.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "sdoh/errors.h"
#include "sdoh/log.h"
#include "sdoh/text.h"

namespace sdoh {

std::vector<BioLabel> ConfusionCounts::present_labels() const {
  std::vector<BioLabel> out;
  for (std::size_t l = 0; l < kNumLabels; ++l)
    if (tp[l] + fp[l] + fn[l] > 0) out.push_back(BioLabel::from_index(l));
  return out;
}

ConfusionCounts confusion(std::span<const BioLabel> gold, std::span<const BioLabel> pred) {
  if (gold.size() != pred.size())
    throw AlignmentError("confusion: " + std::to_string(gold.size()) + " gold labels vs " +
                         std::to_string(pred.size()) + " predicted");
  ConfusionCounts c;
  c.total = gold.size();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    std::size_t g = gold[i].index(), p = pred[i].index();
    if (g == p) {
      ++c.tp[g];
    } else {
      ++c.fn[g];
      ++c.fp[p];
    }
  }
  for (std::size_t l = 0; l < kNumLabels; ++l) c.tn[l] = c.total - c.tp[l] - c.fp[l] - c.fn[l];
  return c;
}

double f1_score(double precision, double recall) {
  double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

ClassMetrics class_metrics(BioLabel label, std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassMetrics m;
  m.label = label;
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  m.support = tp + fn;
  return m;
}

std::vector<ClassMetrics> prf1(const ConfusionCounts& counts) {
  std::vector<ClassMetrics> out;
  for (BioLabel l : counts.present_labels()) {
    auto i = l.index();
    out.push_back(class_metrics(l, counts.tp[i], counts.fp[i], counts.fn[i]));
  }
  return out;
}

double macro_f1(std::span<const ClassMetrics> classes, bool include_o) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : classes) {
    if (!include_o && c.label.is_outside()) continue;
    sum += c.f1;
    ++n;
  }
  if (n == 0) throw ArgumentError("macro_f1: no classes to average");
  return sum / static_cast<double>(n);
}

double binary_auc(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw ArgumentError("binary_auc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (positive[order[k]]) {
        rank_sum += midrank;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ArgumentError("binary_auc: needs positives and negatives");
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

namespace {

void check_scores(std::span<const ScoreVector> scores, std::span<const BioLabel> gold) {
  if (scores.size() != gold.size())
    throw AlignmentError("score matrix has " + std::to_string(scores.size()) + " rows for " +
                         std::to_string(gold.size()) + " tokens");
}

std::vector<BioLabel> gold_classes(std::span<const BioLabel> gold) {
  std::set<BioLabel> s(gold.begin(), gold.end());
  return {s.begin(), s.end()};
}

std::string label_list(const std::vector<BioLabel>& labels) {
  std::string out;
  for (const auto& l : labels) out += (out.empty() ? "" : ", ") + l.str();
  return out;
}

}  // namespace

AucResult auc_ovr(std::span<const ScoreVector> scores, std::span<const BioLabel> gold,
                  std::span<const BioLabel> classes) {
  check_scores(scores, gold);
  std::vector<BioLabel> cls = classes.empty() ? gold_classes(gold)
                                              : std::vector<BioLabel>(classes.begin(), classes.end());
  AucResult r;
  std::vector<double> column(gold.size());
  std::unique_ptr<bool[]> pos(new bool[gold.size()]);
  double sum = 0.0;
  for (BioLabel c : cls) {
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      column[i] = scores[i][c.index()];
      pos[i] = gold[i] == c;
      n_pos += pos[i];
    }
    if (n_pos == 0 || n_pos == gold.size()) {
      r.skipped.push_back(c);
      continue;
    }
    double a = binary_auc(column, std::span<const bool>(pos.get(), gold.size()));
    r.per_class.emplace_back(c, a);
    sum += a;
  }
  if (!r.skipped.empty())
    log::warn("OVR AUC: skipping degenerate classes " + label_list(r.skipped));
  if (r.per_class.empty()) throw DataError("OVR AUC: every class is degenerate");
  r.macro = sum / static_cast<double>(r.per_class.size());
  return r;
}

AucResult auc_ovo(std::span<const ScoreVector> scores, std::span<const BioLabel> gold) {
  check_scores(scores, gold);
  auto cls = gold_classes(gold);
  if (cls.size() < 2) throw DataError("OVO AUC: fewer than two classes in gold");
  AucResult r;
  double sum = 0.0;
  std::size_t pairs = 0;
  std::vector<double> si, sj;
  std::vector<char> pos;
  for (std::size_t a = 0; a < cls.size(); ++a)
    for (std::size_t b = a + 1; b < cls.size(); ++b) {
      si.clear();
      sj.clear();
      pos.clear();
      for (std::size_t t = 0; t < gold.size(); ++t) {
        if (gold[t] != cls[a] && gold[t] != cls[b]) continue;
        si.push_back(scores[t][cls[a].index()]);
        sj.push_back(scores[t][cls[b].index()]);
        pos.push_back(gold[t] == cls[a]);
      }
      std::unique_ptr<bool[]> pa(new bool[pos.size()]), pb(new bool[pos.size()]);
      for (std::size_t t = 0; t < pos.size(); ++t) {
        pa[t] = pos[t];
        pb[t] = !pos[t];
      }
      double forward = binary_auc(si, std::span<const bool>(pa.get(), pos.size()));
      double backward = binary_auc(sj, std::span<const bool>(pb.get(), pos.size()));
      sum += (forward + backward) / 2.0;
      ++pairs;
    }
  r.macro = sum / static_cast<double>(pairs);
  return r;
}

double SpanCounts::precision() const { return tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0; }
double SpanCounts::recall() const { return tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0; }
double SpanCounts::f1() const { return f1_score(precision(), recall()); }

void check_aligned(const Corpus& gold, const Corpus& pred) {
  if (gold.size() != pred.size())
    throw AlignmentError("gold has " + std::to_string(gold.size()) + " documents, prediction " +
                         std::to_string(pred.size()));
  for (std::size_t d = 0; d < gold.size(); ++d) {
    const auto& g = gold[d];
    const auto& p = pred[d];
    if (g.id != p.id) throw AlignmentError("document " + std::to_string(d) + ": id " + g.id + " vs " + p.id);
    if (g.sentences.size() != p.sentences.size())
      throw AlignmentError("document " + g.id + ": sentence counts differ");
    for (std::size_t s = 0; s < g.sentences.size(); ++s) {
      const auto& gt = g.sentences[s].tokens;
      const auto& pt = p.sentences[s].tokens;
      if (gt.size() != pt.size())
        throw AlignmentError("document " + g.id + " sentence " + std::to_string(s) + ": token counts differ");
      for (std::size_t t = 0; t < gt.size(); ++t)
        if (gt[t].surface != pt[t].surface)
          throw AlignmentError("document " + g.id + " sentence " + std::to_string(s) + " token " +
                               std::to_string(t) + ": '" + gt[t].surface + "' vs '" + pt[t].surface + "'");
    }
  }
}

std::vector<BioLabel> flatten_labels(const Corpus& corpus) {
  std::vector<BioLabel> out;
  for (const auto& d : corpus)
    for (const auto& s : d.sentences)
      for (const auto& t : s.tokens) out.push_back(t.label);
  return out;
}

SpanCounts span_counts(const Corpus& gold, const Corpus& pred) {
  check_aligned(gold, pred);
  using Key = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, EntityType>;
  auto keys = [](const Corpus& c, bool repair) {
    std::set<Key> out;
    for (std::size_t d = 0; d < c.size(); ++d)
      for (std::size_t s = 0; s < c[d].sentences.size(); ++s) {
        Sentence sent = c[d].sentences[s];
        if (repair) repair_bio_in_place(sent.tokens);
        for (const auto& m : mention_spans(sent)) out.emplace(d, s, m.start, m.length(), m.type);
      }
    return out;
  };
  auto g = keys(gold, false), p = keys(pred, true);
  SpanCounts c;
  for (const auto& k : p) (g.count(k) ? c.tp : c.fp)++;
  c.fn = g.size() - c.tp;
  return c;
}

std::vector<ScoreVector> scores_from_confidence(const Corpus& pred) {
  std::vector<ScoreVector> out;
  for (const auto& d : pred)
    for (const auto& s : d.sentences)
      for (const auto& t : s.tokens) {
        ScoreVector v;
        v.fill((1.0 - t.confidence) / static_cast<double>(kNumLabels - 1));
        v[t.label.index()] = t.confidence;
        out.push_back(v);
      }
  return out;
}

std::vector<ScoreVector> parse_score_matrix_csv(std::string_view csv) {
  std::vector<ScoreVector> out;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line_no == 1) {
      if (cells.size() != kNumLabels + 1) throw ParseError(line_no, "score matrix needs 54 columns");
      for (std::size_t l = 0; l < kNumLabels; ++l)
        if (cells[l + 1] != BioLabel::from_index(l).str())
          throw ParseError(line_no, "score matrix column " + cells[l + 1] + " out of canonical order");
      continue;
    }
    if (cells.size() != kNumLabels + 1) throw ParseError(line_no, "score row needs 54 columns");
    if (std::stoull(cells[0]) != out.size()) throw ParseError(line_no, "score rows out of order");
    ScoreVector v;
    try {
      for (std::size_t l = 0; l < kNumLabels; ++l) v[l] = std::stod(cells[l + 1]);
    } catch (const std::exception&) {
      throw ParseError(line_no, "non-numeric score");
    }
    out.push_back(v);
  }
  return out;
}

MetricsReport report(const Corpus& gold, const Corpus& pred,
                     std::optional<std::vector<ScoreVector>> scores) {
  check_aligned(gold, pred);
  auto g = flatten_labels(gold), p = flatten_labels(pred);
  auto counts = confusion(g, p);
  MetricsReport r;
  r.token_count = g.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < g.size(); ++i) correct += g[i] == p[i];
  r.accuracy = g.empty() ? 0.0 : double(correct) / double(g.size());
  r.per_class = prf1(counts);
  if (r.per_class.empty()) throw DataError("report: empty corpus");
  r.macro_f1_all = macro_f1(r.per_class, true);
  bool has_entity = std::any_of(r.per_class.begin(), r.per_class.end(),
                                [](const ClassMetrics& c) { return !c.label.is_outside(); });
  if (has_entity) r.macro_f1_excl_o = macro_f1(r.per_class, false);
  if (!scores) scores = scores_from_confidence(pred);
  auto classes = counts.present_labels();
  try {
    r.auc_ovr = auc_ovr(*scores, g, classes);
  } catch (const AlignmentError&) {
    throw;
  } catch (const DataError& e) {
    log::warn(std::string("report: ") + e.what());
  }
  try {
    r.auc_ovo = auc_ovo(*scores, g);
  } catch (const AlignmentError&) {
    throw;
  } catch (const DataError& e) {
    log::warn(std::string("report: ") + e.what());
  }
  r.spans = span_counts(gold, pred);
  return r;
}

std::string metrics_json(const MetricsReport& r) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["token_count"] = r.token_count;
  j["accuracy"] = r.accuracy;
  j["macro_f1_all"] = r.macro_f1_all;
  j["macro_f1_excl_o"] = opt(r.macro_f1_excl_o);
  j["macro_auc_ovr"] = r.auc_ovr ? json(r.auc_ovr->macro) : json(nullptr);
  j["macro_auc_ovo"] = r.auc_ovo ? json(r.auc_ovo->macro) : json(nullptr);
  json per = json::array();
  for (const auto& c : r.per_class)
    per.push_back({{"class", c.label.str()},
                   {"precision", c.precision},
                   {"recall", c.recall},
                   {"f1", c.f1},
                   {"support", c.support}});
  j["per_class"] = per;
  if (r.auc_ovr) {
    json auc = json::object();
    for (const auto& [l, a] : r.auc_ovr->per_class) auc[l.str()] = a;
    j["auc_ovr_per_class"] = auc;
    json skipped = json::array();
    for (const auto& l : r.auc_ovr->skipped) skipped.push_back(l.str());
    j["auc_ovr_skipped"] = skipped;
  }
  j["span_level"] = {{"tp", r.spans.tp},
                     {"fp", r.spans.fp},
                     {"fn", r.spans.fn},
                     {"precision", r.spans.precision()},
                     {"recall", r.spans.recall()},
                     {"f1", r.spans.f1()}};
  return j.dump(2) + "\n";
}

std::string per_class_csv(const MetricsReport& r) {
  std::string out = "class,precision,recall,f1\n";
  for (const auto& c : r.per_class)
    out += c.label.str() + "," + format_fixed(c.precision, 4) + "," + format_fixed(c.recall, 4) + "," +
           format_fixed(c.f1, 4) + "\n";
  return out;
}

}  // namespace sdoh
