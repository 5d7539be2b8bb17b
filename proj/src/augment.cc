#include "sdoh/augment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "sdoh/errors.h"
#include "sdoh/parallel.h"
#include "sdoh/rng.h"
#include "sdoh/text.h"

namespace sdoh {
namespace {

nlohmann::json parse_json(std::string_view text, const char* what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

BioLabel parse_placeholder(const std::string& text, const std::string& context) {
  auto label = BioLabel::parse(text);
  if (!label || label->is_outside()) {
    throw ValidationError(context + ": '" + text + "' is not a B-/I- label");
  }
  return *label;
}

std::string synthetic_id(std::string_view tag, std::size_t seq) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05zu", seq);
  return "SYN-" + std::string(tag) + "-" + buf;
}

bool mentions_gender(const SentenceTemplate& t) {
  for (const auto& s : t.slots) {
    if (s.placeholder && s.label.type() == EntityType::kGender) return true;
  }
  return false;
}

}  // namespace

Document confidence_filter(const Document& doc, double threshold, std::size_t* relabeled) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ArgumentError("confidence threshold must lie in [0,1]");
  }
  Document out = doc;
  std::size_t n = 0;
  for (auto& s : out.sentences) {
    for (auto& t : s.tokens) {
      if (!t.label.is_outside() && t.confidence < threshold) {
        t.label = BioLabel::outside();
        ++n;
      }
    }
    repair_bio_in_place(s.tokens);
  }
  if (relabeled) *relabeled = n;
  return out;
}

Document numeric_age_filter(const Document& doc, std::size_t* relabeled) {
  Document out = doc;
  std::size_t n = 0;
  for (auto& s : out.sentences) {
    for (auto& t : s.tokens) {
      if (!t.label.is_outside() && t.label.type() != EntityType::kAge &&
          is_numeric_surface(t.surface)) {
        t.label = BioLabel::outside();
        ++n;
      }
    }
    repair_bio_in_place(s.tokens);
  }
  if (relabeled) *relabeled = n;
  return out;
}

Document drop_all_o_sentences(const Document& doc, std::size_t* dropped) {
  Document out;
  out.id = doc.id;
  out.provenance = doc.provenance;
  std::size_t n = 0;
  for (const auto& s : doc.sentences) {
    const bool all_o = std::all_of(s.tokens.begin(), s.tokens.end(),
                                   [](const Token& t) { return t.label.is_outside(); });
    if (all_o) {
      ++n;
    } else {
      out.sentences.push_back(s);
    }
  }
  if (dropped) *dropped = n;
  return out;
}

std::vector<BioLabel> SentenceTemplate::placeholders() const {
  std::vector<BioLabel> out;
  for (const auto& s : slots) {
    if (s.placeholder) out.push_back(s.label);
  }
  return out;
}

std::size_t SentenceTemplate::literal_count() const {
  return static_cast<std::size_t>(
      std::count_if(slots.begin(), slots.end(), [](const TemplateSlot& s) { return !s.placeholder; }));
}

void validate_template(const SentenceTemplate& t) {
  if (t.slots.empty()) throw ValidationError("template '" + t.id + "' has no slots");
  for (std::size_t i = 0; i < t.slots.size(); ++i) {
    const auto& slot = t.slots[i];
    if (!slot.placeholder) {
      if (slot.literal.empty() || split_whitespace(slot.literal).size() != 1) {
        throw ValidationError("template '" + t.id + "': literal slot " + std::to_string(i) +
                              " must be a single word");
      }
      continue;
    }
    if (!slot.label.is_inside()) continue;
    const bool ok = i > 0 && t.slots[i - 1].placeholder &&
                    t.slots[i - 1].label.type() == slot.label.type();
    if (!ok) {
      throw ValidationError("template '" + t.id + "': " + slot.label.str() +
                            " must directly follow B-/I-" +
                            std::string(entity_type_name(slot.label.type())));
    }
  }
}

std::vector<SentenceTemplate> load_templates(std::string_view json_text) {
  const auto j = parse_json(json_text, "templates");
  if (!j.is_array()) throw ValidationError("templates file must be a JSON list");
  std::vector<SentenceTemplate> out;
  for (const auto& jt : j) {
    SentenceTemplate t;
    t.id = jt.value("id", std::string());
    if (t.id.empty()) throw ValidationError("template without id");
    if (!jt.contains("slots") || !jt["slots"].is_array()) {
      throw ValidationError("template '" + t.id + "' has no slot list");
    }
    for (const auto& js : jt["slots"]) {
      TemplateSlot slot;
      if (js.contains("lit")) {
        slot.literal = js["lit"].get<std::string>();
      } else if (js.contains("ph")) {
        slot.placeholder = true;
        slot.label = parse_placeholder(js["ph"].get<std::string>(), "template '" + t.id + "'");
      } else {
        throw ValidationError("template '" + t.id + "': slot needs 'lit' or 'ph'");
      }
      t.slots.push_back(std::move(slot));
    }
    validate_template(t);
    out.push_back(std::move(t));
  }
  return out;
}

VariationLexicon load_lexicon(std::string_view json_text) {
  const auto j = parse_json(json_text, "lexicon");
  if (!j.is_object()) throw ValidationError("lexicon must be a JSON object");
  VariationLexicon out;
  for (const auto& [key, words] : j.items()) {
    const BioLabel label = parse_placeholder(key, "lexicon");
    if (!words.is_array() || words.empty()) {
      throw ValidationError("lexicon: list for " + key + " is empty");
    }
    auto& list = out[label];
    for (const auto& w : words) {
      auto word = w.get<std::string>();
      if (word.empty() || split_whitespace(word).size() != 1) {
        throw ValidationError("lexicon: '" + word + "' under " + key + " is not one word");
      }
      list.push_back(std::move(word));
    }
  }
  return out;
}

VariationLexicon harvest_lexicon(const Corpus& corpus) {
  VariationLexicon out;
  std::map<BioLabel, std::set<std::string>> seen;
  for (const auto& doc : corpus) {
    for (const auto& s : doc.sentences) {
      for (const auto& t : s.tokens) {
        if (t.label.is_outside()) continue;
        if (seen[t.label].insert(t.surface).second) out[t.label].push_back(t.surface);
      }
    }
  }
  return out;
}

VariationLexicon merge_lexicons(const VariationLexicon& a, const VariationLexicon& b) {
  VariationLexicon out;
  for (const auto* src : {&a, &b}) {
    for (const auto& [label, words] : *src) {
      auto& dst = out[label];
      for (const auto& w : words) {
        if (std::find(dst.begin(), dst.end(), w) == dst.end()) dst.push_back(w);
      }
    }
  }
  return out;
}

std::size_t full_set_count(const AugmentationPlan& plan) {
  return static_cast<std::size_t>(
      std::floor(plan.full_fraction * static_cast<double>(plan.total_sets) + 0.5));
}

std::vector<SyntheticSet> generate_synthetic_sets(const AugmentationPlan& plan,
                                                  std::size_t threads) {
  if (!(plan.full_fraction >= 0.0 && plan.full_fraction <= 1.0)) {
    throw ArgumentError("full_fraction must lie in [0,1]");
  }
  if (plan.total_sets == 0) return {};
  if (plan.templates.empty()) throw GenerationError("augmentation plan has no templates");
  for (const auto& t : plan.templates) validate_template(t);

  const std::size_t n_full = full_set_count(plan);
  auto check_cover = [&](const VariationLexicon& lex, const char* name) {
    for (const auto& t : plan.templates) {
      for (const auto& label : t.placeholders()) {
        auto it = lex.find(label);
        if (it == lex.end() || it->second.empty()) {
          throw GenerationError("placeholder " + label.str() + " in template '" + t.id +
                                "' is not covered by the " + name + " lexicon");
        }
      }
    }
  };
  if (n_full > 0) check_cover(plan.lexicon_full, "full");
  if (n_full < plan.total_sets) check_cover(plan.lexicon_generated, "generated");

  const std::string purpose = "synthetic/" + plan.tag;
  std::vector<SyntheticSet> out(plan.total_sets);
  parallel_for(plan.total_sets, threads, [&](std::size_t k) {
    SyntheticSet& set = out[k];
    set.source = k < n_full ? LexiconSource::kFull : LexiconSource::kGenerated;
    set.id = synthetic_id(plan.tag, k + 1);
    const VariationLexicon& lex =
        set.source == LexiconSource::kFull ? plan.lexicon_full : plan.lexicon_generated;
    DerivedStream rng(plan.seed, purpose, k);
    for (const auto& t : plan.templates) {
      Sentence sentence;
      sentence.synthetic_id = set.id;
      sentence.tokens.reserve(t.slots.size());
      for (const auto& slot : t.slots) {
        if (!slot.placeholder) {
          sentence.tokens.push_back(Token{slot.literal, BioLabel::outside(), 1.0});
          continue;
        }
        const auto& words = lex.at(slot.label);
        sentence.tokens.push_back(Token{words[rng.below(words.size())], slot.label, 1.0});
      }
      set.sentences.push_back(std::move(sentence));
    }
  });
  return out;
}

std::vector<Sentence> flatten_sets(const std::vector<SyntheticSet>& sets) {
  std::vector<Sentence> out;
  for (const auto& set : sets) {
    out.insert(out.end(), set.sentences.begin(), set.sentences.end());
  }
  return out;
}

double literal_ratio(std::span<const SentenceTemplate> templates) {
  std::size_t literals = 0;
  std::size_t slots = 0;
  for (const auto& t : templates) {
    literals += t.literal_count();
    slots += t.slots.size();
  }
  return slots == 0 ? 0.0 : static_cast<double>(literals) / static_cast<double>(slots);
}

void validate_eval_templates(std::span<const SentenceTemplate> eval_templates,
                             std::span<const SentenceTemplate> training_templates) {
  if (eval_templates.empty()) throw ValidationError("evaluation template set is empty");
  for (const auto& t : eval_templates) validate_template(t);
  if (std::all_of(eval_templates.begin(), eval_templates.end(), mentions_gender)) {
    throw ValidationError("evaluation templates: Gender must be absent from at least one template");
  }
  if (training_templates.empty()) return;
  if (!(literal_ratio(eval_templates) > literal_ratio(training_templates))) {
    throw ValidationError(
        "evaluation templates must have a higher literal (O) ratio than the training set");
  }
  for (const auto& e : eval_templates) {
    const auto order = e.placeholders();
    for (const auto& t : training_templates) {
      if (order == t.placeholders()) {
        throw ValidationError("evaluation template '" + e.id +
                              "' repeats the label order of training template '" + t.id + "'");
      }
    }
  }
}

std::vector<SyntheticSet> build_eval_augmentation(
    const AugmentationPlan& plan, std::span<const SentenceTemplate> training_templates,
    std::size_t threads) {
  validate_eval_templates(plan.templates, training_templates);
  return generate_synthetic_sets(plan, threads);
}

Corpus embed_synthetic(const Corpus& corpus, std::span<const Sentence> synthetic,
                       std::uint64_t seed) {
  if (synthetic.empty()) return corpus;
  if (corpus.empty()) throw ArgumentError("cannot embed synthetic sentences into an empty corpus");

  // Group consecutive sentences that share an id.
  struct Unit {
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Unit> units;
  for (std::size_t i = 0; i < synthetic.size();) {
    if (!synthetic[i].synthetic_id) {
      throw ArgumentError("synthetic sentence " + std::to_string(i) + " has no synthetic_id");
    }
    std::size_t j = i + 1;
    while (j < synthetic.size() && synthetic[j].synthetic_id == synthetic[i].synthetic_id) ++j;
    units.push_back({i, j});
    i = j;
  }

  // Gap g of document d sits before original sentence g (g == size: the end).
  std::vector<std::size_t> gap_base(corpus.size() + 1, 0);
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    gap_base[d + 1] = gap_base[d] + corpus[d].sentences.size() + 1;
  }
  const std::size_t total_gaps = gap_base.back();

  std::vector<std::vector<std::vector<std::size_t>>> placed(corpus.size());
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    placed[d].resize(corpus[d].sentences.size() + 1);
  }
  for (std::size_t u = 0; u < units.size(); ++u) {
    const std::size_t gap = DerivedStream(seed, "embed", u).below(total_gaps);
    const auto it = std::upper_bound(gap_base.begin(), gap_base.end(), gap);
    const auto d = static_cast<std::size_t>(it - gap_base.begin()) - 1;
    placed[d][gap - gap_base[d]].push_back(u);
  }

  Corpus out;
  out.reserve(corpus.size());
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const Document& src = corpus[d];
    Document doc;
    doc.id = src.id;
    doc.provenance = src.provenance;
    for (std::size_t g = 0; g <= src.sentences.size(); ++g) {
      for (std::size_t u : placed[d][g]) {
        for (std::size_t i = units[u].begin; i < units[u].end; ++i) {
          doc.sentences.push_back(synthetic[i]);
        }
      }
      if (g < src.sentences.size()) doc.sentences.push_back(src.sentences[g]);
    }
    out.push_back(std::move(doc));
  }
  return out;
}

Corpus strip_synthetic(const Corpus& corpus) {
  Corpus out;
  out.reserve(corpus.size());
  for (const auto& src : corpus) {
    Document doc;
    doc.id = src.id;
    doc.provenance = src.provenance;
    for (const auto& s : src.sentences) {
      if (!s.synthetic_id) doc.sentences.push_back(s);
    }
    out.push_back(std::move(doc));
  }
  return out;
}

}  // namespace sdoh
