#include "sdoh/pipeline.h"

#include <openssl/evp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "sdoh/analytics.h"
#include "sdoh/augment.h"
#include "sdoh/conll.h"
#include "sdoh/ingest.h"
#include "sdoh/log.h"
#include "sdoh/metrics.h"
#include "sdoh/nli.h"
#include "sdoh/refine.h"
#include "sdoh/tagger.h"
#include "sdoh/text.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sdoh {

// ---------------------------------------------------------------------------
// Config

std::string PipelineConfig::resolve(const std::string& path) const {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

namespace {

json config_to_json(const PipelineConfig& c) {
  json merge = json::array();
  for (auto t : c.merge_types) merge.push_back(std::string(entity_type_name(t)));
  json cw = json::object();
  for (const auto& [k, v] : c.class_weights) cw[k] = v;
  return {
      {"version", kConfigVersion},
      {"seed", c.seed},
      {"mode", c.mode},
      {"paths",
       {{"mapping", c.paths.mapping},
        {"section_rules", c.paths.section_rules},
        {"templates_train", c.paths.templates_train},
        {"templates_eval", c.paths.templates_eval},
        {"lexicon_generated", c.paths.lexicon_generated},
        {"statements", c.paths.statements},
        {"thesaurus", c.paths.thesaurus},
        {"output_dir", c.paths.output_dir}}},
      {"thresholds", {{"confidence", c.confidence_threshold}}},
      {"augmentation", {{"total_sets", c.total_sets}, {"full_fraction", c.full_fraction}}},
      {"merge_policy", merge},
      {"tagger",
       {{"kind", c.tagger_kind},
        {"epochs", c.epochs},
        {"window_tokens", c.window_tokens},
        {"class_weights", cw}}},
      {"nli", {{"mode", c.nli_mode}, {"synonyms", c.synonyms}}},
      {"analytics", {{"top_k", c.top_k}}},
  };
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError("config: " + where + " must be an object");
  for (const auto& [key, _] : j.items())
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ValidationError("config: unknown key '" + key + "' in " + where);
}

}  // namespace

std::string PipelineConfig::canonical_json() const { return config_to_json(*this).dump(); }
std::string PipelineConfig::hash() const { return sha256_hex(canonical_json()); }

PipelineConfig parse_config(std::string_view json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  check_keys(j, {"version", "seed", "threads", "mode", "paths", "thresholds", "augmentation",
                 "merge_policy", "tagger", "nli", "analytics"},
             "top level");
  PipelineConfig c;
  c.base_dir = base_dir;
  try {
    if (j.value("version", 0) != kConfigVersion)
      throw ValidationError("config: version must be " + std::to_string(kConfigVersion));
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.mode = j.value("mode", c.mode);
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      check_keys(p, {"mapping", "section_rules", "templates_train", "templates_eval",
                     "lexicon_generated", "statements", "thesaurus", "output_dir"},
                 "paths");
      auto get = [&](const char* k, std::string& dst) {
        if (p.contains(k) && !p[k].is_null()) dst = p[k].get<std::string>();
      };
      get("mapping", c.paths.mapping);
      get("section_rules", c.paths.section_rules);
      get("templates_train", c.paths.templates_train);
      get("templates_eval", c.paths.templates_eval);
      get("lexicon_generated", c.paths.lexicon_generated);
      get("statements", c.paths.statements);
      get("thesaurus", c.paths.thesaurus);
      get("output_dir", c.paths.output_dir);
    }
    if (j.contains("thresholds")) {
      check_keys(j["thresholds"], {"confidence"}, "thresholds");
      c.confidence_threshold = j["thresholds"].value("confidence", c.confidence_threshold);
    }
    if (j.contains("augmentation")) {
      check_keys(j["augmentation"], {"total_sets", "full_fraction"}, "augmentation");
      c.total_sets = j["augmentation"].value("total_sets", c.total_sets);
      c.full_fraction = j["augmentation"].value("full_fraction", c.full_fraction);
    }
    if (j.contains("merge_policy")) {
      c.merge_types.clear();
      for (const auto& t : j["merge_policy"]) {
        auto type = parse_entity_type(t.get<std::string>());
        if (!type) throw ValidationError("config: unknown merge_policy type " + t.dump());
        c.merge_types.push_back(*type);
      }
    }
    if (j.contains("tagger")) {
      const auto& t = j["tagger"];
      check_keys(t, {"kind", "epochs", "window_tokens", "class_weights"}, "tagger");
      c.tagger_kind = t.value("kind", c.tagger_kind);
      c.epochs = t.value("epochs", c.epochs);
      c.window_tokens = t.value("window_tokens", c.window_tokens);
      if (t.contains("class_weights"))
        for (const auto& [k, v] : t["class_weights"].items()) c.class_weights[k] = v.get<double>();
    }
    if (j.contains("nli")) {
      check_keys(j["nli"], {"mode", "synonyms"}, "nli");
      c.nli_mode = j["nli"].value("mode", c.nli_mode);
      c.synonyms = j["nli"].value("synonyms", c.synonyms);
    }
    if (j.contains("analytics")) {
      check_keys(j["analytics"], {"top_k"}, "analytics");
      c.top_k = j["analytics"].value("top_k", c.top_k);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  validate_config(c);
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  auto dir = fs::path(path).parent_path().string();
  return parse_config(text, dir.empty() ? "." : dir);
}

void validate_config(const PipelineConfig& c) {
  if (c.mode != "train" && c.mode != "eval") throw ValidationError("config: mode must be train or eval");
  if (!(c.confidence_threshold >= 0.0 && c.confidence_threshold <= 1.0))
    throw ValidationError("config: thresholds.confidence must lie in [0, 1]");
  if (!(c.full_fraction >= 0.0 && c.full_fraction <= 1.0))
    throw ValidationError("config: augmentation.full_fraction must lie in [0, 1]");
  if (c.tagger_kind != "linear" && c.tagger_kind != "gazetteer")
    throw ValidationError("config: tagger.kind must be linear or gazetteer");
  if (c.epochs == 0) throw ValidationError("config: tagger.epochs must be at least 1");
  if (c.window_tokens == 0) throw ValidationError("config: tagger.window_tokens must be at least 1");
  if (c.nli_mode != "restricted" && c.nli_mode != "full")
    throw ValidationError("config: nli.mode must be restricted or full");
  if (c.top_k == 0) throw ValidationError("config: analytics.top_k must be at least 1");
  if (c.synonyms && c.paths.thesaurus.empty())
    throw ValidationError("config: nli.synonyms needs paths.thesaurus");
  for (const auto& [label, w] : c.class_weights) {
    if (!BioLabel::parse(label)) throw ValidationError("config: unknown class_weights label " + label);
    if (!(w >= 0.0)) throw ValidationError("config: class weight for " + label + " must be >= 0");
  }
  for (const std::string* p : {&c.paths.mapping, &c.paths.section_rules, &c.paths.templates_train,
                               &c.paths.templates_eval, &c.paths.lexicon_generated, &c.paths.statements,
                               &c.paths.thesaurus})
    if (!p->empty() && !fs::exists(c.resolve(*p)))
      throw ValidationError("config: referenced file does not exist: " + c.resolve(*p));
}

// ---------------------------------------------------------------------------
// Hashing

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

// ---------------------------------------------------------------------------
// Stage bookkeeping

namespace {

const std::string kManifest = "manifest.json";

std::string need_path(const std::string& resolved, const char* what) {
  if (resolved.empty()) throw ValidationError(std::string("config: paths.") + what + " is not set");
  return resolved;
}

void require_stage(const RunOptions& run, const std::string& input, std::set<std::string> allowed,
                   const std::string& command) {
  if (!fs::exists(input)) throw DataError(command + ": input does not exist: " + input);
  if (run.force) return;
  std::string list;
  for (const auto& a : allowed) list += (list.empty() ? "" : "|") + a;
  const fs::path manifest = fs::path(input).parent_path() / kManifest;
  if (!fs::exists(manifest))
    throw StageOrderError(command + ": " + input + " has no " + kManifest + " beside it; expected output of " +
                          list + " (use --force to override)");
  json m;
  try {
    m = json::parse(read_file(manifest.string()));
  } catch (const json::exception& e) {
    throw StageOrderError(command + ": unreadable " + manifest.string());
  }
  const std::string stage = m.value("stage", "");
  if (!allowed.count(stage))
    throw StageOrderError(command + ": " + input + " was produced by '" + stage + "', expected " + list +
                          " (use --force to override)");
  const std::string name = fs::path(input).filename().string();
  if (m.contains("outputs") && m["outputs"].contains(name) &&
      m["outputs"][name].get<std::string>() != sha256_file(input))
    log::warn(command + ": " + input + " changed since " + stage + " wrote it (hash mismatch)");
}

void check_not_input(const std::string& out_dir, std::initializer_list<std::string> inputs) {
  const auto out = fs::weakly_canonical(out_dir);
  for (const auto& in : inputs)
    if (!in.empty() && fs::weakly_canonical(in).parent_path() == out)
      throw ArgumentError("output directory " + out_dir + " holds the input " + in +
                          "; choose another directory");
}

class StageWriter {
 public:
  StageWriter(const RunOptions& run, std::string stage, std::string out_dir)
      : run_(run), stage_(std::move(stage)), dir_(std::move(out_dir)) {
    fs::create_directories(dir_);
  }

  void input(const std::string& role, const std::string& path) {
    inputs_[role] = {{"path", path}, {"sha256", sha256_file(path)}};
  }
  void output(const std::string& name, std::string_view content) {
    write_file((fs::path(dir_) / name).string(), content);
    outputs_[name] = sha256_hex(content);
  }
  json& counts() { return counts_; }
  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

  void finish() {
    json m;
    m["stage"] = stage_;
    m["manifest_version"] = 1;
    m["config_hash"] = run_.config.hash();
    m["config"] = json::parse(run_.config.canonical_json());
    m["seed"] = run_.config.seed;
    m["mode"] = run_.config.mode;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    m["counts"] = counts_;
    write_file(path(kManifest), m.dump(2) + "\n");
  }

 private:
  const RunOptions& run_;
  std::string stage_, dir_;
  json inputs_ = json::object(), outputs_ = json::object(), counts_ = json::object();
};

Corpus read_corpus(const std::string& path) { return parse_conll(read_file(path)); }

const std::set<std::string> kCorpusStages = {"prepare", "augment", "strip", "fetch"};

}  // namespace

// ---------------------------------------------------------------------------
// Commands

IngestResult cmd_ingest(const RunOptions& run, const std::string& raw_dir, const std::string& out_dir,
                        const std::string& rules_path) {
  if (!fs::is_directory(raw_dir)) throw DataError("ingest: not a directory: " + raw_dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(raw_dir))
    if (e.is_regular_file()) files.push_back(e.path());
  if (files.empty()) throw DataError("ingest: no files in " + raw_dir);
  std::sort(files.begin(), files.end());
  check_not_input(out_dir, {files.front().string()});

  const std::string rules_file = !rules_path.empty() ? rules_path : run.config.resolve(run.config.paths.section_rules);
  const SectionRuleSet rules =
      rules_file.empty() ? SectionRuleSet::defaults() : SectionRuleSet::from_json(read_file(rules_file));

  StageWriter out(run, "ingest", out_dir);
  if (!rules_file.empty()) out.input("section_rules", rules_file);
  IngestResult result;
  Corpus corpus;
  for (const auto& f : files) {
    std::string id = f.stem().string();
    for (char& c : id)
      if (is_ascii_space(c)) c = '_';
    auto section = extract_case_section(read_file(f.string()), rules);
    std::vector<Sentence> sentences;
    if (section) sentences = tokenize(*section);
    if (sentences.empty()) {
      result.dropped.push_back(id);
      continue;
    }
    corpus.push_back({id, std::move(sentences), Provenance::kFullCorpus});
  }
  result.documents = corpus.size();
  std::string dropped;
  for (const auto& d : result.dropped) dropped += d + "\n";
  out.output("corpus.conll", serialize_conll(corpus));
  out.output("dropped.txt", dropped);
  out.counts() = {{"files", files.size()}, {"documents", corpus.size()}, {"dropped", result.dropped.size()}};
  out.finish();
  return result;
}

PrepareCounts cmd_prepare(const RunOptions& run, const std::string& input, const std::string& out_dir,
                          const std::string& overlay) {
  if (!fs::exists(input)) throw DataError("prepare: input does not exist: " + input);
  check_not_input(out_dir, {input, overlay});
  const auto& cfg = run.config;
  const std::string mapping_path = need_path(cfg.resolve(cfg.paths.mapping), "mapping");
  const auto mapping = LabelMapping::from_json(read_file(mapping_path));

  StageWriter out(run, "prepare", out_dir);
  out.input("corpus", input);
  out.input("mapping", mapping_path);

  PrepareCounts n;
  Corpus corpus = refine_corpus(parse_conll_raw(read_file(input)), mapping);
  if (!overlay.empty()) {
    out.input("overlay", overlay);
    MergePolicy policy{{cfg.merge_types.begin(), cfg.merge_types.end()}};
    std::map<std::string, Document> by_id;
    for (auto& d : refine_corpus(parse_conll_raw(read_file(overlay)), mapping)) by_id.emplace(d.id, std::move(d));
    for (auto& doc : corpus) {
      auto it = by_id.find(doc.id);
      if (it == by_id.end()) continue;
      doc = merge_annotations(doc, it->second, policy);
      by_id.erase(it);
      ++n.merged_documents;
    }
    for (const auto& [id, _] : by_id) log::warn("prepare: overlay document " + id + " has no base document");
  }
  Corpus result;
  for (const auto& doc : corpus) {
    n.sentences_in += doc.sentences.size();
    n.tokens_in += doc.token_count();
    std::size_t c = 0, num = 0, dropped = 0;
    Document d = confidence_filter(doc, cfg.confidence_threshold, &c);
    d = numeric_age_filter(d, &num);
    if (cfg.mode == "train") d = drop_all_o_sentences(d, &dropped);
    n.confidence_relabeled += c;
    n.numeric_relabeled += num;
    n.all_o_dropped += dropped;
    n.sentences_out += d.sentences.size();
    n.tokens_out += d.token_count();
    result.push_back(std::move(d));
  }
  n.documents = result.size();
  out.output("corpus.conll", serialize_conll(result));
  out.counts() = {{"documents", n.documents},
                  {"merged_documents", n.merged_documents},
                  {"sentences_in", n.sentences_in},
                  {"sentences_out", n.sentences_out},
                  {"tokens_in", n.tokens_in},
                  {"tokens_out", n.tokens_out},
                  {"removed",
                   {{"confidence_filter", n.confidence_relabeled},
                    {"numeric_filter", n.numeric_relabeled},
                    {"all_o_sentences", n.all_o_dropped}}}};
  out.finish();
  return n;
}

AugmentCounts cmd_augment(const RunOptions& run, const std::string& input, const std::string& out_dir) {
  require_stage(run, input, {"prepare", "strip"}, "augment");
  check_not_input(out_dir, {input});
  const auto& cfg = run.config;
  const bool eval = cfg.mode == "eval";
  const std::string templates_path =
      need_path(cfg.resolve(eval ? cfg.paths.templates_eval : cfg.paths.templates_train),
                eval ? "templates_eval" : "templates_train");
  const std::string lexicon_path = need_path(cfg.resolve(cfg.paths.lexicon_generated), "lexicon_generated");

  StageWriter out(run, "augment", out_dir);
  out.input("corpus", input);
  out.input("templates", templates_path);
  out.input("lexicon_generated", lexicon_path);

  Corpus corpus = read_corpus(input);
  AugmentationPlan plan;
  plan.templates = load_templates(read_file(templates_path));
  plan.lexicon_generated = load_lexicon(read_file(lexicon_path));
  plan.lexicon_full = merge_lexicons(harvest_lexicon(corpus), plan.lexicon_generated);
  plan.total_sets = cfg.total_sets;
  plan.full_fraction = cfg.full_fraction;
  plan.seed = cfg.seed;
  plan.tag = cfg.mode;

  std::vector<SyntheticSet> sets;
  if (eval) {
    std::vector<SentenceTemplate> train_templates;
    if (!cfg.paths.templates_train.empty()) {
      out.input("templates_train", cfg.resolve(cfg.paths.templates_train));
      train_templates = load_templates(read_file(cfg.resolve(cfg.paths.templates_train)));
    }
    sets = build_eval_augmentation(plan, train_templates, cfg.threads);
  } else {
    sets = generate_synthetic_sets(plan, cfg.threads);
  }
  AugmentCounts n;
  std::string index = "";
  for (const auto& s : sets) {
    ++n.sets;
    (s.source == LexiconSource::kFull ? n.full_sets : n.generated_sets)++;
    n.sentences += s.sentences.size();
    index += s.id + "\t" + (s.source == LexiconSource::kFull ? "full" : "generated") + "\n";
  }
  out.output("corpus.conll", serialize_conll(embed_synthetic(corpus, flatten_sets(sets), cfg.seed)));
  out.output("synthetic_index.tsv", index);
  out.counts() = {{"sets", n.sets},
                  {"full_sets", n.full_sets},
                  {"generated_sets", n.generated_sets},
                  {"synthetic_sentences", n.sentences}};
  out.finish();
  return n;
}

std::size_t cmd_strip(const RunOptions& run, const std::string& input, const std::string& out_dir,
                      const std::string& index_path) {
  require_stage(run, input, {"augment"}, "strip");
  check_not_input(out_dir, {input});
  StageWriter out(run, "strip", out_dir);
  out.input("corpus", input);
  Corpus corpus = read_corpus(input);
  std::size_t removed = 0;
  if (index_path.empty()) {
    for (const auto& d : corpus)
      for (const auto& s : d.sentences) removed += s.synthetic_id.has_value();
    corpus = strip_synthetic(corpus);
  } else {
    out.input("index", index_path);
    std::set<std::string> ids;
    std::istringstream in(read_file(index_path));
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) ids.insert(line.substr(0, line.find('\t')));
    for (auto& d : corpus) {
      std::vector<Sentence> kept;
      for (auto& s : d.sentences) {
        if (s.synthetic_id && ids.count(*s.synthetic_id))
          ++removed;
        else
          kept.push_back(std::move(s));
      }
      d.sentences = std::move(kept);
    }
  }
  out.output("corpus.conll", serialize_conll(corpus));
  out.counts() = {{"removed_sentences", removed}};
  out.finish();
  return removed;
}

void cmd_train(const RunOptions& run, const std::string& input, const std::string& out_dir) {
  require_stage(run, input, kCorpusStages, "train");
  check_not_input(out_dir, {input});
  const auto& cfg = run.config;
  Corpus corpus = read_corpus(input);
  if (corpus_token_count(corpus) == 0) throw DataError("train: empty corpus");
  StageWriter out(run, "train", out_dir);
  out.input("corpus", input);
  if (cfg.tagger_kind == "gazetteer") {
    out.output("model.json", save_gazetteer(harvest_lexicon(corpus)));
  } else {
    LinearTrainOptions opt;
    opt.epochs = cfg.epochs;
    opt.seed = cfg.seed;
    for (const auto& [label, w] : cfg.class_weights) opt.class_weights[BioLabel::parse(label)->index()] = w;
    out.output("model.json", save_linear_model(train_linear(corpus, opt)));
  }
  out.counts() = {{"kind", cfg.tagger_kind}, {"documents", corpus.size()}, {"tokens", corpus_token_count(corpus)}};
  out.finish();
}

void cmd_tag(const RunOptions& run, const std::string& model, const std::string& input,
             const std::string& out_dir, bool write_scores) {
  require_stage(run, model, {"train"}, "tag");
  require_stage(run, input, {"ingest", "prepare", "augment", "strip", "fetch"}, "tag");
  check_not_input(out_dir, {input, model});
  auto tagger = load_tagger(read_file(model));
  Corpus corpus = read_corpus(input);
  StageWriter out(run, "tag", out_dir);
  out.input("model", model);
  out.input("corpus", input);
  auto preds = tag_corpus(*tagger, corpus, run.config.threads, run.config.window_tokens);
  Corpus tagged;
  std::vector<TokenPrediction> flat;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    tagged.push_back(apply_predictions(corpus[d], preds[d]));
    flat.insert(flat.end(), preds[d].begin(), preds[d].end());
  }
  out.output("predictions.conll", serialize_conll(tagged));
  if (write_scores) out.output("scores.csv", score_matrix_csv(flat));
  out.counts() = {{"documents", tagged.size()}, {"tokens", flat.size()}, {"tagger", tagger->kind()}};
  out.finish();
}

void cmd_eval(const RunOptions& run, const std::string& gold, const std::string& pred,
              const std::string& out_dir, const std::string& scores) {
  require_stage(run, gold, kCorpusStages, "eval");
  require_stage(run, pred, {"tag"}, "eval");
  check_not_input(out_dir, {gold, pred});
  StageWriter out(run, "eval", out_dir);
  out.input("gold", gold);
  out.input("pred", pred);
  std::string scores_path = scores;
  if (scores_path.empty()) {
    auto beside = fs::path(pred).parent_path() / "scores.csv";
    if (fs::exists(beside)) scores_path = beside.string();
  }
  std::optional<std::vector<ScoreVector>> matrix;
  if (!scores_path.empty()) {
    out.input("scores", scores_path);
    matrix = parse_score_matrix_csv(read_file(scores_path));
  }
  auto r = report(read_corpus(gold), read_corpus(pred), std::move(matrix));
  out.output("metrics.json", metrics_json(r));
  out.output("per_class.csv", per_class_csv(r));
  out.counts() = {{"tokens", r.token_count}, {"classes", r.per_class.size()}};
  out.finish();
}

void cmd_nli(const RunOptions& run, const std::string& input, const std::string& out_dir) {
  require_stage(run, input, {"prepare", "augment", "strip", "tag", "fetch"}, "nli");
  check_not_input(out_dir, {input});
  const auto& cfg = run.config;
  const std::string statements_path = need_path(cfg.resolve(cfg.paths.statements), "statements");
  StageWriter out(run, "nli", out_dir);
  out.input("corpus", input);
  out.input("statements", statements_path);
  auto statements = load_statements(read_file(statements_path));
  if (cfg.synonyms) {
    const std::string thesaurus = cfg.resolve(cfg.paths.thesaurus);
    out.input("thesaurus", thesaurus);
    statements = expand_synonyms(statements, ThesaurusProvider(read_file(thesaurus)));
  }
  auto mentions = corpus_mentions(read_corpus(input));
  auto verdicts = cfg.nli_mode == "full" ? run_full(mentions, statements, cfg.threads)
                                         : run_restricted(mentions, statements, cfg.threads);
  auto rows = aggregate(verdicts, statements);
  out.output("verdicts.csv", verdicts_csv(verdicts));
  out.output("nli_aggregate.csv", aggregate_csv(rows));
  std::size_t dual = 0;
  for (const auto& v : verdicts) dual += v.dual_match;
  out.counts() = {{"nli_mode", cfg.nli_mode},
                  {"mentions", mentions.size()},
                  {"verdicts", verdicts.size()},
                  {"dual_matches", dual}};
  out.finish();
}

void cmd_analyze(const RunOptions& run, const std::string& input, const std::string& out_dir) {
  require_stage(run, input, {"prepare", "augment", "strip", "tag", "fetch"}, "analyze");
  check_not_input(out_dir, {input});
  StageWriter out(run, "analyze", out_dir);
  out.input("corpus", input);
  Corpus corpus = read_corpus(input);
  out.output("distribution_tokens.csv", distribution_csv(token_label_distribution(corpus)));
  out.output("distribution_mentions.csv", distribution_csv(mention_type_distribution(corpus)));
  out.output("richness_histogram.csv", richness_csv(entity_richness(corpus)));
  out.output("trigrams.csv", trigrams_csv(trigram_frequencies(corpus, run.config.top_k)));
  out.output("totals.json", totals_json(extraction_totals(corpus)));
  out.counts() = {{"documents", corpus.size()}, {"top_k", run.config.top_k}};
  out.finish();
}

// ---------------------------------------------------------------------------
// Fetch

FetchResult cmd_fetch(const RunOptions& run, const FetchOptions& o) {
  static const std::regex url_re(R"(^(https?)://([^/:]+)(?::(\d+))?(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(o.url, m, url_re)) throw ArgumentError("fetch: unsupported URL " + o.url);
  const std::string origin = m[1].str() + "://" + m[2].str() + (m[3].matched ? ":" + m[3].str() : "");
  std::string path = m[4].matched ? m[4].str() : "/";
  std::string name = fs::path(path.substr(0, path.find('?'))).filename().string();
  if (name.empty()) name = "download";

  fs::create_directories(o.out_dir);
  FetchResult result;
  result.file = (fs::path(o.out_dir) / name).string();
  const std::string checksums_path = (fs::path(o.out_dir) / "checksums.json").string();
  json checksums = json::object();
  if (fs::exists(checksums_path)) {
    try {
      checksums = json::parse(read_file(checksums_path));
    } catch (const json::exception&) {
      throw IntegrityError("fetch: unreadable " + checksums_path);
    }
  }
  if (fs::exists(result.file) && checksums.contains(name)) {
    const std::string recorded = checksums[name].value("sha256", "");
    const std::string actual = sha256_file(result.file);
    if (actual == recorded && (o.expected_sha256.empty() || o.expected_sha256 == actual)) {
      result.sha256 = actual;
      log::info("fetch: " + name + " already present with matching checksum");
      return result;
    }
  }

  httplib::Client client(origin);
  client.set_follow_location(true);
  client.set_connection_timeout(o.timeout_seconds, 0);
  client.set_read_timeout(o.timeout_seconds, 0);
  auto res = client.Get(path);
  if (!res) throw NetworkError("fetch: " + o.url + ": " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw NetworkError("fetch: " + o.url + ": HTTP status " + std::to_string(res->status));
  result.sha256 = sha256_hex(res->body);
  if (!o.expected_sha256.empty() && o.expected_sha256 != result.sha256)
    throw IntegrityError("fetch: checksum mismatch for " + name + ": expected " + o.expected_sha256 +
                         ", got " + result.sha256);
  write_file(result.file, res->body);
  result.downloaded = true;
  checksums[name] = {{"url", o.url}, {"sha256", result.sha256}};
  write_file(checksums_path, checksums.dump(2) + "\n");

  if (!o.adapter_path.empty()) {
    StageWriter out(run, "fetch", o.out_dir);
    out.input("download", result.file);
    out.input("adapter", o.adapter_path);
    out.output("corpus.conll", adapt_dataset(res->body, read_file(o.adapter_path)));
    out.finish();
  }
  return result;
}

std::string adapt_dataset(std::string_view raw, std::string_view adapter_json) {
  json a;
  try {
    a = json::parse(adapter_json);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("adapter: ") + e.what());
  }
  auto to_label = [](std::string name, std::size_t line) {
    for (char& c : name)
      if (c == ' ') c = '_';
    auto l = BioLabel::parse(name);
    if (!l) throw UnknownLabelError(line, name);
    return *l;
  };
  const std::string format = a.value("format", "");
  Corpus corpus;
  if (format == "conll") {
    for (const auto& rd : parse_conll_raw(raw)) {
      Document d{rd.id, {}, rd.provenance};
      for (const auto& rs : rd.sentences) {
        Sentence s{{}, rs.synthetic_id};
        for (const auto& t : rs.tokens) s.tokens.push_back({t.surface, to_label(t.label, t.line), t.confidence});
        d.sentences.push_back(std::move(s));
      }
      corpus.push_back(std::move(d));
    }
  } else if (format == "jsonl") {
    const std::string tokens_key = a.value("tokens", "tokens");
    const std::string labels_key = a.value("labels", "ner_tags");
    const std::string doc_key = a.value("document", "");
    const std::string conf_key = a.value("confidence", "");
    std::vector<std::string> names;
    if (a.contains("label_names")) names = a["label_names"].get<std::vector<std::string>>();
    std::istringstream in{std::string(raw)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json row;
      try {
        row = json::parse(line);
        const auto& toks = row.at(tokens_key);
        const auto& labs = row.at(labels_key);
        if (toks.size() != labs.size()) throw ParseError(line_no, "token and label counts differ");
        Sentence s;
        for (std::size_t i = 0; i < toks.size(); ++i) {
          std::string name;
          if (labs[i].is_number_integer()) {
            auto k = labs[i].get<std::size_t>();
            if (k >= names.size()) throw ParseError(line_no, "label index " + std::to_string(k) + " has no name");
            name = names[k];
          } else {
            name = labs[i].get<std::string>();
          }
          double conf = conf_key.empty() ? 1.0 : row.at(conf_key).at(i).get<double>();
          s.tokens.push_back({toks[i].get<std::string>(), to_label(name, line_no), conf});
        }
        std::string id = doc_key.empty() ? "line-" + std::to_string(line_no)
                                         : (row.at(doc_key).is_string() ? row.at(doc_key).get<std::string>()
                                                                        : row.at(doc_key).dump());
        if (corpus.empty() || corpus.back().id != id) corpus.push_back({id, {}, Provenance::kFullCorpus});
        repair_bio_in_place(s.tokens);
        corpus.back().sentences.push_back(std::move(s));
      } catch (const json::exception& e) {
        throw ParseError(line_no, std::string("adapter: ") + e.what());
      }
    }
  } else {
    throw ValidationError("adapter: format must be conll or jsonl");
  }
  for (auto& d : corpus) repair_document(d);
  return serialize_conll(corpus);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const NetworkError*>(&e)) return 4;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  return 1;
}

}  // namespace sdoh
