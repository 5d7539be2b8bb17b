#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "sdoh/log.h"
#include "sdoh/pipeline.h"

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string mode;
  bool force = false;
  bool quiet = false;
};

sdoh::RunOptions make_run(const Globals& g) {
  sdoh::RunOptions run;
  std::string path = g.config_path;
  if (path.empty())
    if (const char* env = std::getenv("SDOH_MINER_CONFIG")) path = env;
  if (!path.empty()) run.config = sdoh::load_config(path);
  if (g.seed) run.config.seed = *g.seed;
  if (g.threads) run.config.threads = *g.threads;
  if (!g.mode.empty()) run.config.mode = g.mode;
  run.force = g.force;
  sdoh::validate_config(run.config);
  return run;
}

std::string out_or_default(const std::string& out, const sdoh::RunOptions& run, const char* stage) {
  if (!out.empty()) return out;
  if (run.config.paths.output_dir.empty())
    throw sdoh::ArgumentError(std::string(stage) + ": pass --out or set paths.output_dir in the config");
  return run.config.resolve(run.config.paths.output_dir) + "/" + stage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sdoh-miner: corpus preparation, tagging, evaluation and inference for SDOH entities"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Pipeline config (default: $SDOH_MINER_CONFIG)");
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--mode", g.mode, "train or eval")->check(CLI::IsMember({"train", "eval"}));
  app.add_flag("--force", g.force, "Skip stage-order checks");
  app.add_flag("--quiet", g.quiet, "Suppress info messages");

  std::string in, out, overlay, rules, model, gold, pred, scores, index, raw, kind, nli_mode;
  std::string thesaurus;
  std::optional<std::size_t> total, epochs, top_k;
  std::optional<double> fraction, threshold;
  bool no_scores = false, synonyms = false;
  sdoh::FetchOptions fetch;

  auto* ingest = app.add_subcommand("ingest", "Extract case sections from raw reports into CoNLL");
  ingest->add_option("--raw", raw, "Directory of raw report files")->required();
  ingest->add_option("--rules", rules, "Section rule file");
  ingest->add_option("--out", out, "Output directory");

  auto* prepare = app.add_subcommand("prepare", "Refine labels, merge overlays and filter");
  prepare->add_option("--in", in, "Annotated CoNLL file")->required();
  prepare->add_option("--overlay", overlay, "Second annotation pass to merge");
  prepare->add_option("--threshold", threshold, "Confidence threshold");
  prepare->add_option("--out", out, "Output directory");

  auto* augment = app.add_subcommand("augment", "Generate and embed synthetic sentence sets");
  augment->add_option("--in", in, "Prepared corpus")->required();
  augment->add_option("--total", total, "Number of synthetic sets");
  augment->add_option("--fraction", fraction, "Share of sets drawn from the full lexicon");
  augment->add_option("--out", out, "Output directory");

  auto* strip = app.add_subcommand("strip", "Remove synthetic sentences");
  strip->add_option("--in", in, "Augmented corpus")->required();
  strip->add_option("--index", index, "synthetic_index.tsv; default removes every synthetic sentence");
  strip->add_option("--out", out, "Output directory");

  auto* train = app.add_subcommand("train", "Train a baseline tagger");
  train->add_option("--in", in, "Training corpus")->required();
  train->add_option("--kind", kind, "linear or gazetteer")->check(CLI::IsMember({"linear", "gazetteer"}));
  train->add_option("--epochs", epochs, "Training epochs");
  train->add_option("--out", out, "Output directory");

  auto* tag = app.add_subcommand("tag", "Tag a corpus with a trained model");
  tag->add_option("--model", model, "model.json from train")->required();
  tag->add_option("--in", in, "Corpus to tag")->required();
  tag->add_flag("--no-scores", no_scores, "Skip the per-token score matrix");
  tag->add_option("--out", out, "Output directory");

  auto* eval = app.add_subcommand("eval", "Score predictions against gold labels");
  eval->add_option("--gold", gold, "Gold corpus")->required();
  eval->add_option("--pred", pred, "predictions.conll from tag")->required();
  eval->add_option("--scores", scores, "Score matrix CSV (default: scores.csv beside --pred)");
  eval->add_option("--out", out, "Output directory");

  auto* nli = app.add_subcommand("nli", "Rule-based inference against the statement lists");
  nli->add_option("--in", in, "Labeled corpus")->required();
  nli->add_option("--nli-mode", nli_mode, "restricted or full")->check(CLI::IsMember({"restricted", "full"}));
  nli->add_option("--thesaurus", thesaurus, "Synonym table; enables expansion");
  nli->add_option("--out", out, "Output directory");

  auto* analyze = app.add_subcommand("analyze", "Label distributions, richness and trigrams");
  analyze->add_option("--in", in, "Labeled corpus")->required();
  analyze->add_option("--top-k", top_k, "Types kept for trigram counting");
  analyze->add_option("--out", out, "Output directory");

  auto* fetch_cmd = app.add_subcommand("fetch", "Download a dataset file and record its checksum");
  fetch_cmd->add_option("--url", fetch.url, "http(s) URL")->required();
  fetch_cmd->add_option("--sha256", fetch.expected_sha256, "Expected checksum");
  fetch_cmd->add_option("--adapter", fetch.adapter_path, "Dataset adapter config");
  fetch_cmd->add_option("--timeout", fetch.timeout_seconds, "Seconds")->check(CLI::PositiveNumber);
  fetch_cmd->add_option("--out", out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    sdoh::log::set_quiet(g.quiet);
    auto run = make_run(g);
    auto& cfg = run.config;
    if (threshold) cfg.confidence_threshold = *threshold;
    if (total) cfg.total_sets = *total;
    if (fraction) cfg.full_fraction = *fraction;
    if (!kind.empty()) cfg.tagger_kind = kind;
    if (epochs) cfg.epochs = *epochs;
    if (!nli_mode.empty()) cfg.nli_mode = nli_mode;
    if (!thesaurus.empty()) {
      cfg.paths.thesaurus = thesaurus;
      cfg.synonyms = true;
    }
    if (top_k) cfg.top_k = *top_k;
    sdoh::validate_config(cfg);

    if (*ingest) {
      auto r = sdoh::cmd_ingest(run, raw, out_or_default(out, run, "ingest"), rules);
      std::cout << r.documents << " documents, " << r.dropped.size() << " dropped\n";
    } else if (*prepare) {
      auto n = sdoh::cmd_prepare(run, in, out_or_default(out, run, "prepare"), overlay);
      std::cout << n.documents << " documents, " << n.sentences_out << " sentences kept\n";
    } else if (*augment) {
      auto n = sdoh::cmd_augment(run, in, out_or_default(out, run, "augment"));
      std::cout << n.sets << " synthetic sets (" << n.full_sets << " full, " << n.generated_sets
                << " generated)\n";
    } else if (*strip) {
      auto n = sdoh::cmd_strip(run, in, out_or_default(out, run, "strip"), index);
      std::cout << n << " synthetic sentences removed\n";
    } else if (*train) {
      sdoh::cmd_train(run, in, out_or_default(out, run, "train"));
    } else if (*tag) {
      sdoh::cmd_tag(run, model, in, out_or_default(out, run, "tag"), !no_scores);
    } else if (*eval) {
      sdoh::cmd_eval(run, gold, pred, out_or_default(out, run, "eval"), scores);
    } else if (*nli) {
      sdoh::cmd_nli(run, in, out_or_default(out, run, "nli"));
    } else if (*analyze) {
      sdoh::cmd_analyze(run, in, out_or_default(out, run, "analyze"));
    } else if (*fetch_cmd) {
      fetch.out_dir = out_or_default(out, run, "fetch");
      auto r = sdoh::cmd_fetch(run, fetch);
      std::cout << r.file << " " << r.sha256 << (r.downloaded ? "" : " (unchanged)") << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "sdoh-miner: " << e.what() << "\n";
    return sdoh::exit_code_for(e);
  }
  return 0;
}
