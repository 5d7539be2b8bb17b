#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "sdoh/conll.h"
#include "sdoh/errors.h"
#include "sdoh/metrics.h"
#include "sdoh/pipeline.h"
#include "sdoh/text.h"
#include "support.h"

using namespace sdoh;
using sdoh::testing::TempDir;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const char* kSample =
    "-DOCSTART- doc1\n"
    "A\tO\t1.0\n72\tB-Age\t0.95\nyear\tI-Age\t0.95\nold\tI-Age\t0.95\nwoman\tB-Gender\t0.5\n\n"
    "She\tO\t1.0\nsmokes\tB-Substance\t0.99\n3\tB-Substance\t0.99\npacks\tO\t1.0\n\n"
    "Nothing\tO\t1.0\nhere\tO\t1.0\n\n"
    "-DOCSTART- doc2\n"
    "He\tO\t1.0\nis\tO\t1.0\nuninsured\tB-Insurance_Status\t0.99\n\n";

RunOptions base_run() { return RunOptions{load_config(SDOH_CONFIG_FILE), false}; }

json manifest(const std::string& dir) { return json::parse(read_file(dir + "/manifest.json")); }

std::string write(const TempDir& t, const std::string& name, const std::string& content) {
  fs::create_directories(fs::path(t / name).parent_path());
  write_file(t / name, content);
  return t / name;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string("\"") + SDOH_MINER_BIN + "\" " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

TEST_CASE("config loading") {
  auto run = base_run();
  CHECK(run.config.seed == 20240611);
  CHECK(fs::exists(run.config.resolve(run.config.paths.mapping)));
  CHECK(run.config.hash().size() == 64);
  CHECK(run.config.hash() == base_run().config.hash());

  const std::string dir = fs::path(SDOH_CONFIG_FILE).parent_path().string();
  auto ok = json::parse(read_file(SDOH_CONFIG_FILE));
  auto with = [&](auto edit) {
    json j = ok;
    edit(j);
    return j.dump();
  };
  CHECK_THROWS_AS(parse_config(with([](json& j) { j["extra"] = 1; }), dir), ValidationError);
  CHECK_THROWS_AS(parse_config(with([](json& j) { j["tagger"]["depth"] = 1; }), dir), ValidationError);
  CHECK_THROWS_AS(parse_config(with([](json& j) { j["version"] = 2; }), dir), ValidationError);
  CHECK_THROWS_AS(parse_config(with([](json& j) { j["mode"] = "test"; }), dir), ValidationError);
  CHECK_THROWS_AS(parse_config(with([](json& j) { j["thresholds"]["confidence"] = 1.5; }), dir), ValidationError);
  CHECK_THROWS_AS(parse_config(with([](json& j) { j["paths"]["mapping"] = "nope.json"; }), dir), ValidationError);
  CHECK_THROWS_AS(parse_config(with([](json& j) { j["nli"]["synonyms"] = true; }), dir), ValidationError);
  CHECK_THROWS_AS(parse_config(with([](json& j) { j["tagger"]["class_weights"]["B-Hobby"] = 2; }), dir),
                  ValidationError);
  CHECK_THROWS_AS(parse_config(with([](json& j) { j["seed"] = "x"; }), dir), ValidationError);
  CHECK_THROWS_AS(parse_config("{", dir), ValidationError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ValidationError);
  auto other = parse_config(with([](json& j) { j["seed"] = 1; }), dir);
  CHECK(other.hash() != run.config.hash());
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("ingest") {
  TempDir t;
  write(t, "raw/a report.txt", "Abstract\nx\nCase Report\nA 72-year-old woman smokes.\nDiscussion\ny\n");
  write(t, "raw/b.txt", "Case presentation\nHe is uninsured. He lives alone.\n");
  write(t, "raw/c.txt", "Introduction\nNo case section.\n");
  auto run = base_run();
  auto r = cmd_ingest(run, t / "raw", t / "out1");
  CHECK(r.documents == 2);
  CHECK(r.dropped == std::vector<std::string>{"c"});
  auto corpus = parse_conll(read_file(t / "out1/corpus.conll"));
  REQUIRE(corpus.size() == 2);
  CHECK(corpus[0].id == "a_report");
  CHECK(corpus[1].sentences.size() == 2);
  CHECK(read_file(t / "out1/dropped.txt") == "c\n");
  auto m = manifest(t / "out1");
  CHECK(m["stage"] == "ingest");
  CHECK(m["counts"]["dropped"] == 1);
  CHECK(m["config_hash"] == run.config.hash());
  CHECK(m["outputs"]["corpus.conll"] == sha256_file(t / "out1/corpus.conll"));

  cmd_ingest(run, t / "raw", t / "out2");
  CHECK(read_file(t / "out1/corpus.conll") == read_file(t / "out2/corpus.conll"));
  CHECK(read_file(t / "out1/manifest.json") == read_file(t / "out2/manifest.json"));

  fs::create_directories(t / "empty");
  CHECK_THROWS_AS(cmd_ingest(run, t / "empty", t / "out3"), DataError);
  CHECK_THROWS_AS(cmd_ingest(run, t / "missing", t / "out3"), DataError);
  CHECK_THROWS_AS(cmd_ingest(run, t / "raw", t / "raw"), ArgumentError);
}

TEST_CASE("prepare in train and eval mode") {
  TempDir t;
  auto in = write(t, "in/corpus.conll", kSample);
  auto run = base_run();
  auto n = cmd_prepare(run, in, t / "train");
  CHECK(n.documents == 2);
  CHECK(n.sentences_in == 4);
  CHECK(n.confidence_relabeled == 1);
  CHECK(n.numeric_relabeled == 1);
  CHECK(n.all_o_dropped == 1);
  CHECK(n.sentences_out == 3);
  auto m = manifest(t / "train");
  CHECK(m["stage"] == "prepare");
  CHECK(m["mode"] == "train");
  CHECK(m["counts"]["removed"]["confidence_filter"] == 1);
  CHECK(m["counts"]["removed"]["numeric_filter"] == 1);
  CHECK(m["counts"]["removed"]["all_o_sentences"] == 1);
  auto c = parse_conll(read_file(t / "train/corpus.conll"));
  CHECK(c[0].sentences[0].tokens[4].label.is_outside());
  CHECK(c[0].sentences[1].tokens[2].label.is_outside());
  CHECK(c[0].sentences[0].tokens[1].label == sdoh::testing::L("B-Age"));

  run.config.mode = "eval";
  auto e = cmd_prepare(run, in, t / "eval");
  CHECK(e.all_o_dropped == 0);
  CHECK(e.sentences_out == 4);
  CHECK(manifest(t / "eval")["counts"]["removed"]["all_o_sentences"] == 0);
  CHECK_THROWS_AS(cmd_prepare(run, in, t / "in"), ArgumentError);
  CHECK_THROWS_AS(cmd_prepare(run, t / "nope.conll", t / "x"), DataError);
}

TEST_CASE("prepare merges an overlay") {
  TempDir t;
  auto in = write(t, "in/corpus.conll", "-DOCSTART- d\n72\tO\t1.0\nyears\tO\t1.0\n\n");
  auto ov = write(t, "ov/corpus.conll", "-DOCSTART- d\n72\tB-Age\t1.0\nyears\tI-Age\t1.0\n\n");
  auto n = cmd_prepare(base_run(), in, t / "out", ov);
  CHECK(n.merged_documents == 1);
  auto c = parse_conll(read_file(t / "out/corpus.conll"));
  CHECK(c[0].sentences[0].tokens[1].label == sdoh::testing::L("I-Age"));
}

TEST_CASE("augment and strip") {
  TempDir t;
  auto in = write(t, "in/corpus.conll", kSample);
  auto run = base_run();
  cmd_prepare(run, in, t / "prep");
  const std::string prepared = read_file(t / "prep/corpus.conll");

  run.config.total_sets = 0;
  auto zero = cmd_augment(run, t / "prep/corpus.conll", t / "aug0");
  CHECK(zero.sets == 0);
  CHECK(read_file(t / "aug0/corpus.conll") == prepared);

  run.config.total_sets = 40;
  auto n = cmd_augment(run, t / "prep/corpus.conll", t / "aug");
  CHECK(n.sets == 40);
  CHECK(n.full_sets == 20);
  CHECK(n.generated_sets == 20);
  auto index = read_file(t / "aug/synthetic_index.tsv");
  CHECK(std::count(index.begin(), index.end(), '\n') == 40);
  auto augmented = parse_conll(read_file(t / "aug/corpus.conll"));
  std::size_t synthetic = 0;
  for (const auto& d : augmented)
    for (const auto& s : d.sentences) synthetic += s.synthetic_id.has_value();
  CHECK(synthetic == n.sentences);

  cmd_augment(run, t / "prep/corpus.conll", t / "aug_again");
  CHECK(read_file(t / "aug/corpus.conll") == read_file(t / "aug_again/corpus.conll"));

  CHECK(cmd_strip(run, t / "aug/corpus.conll", t / "strip", t / "aug/synthetic_index.tsv") == n.sentences);
  CHECK(read_file(t / "strip/corpus.conll") == prepared);
  cmd_strip(run, t / "aug/corpus.conll", t / "strip_all");
  CHECK(read_file(t / "strip_all/corpus.conll") == prepared);

  run.config.mode = "eval";
  auto ev = cmd_augment(run, t / "prep/corpus.conll", t / "aug_eval");
  CHECK(ev.sets == 40);
  CHECK(read_file(t / "aug_eval/corpus.conll").find("SYN-eval-") != std::string::npos);
}

TEST_CASE("stage order") {
  TempDir t;
  auto in = write(t, "in/corpus.conll", kSample);
  auto run = base_run();
  CHECK_THROWS_AS(cmd_augment(run, in, t / "aug"), StageOrderError);
  CHECK_THROWS_AS(cmd_train(run, in, t / "model"), StageOrderError);
  cmd_prepare(run, in, t / "prep");
  CHECK_THROWS_AS(cmd_strip(run, t / "prep/corpus.conll", t / "strip"), StageOrderError);
  CHECK_THROWS_AS(cmd_tag(run, t / "prep/corpus.conll", t / "prep/corpus.conll", t / "tag"), StageOrderError);
  CHECK_THROWS_AS(cmd_augment(run, t / "missing/corpus.conll", t / "aug"), DataError);
  RunOptions forced = run;
  forced.force = true;
  run.config.total_sets = 0;
  forced.config.total_sets = 0;
  CHECK_NOTHROW(cmd_augment(forced, in, t / "aug_forced"));

  // An edited input only warns.
  write_file(t / "prep/corpus.conll", read_file(t / "prep/corpus.conll") + "\n");
  sdoh::testing::WarningCapture capture;
  CHECK_NOTHROW(cmd_augment(run, t / "prep/corpus.conll", t / "aug2"));
  REQUIRE(capture.messages.size() == 1);
  CHECK(capture.messages[0].find("hash mismatch") != std::string::npos);
}

TEST_CASE("train, tag, eval, nli and analyze") {
  TempDir t;
  auto run = base_run();
  run.config.total_sets = 30;
  auto in = write(t, "in/corpus.conll", kSample);
  cmd_prepare(run, in, t / "prep");
  cmd_augment(run, t / "prep/corpus.conll", t / "aug");

  cmd_train(run, t / "aug/corpus.conll", t / "model");
  CHECK(manifest(t / "model")["stage"] == "train");
  cmd_tag(run, t / "model/model.json", t / "aug/corpus.conll", t / "tag");
  auto pred = parse_conll(read_file(t / "tag/predictions.conll"));
  auto gold = parse_conll(read_file(t / "aug/corpus.conll"));
  CHECK_NOTHROW(check_aligned(gold, pred));
  auto scores = read_file(t / "tag/scores.csv");
  CHECK(std::count(scores.begin(), scores.end(), '\n') == static_cast<long>(corpus_token_count(gold) + 1));
  cmd_eval(run, t / "aug/corpus.conll", t / "tag/predictions.conll", t / "eval");
  auto metrics = json::parse(read_file(t / "eval/metrics.json"));
  CHECK(metrics["token_count"] == corpus_token_count(gold));
  CHECK(metrics["accuracy"].get<double>() > 0.9);
  CHECK(manifest(t / "eval")["inputs"].contains("scores"));

  // Identical gold and prediction.
  auto copy = write(t, "copy/predictions.conll", read_file(t / "aug/corpus.conll"));
  RunOptions forced = run;
  forced.force = true;
  cmd_eval(forced, t / "aug/corpus.conll", copy, t / "eval_same");
  auto same = json::parse(read_file(t / "eval_same/metrics.json"));
  CHECK(same["accuracy"] == 1.0);
  CHECK(same["macro_f1_all"] == 1.0);
  CHECK(same["macro_f1_excl_o"] == 1.0);
  CHECK(same["macro_auc_ovr"] == 1.0);
  CHECK_THROWS_AS(cmd_eval(run, t / "aug/corpus.conll", copy, t / "eval_x"), StageOrderError);

  run.config.tagger_kind = "gazetteer";
  cmd_train(run, t / "aug/corpus.conll", t / "gaz");
  CHECK(read_file(t / "gaz/model.json").find("\"gazetteer\"") != std::string::npos);
  cmd_tag(run, t / "gaz/model.json", t / "aug/corpus.conll", t / "gaz_tag", false);
  CHECK_FALSE(fs::exists(t / "gaz_tag/scores.csv"));

  cmd_nli(run, t / "prep/corpus.conll", t / "nli");
  run.config.nli_mode = "full";
  cmd_nli(run, t / "prep/corpus.conll", t / "nli_full");
  auto restricted = manifest(t / "nli")["counts"];
  auto full = manifest(t / "nli_full")["counts"];
  CHECK(restricted["mentions"] == 3);
  CHECK(restricted["verdicts"] == 3);
  CHECK(full["verdicts"] == 3 * kNumEntityTypes);
  auto verdicts = read_file(t / "nli/verdicts.csv");
  CHECK(verdicts.find("Insurance_Status,uninsured,Insurance_Status,Contradiction") != std::string::npos);
  CHECK(verdicts.find("Age,72 year old,Age,Entailment") != std::string::npos);

  cmd_analyze(run, t / "tag/predictions.conll", t / "analyze");
  for (const char* f : {"distribution_tokens.csv", "distribution_mentions.csv", "richness_histogram.csv",
                        "trigrams.csv", "totals.json"})
    CHECK(fs::exists(t / (std::string("analyze/") + f)));
  auto totals = json::parse(read_file(t / "analyze/totals.json"));
  CHECK(totals["documents"] == 2);
}

TEST_CASE("fetch") {
  httplib::Server server;
  const std::string body = "-DOCSTART- web1\nShe\tO\nis\tO\nuninsured\tB-Insurance Status\n\n";
  server.Get("/files/data.conll", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(body, "text/plain");
  });
  server.Get("/moved", [](const httplib::Request&, httplib::Response& res) { res.set_redirect("/files/data.conll"); });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string origin = "http://127.0.0.1:" + std::to_string(port);

  TempDir t;
  auto run = base_run();
  auto adapter = write(t, "adapter.json", R"({"format": "conll"})");
  FetchOptions o{origin + "/files/data.conll", t / "fetch", sha256_hex(body), adapter, 5};
  auto first = cmd_fetch(run, o);
  CHECK(first.downloaded);
  CHECK(first.sha256 == sha256_hex(body));
  CHECK(read_file(first.file) == body);
  auto sums = json::parse(read_file(t / "fetch/checksums.json"));
  CHECK(sums["data.conll"]["sha256"] == sha256_hex(body));
  auto corpus = parse_conll(read_file(t / "fetch/corpus.conll"));
  CHECK(corpus[0].sentences[0].tokens[2].label == sdoh::testing::L("B-Insurance_Status"));
  CHECK(manifest(t / "fetch")["stage"] == "fetch");

  auto second = cmd_fetch(run, o);
  CHECK_FALSE(second.downloaded);
  CHECK(second.sha256 == first.sha256);

  cmd_train(run, t / "fetch/corpus.conll", t / "model");

  FetchOptions redirected{origin + "/moved", t / "redir", "", "", 5};
  CHECK(read_file(cmd_fetch(run, redirected).file) == body);

  FetchOptions bad{origin + "/files/data.conll", t / "bad", std::string(64, '0'), "", 5};
  CHECK_THROWS_AS(cmd_fetch(run, bad), IntegrityError);
  CHECK_FALSE(fs::exists(t / "bad/data.conll"));
  FetchOptions missing{origin + "/files/none.conll", t / "none", "", "", 5};
  CHECK_THROWS_AS(cmd_fetch(run, missing), NetworkError);
  FetchOptions refused{"http://127.0.0.1:1/x.conll", t / "refused", "", "", 2};
  CHECK_THROWS_AS(cmd_fetch(run, refused), NetworkError);
  FetchOptions scheme{"ftp://example.org/x", t / "ftp", "", "", 2};
  CHECK_THROWS_AS(cmd_fetch(run, scheme), ArgumentError);

  server.stop();
  th.join();
}

TEST_CASE("dataset adapters") {
  const std::string jsonl =
      R"({"doc": "p1", "tokens": ["A", "72", "year"], "tags": [0, 1, 2]})" "\n"
      R"({"doc": "p1", "tokens": ["smoker"], "tags": [3]})" "\n"
      R"({"doc": "p2", "tokens": ["fine"], "tags": [0]})" "\n";
  const std::string adapter =
      R"({"format": "jsonl", "tokens": "tokens", "labels": "tags", "document": "doc",
          "label_names": ["O", "B-Age", "I-Age", "I-Substance"]})";
  auto c = parse_conll(adapt_dataset(jsonl, adapter));
  REQUIRE(c.size() == 2);
  CHECK(c[0].sentences.size() == 2);
  CHECK(c[0].sentences[0].tokens[2].label == sdoh::testing::L("I-Age"));
  CHECK(c[0].sentences[1].tokens[0].label == sdoh::testing::L("B-Substance"));
  CHECK_THROWS_AS(adapt_dataset(R"({"doc": "p", "tokens": ["a"], "tags": [9]})", adapter), ParseError);
  CHECK_THROWS_AS(adapt_dataset(R"({"doc": "p", "tokens": ["a", "b"], "tags": [0]})", adapter), ParseError);
  CHECK_THROWS_AS(adapt_dataset("{", adapter), ParseError);
  CHECK_THROWS_AS(adapt_dataset("", R"({"format": "xml"})"), ValidationError);
  CHECK_THROWS_AS(adapt_dataset("-DOCSTART- d\nx\tB-Hobby\n\n", R"({"format": "conll"})"), UnknownLabelError);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ValidationError("x")) == 2);
  CHECK(exit_code_for(StageOrderError("x")) == 2);
  CHECK(exit_code_for(DataError("x")) == 3);
  CHECK(exit_code_for(IntegrityError("x")) == 3);
  CHECK(exit_code_for(NetworkError("x")) == 4);
  CHECK(exit_code_for(std::runtime_error("x")) == 1);
}

TEST_CASE("command line") {
  TempDir t;
  auto in = write(t, "in/corpus.conll", kSample);
  const std::string cfg = q(SDOH_CONFIG_FILE);
  CHECK(run_cli("--config " + cfg + " prepare --in " + q(in) + " --out " + q(t / "prep")) == 0);
  CHECK(fs::exists(t / "prep/manifest.json"));
  CHECK(run_cli("--config " + cfg + " --quiet augment --in " + q(t / "prep/corpus.conll") + " --total 10 --out " +
                q(t / "aug")) == 0);
  CHECK(manifest(t / "aug")["counts"]["sets"] == 10);
  CHECK(run_cli("--config " + cfg + " augment --in " + q(in) + " --out " + q(t / "aug2")) == 2);
  CHECK(run_cli("--config " + cfg + " --force augment --in " + q(in) + " --total 0 --out " + q(t / "aug3")) == 0);
  CHECK(run_cli("--config " + cfg + " analyze --in " + q(t / "none/corpus.conll") + " --out " + q(t / "a")) == 3);
  CHECK(run_cli("--config " + q(t / "missing.json") + " analyze --in " + q(in) + " --out " + q(t / "a")) == 2);
  CHECK(run_cli("--config " + cfg + " bogus") == 2);
  CHECK(run_cli("--config " + cfg + " fetch --url http://127.0.0.1:1/x --timeout 2 --out " + q(t / "f")) == 4);
  CHECK(run_cli("--config " + cfg + " --mode eval prepare --in " + q(in) + " --out " + q(t / "prep_eval")) == 0);
  CHECK(manifest(t / "prep_eval")["mode"] == "eval");
}
