#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sdoh/errors.h"
#include "sdoh/labels.h"

namespace sdoh {

inline constexpr int kConfigVersion = 1;

struct PipelineConfig {
  std::string base_dir = ".";  // relative paths resolve against this
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string mode = "train";  // train | eval

  struct Paths {
    std::string mapping, section_rules, templates_train, templates_eval, lexicon_generated,
        statements, thesaurus, output_dir;
  } paths;

  double confidence_threshold = 0.90;
  std::size_t total_sets = 3000;
  double full_fraction = 0.5;
  std::vector<EntityType> merge_types = {EntityType::kAge, EntityType::kVaccine};

  std::string tagger_kind = "linear";  // linear | gazetteer
  std::size_t epochs = 10;
  std::size_t window_tokens = 512;
  std::map<std::string, double> class_weights;  // label -> weight, default 1.0

  std::string nli_mode = "restricted";  // restricted | full
  bool synonyms = false;
  std::size_t top_k = 25;

  std::string resolve(const std::string& path) const;
  // Canonical JSON (sorted keys, paths as written); hashed into manifests.
  std::string canonical_json() const;
  std::string hash() const;
};

// Unknown keys, bad values, a wrong version or a missing referenced file throw
// ValidationError.
PipelineConfig parse_config(std::string_view json_text, const std::string& base_dir);
PipelineConfig load_config(const std::string& path);
// Checks value ranges and that every non-empty path exists.
void validate_config(const PipelineConfig& config);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

// Raised when a command is given an input produced by the wrong stage.
class StageOrderError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct RunOptions {
  PipelineConfig config;
  bool force = false;  // skip stage-order checks
};

// ---------------------------------------------------------------------------
// Commands. Each writes its outputs and a manifest.json into `out_dir`.
// ---------------------------------------------------------------------------

struct IngestResult {
  std::size_t documents = 0;
  std::vector<std::string> dropped;
};
IngestResult cmd_ingest(const RunOptions& run, const std::string& raw_dir, const std::string& out_dir,
                        const std::string& rules_path = "");

struct PrepareCounts {
  std::size_t documents = 0;
  std::size_t sentences_in = 0, sentences_out = 0;
  std::size_t tokens_in = 0, tokens_out = 0;
  std::size_t merged_documents = 0;
  std::size_t confidence_relabeled = 0;
  std::size_t numeric_relabeled = 0;
  std::size_t all_o_dropped = 0;
};
PrepareCounts cmd_prepare(const RunOptions& run, const std::string& input, const std::string& out_dir,
                          const std::string& overlay = "");

struct AugmentCounts {
  std::size_t sets = 0, full_sets = 0, generated_sets = 0, sentences = 0;
};
AugmentCounts cmd_augment(const RunOptions& run, const std::string& input, const std::string& out_dir);

// Removes synthetic sentences; with an index file only the listed ids.
std::size_t cmd_strip(const RunOptions& run, const std::string& input, const std::string& out_dir,
                      const std::string& index_path = "");

void cmd_train(const RunOptions& run, const std::string& input, const std::string& out_dir);
void cmd_tag(const RunOptions& run, const std::string& model, const std::string& input,
             const std::string& out_dir, bool write_scores = true);
void cmd_eval(const RunOptions& run, const std::string& gold, const std::string& pred,
              const std::string& out_dir, const std::string& scores = "");
void cmd_nli(const RunOptions& run, const std::string& input, const std::string& out_dir);
void cmd_analyze(const RunOptions& run, const std::string& input, const std::string& out_dir);

struct FetchOptions {
  std::string url;
  std::string out_dir;
  std::string expected_sha256;  // optional
  std::string adapter_path;     // optional dataset adapter config
  int timeout_seconds = 30;
};
struct FetchResult {
  std::string file;
  std::string sha256;
  bool downloaded = false;  // false when the recorded checksum already matched
};
// NetworkError on connection failures, timeouts and non-200 replies;
// IntegrityError on a checksum mismatch.
FetchResult cmd_fetch(const RunOptions& run, const FetchOptions& options);

// Converts a downloaded dataset file to the pipeline CoNLL format.
//   {"format": "conll"}  labels with spaces become underscores
//   {"format": "jsonl", "tokens": "tokens", "labels": "ner_tags",
//    "document": "doc_id", "label_names": [...]}  one sentence per line
std::string adapt_dataset(std::string_view raw, std::string_view adapter_json);

// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

}  // namespace sdoh
