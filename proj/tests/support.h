#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sdoh/conll.h"
#include "sdoh/labels.h"
#include "sdoh/log.h"

namespace sdoh::testing {

inline std::string data_path(const std::string& name) { return std::string(SDOH_DATA_DIR) + "/" + name; }
inline std::string test_data_path(const std::string& name) {
  return std::string(SDOH_TEST_DATA_DIR) + "/" + name;
}

class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("sdoh-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path_.string(); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// Collects warnings for the lifetime of the object.
class WarningCapture {
 public:
  WarningCapture() {
    previous_ = log::set_sink([this](std::string_view level, std::string_view msg) {
      if (level == "warn") messages.emplace_back(msg);
    });
  }
  ~WarningCapture() { log::set_sink(previous_); }
  std::vector<std::string> messages;

 private:
  log::Sink previous_;
};

inline BioLabel L(const std::string& s) { return *BioLabel::parse(s); }

inline Sentence make_sentence(const std::vector<std::pair<std::string, std::string>>& toks) {
  Sentence s;
  for (const auto& [w, l] : toks) s.tokens.push_back({w, L(l), 1.0});
  return s;
}

inline BioLabel random_label(std::mt19937_64& rng) {
  return BioLabel::from_index(std::uniform_int_distribution<std::size_t>(0, kNumLabels - 1)(rng));
}

// Arbitrary labels, usually BIO-invalid.
inline Sentence random_sentence(std::mt19937_64& rng, std::size_t length) {
  Sentence s;
  for (std::size_t i = 0; i < length; ++i)
    s.tokens.push_back({"w" + std::to_string(rng() % 1000), random_label(rng), 1.0});
  return s;
}

// BIO-valid labels with spans of random length.
inline Sentence random_valid_sentence(std::mt19937_64& rng, std::size_t length) {
  Sentence s;
  while (s.tokens.size() < length) {
    if (rng() % 3 == 0) {
      s.tokens.push_back({"o" + std::to_string(rng() % 50), BioLabel::outside(), 1.0});
      continue;
    }
    auto type = all_entity_types()[rng() % kNumEntityTypes];
    std::size_t span = 1 + rng() % 3;
    for (std::size_t k = 0; k < span && s.tokens.size() < length; ++k)
      s.tokens.push_back({"e" + std::to_string(rng() % 50), k == 0 ? BioLabel::begin(type) : BioLabel::inside(type), 1.0});
  }
  return s;
}

}  // namespace sdoh::testing
