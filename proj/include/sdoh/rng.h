#pragma once

#include <cstdint>
#include <string_view>

namespace sdoh {

// Counter-based randomness. Every random decision is derived from
// (seed, purpose tag, index), so results do not depend on the order in which
// decisions are evaluated or on how work is split across threads.
class DerivedStream {
 public:
  DerivedStream(std::uint64_t seed, std::string_view purpose, std::uint64_t index);

  std::uint64_t next();
  // Uniform integer in [0, bound); bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  // Uniform double in [0, 1).
  double unit();

 private:
  std::uint64_t state_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace sdoh
