#include "mondrian/rng.hpp"

#include <cmath>

#include "mondrian/inference.hpp"

namespace mondrian {

std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, const StreamId& id) noexcept {
  std::uint64_t h = mix64(master_seed);
  h = mix64(h ^ id.replicate);
  h = mix64(h ^ id.level);
  h = mix64(h ^ id.tree);
  return h;
}

RngStream::RngStream(std::uint64_t master_seed, StreamId id)
    : master_seed_(master_seed), id_(id), engine_(derive_seed(master_seed, id)) {}

double RngStream::uniform_open() {
  constexpr double kStep = 1.0 / 9007199254740992.0;  // 2^-53
  return (static_cast<double>(engine_() >> 11) + 0.5) * kStep;
}

double RngStream::exponential(double rate) {
  return -std::log(uniform_open()) / rate;
}

double RngStream::normal() {
  return normal_quantile(uniform_open());
}

}  // namespace mondrian
