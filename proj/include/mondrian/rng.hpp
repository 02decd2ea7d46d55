#pragma once

#include <cstdint>
#include <random>

namespace mondrian {

/// Identifies one independent random stream inside an experiment.
///
/// `replicate` indexes Monte Carlo replications (or grid points in tuning),
/// `level` indexes the debiasing level r, and `tree` indexes the tree b.
/// Reserved level values tag streams that are not tree streams.
struct StreamId {
  std::uint64_t replicate = 0;
  std::uint64_t level = 0;
  std::uint64_t tree = 0;

  friend bool operator==(const StreamId&, const StreamId&) = default;
};

/// Level tag used for data generation streams.
inline constexpr std::uint64_t kDataLevel = 0xDA7A'0000'0000'0001ULL;
/// Level tag used for auxiliary streams (oracle sampling, query draws).
inline constexpr std::uint64_t kAuxLevel = 0xA0C5'0000'0000'0002ULL;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Hashes (master_seed, replicate, level, tree) into a single 64-bit seed.
std::uint64_t derive_seed(std::uint64_t master_seed, const StreamId& id) noexcept;

/// A reproducible random stream.
///
/// The engine is std::mt19937_64 (whose output sequence is fixed by the
/// standard) seeded with derive_seed(). Conversion to doubles is done here
/// rather than through <random> distributions, whose algorithms are
/// implementation-defined, so streams are bit-identical across platforms.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, StreamId id);

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  const StreamId& id() const noexcept { return id_; }

  /// Raw 64 random bits.
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1), on the 2^-53 grid offset by half a step.
  double uniform_open();

  /// Exp(rate) by inversion.
  double exponential(double rate);

  /// Standard normal by inversion through normal_quantile.
  double normal();

  /// A child stream of the same master seed.
  RngStream substream(StreamId id) const { return RngStream(master_seed_, id); }

 private:
  std::uint64_t master_seed_;
  StreamId id_;
  std::mt19937_64 engine_;
};

}  // namespace mondrian
