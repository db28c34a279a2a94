#ifndef COMPOPT_SAMPLING_HPP
#define COMPOPT_SAMPLING_HPP

#include <cstdint>
#include <vector>

namespace compopt {

/// SplitMix64 step: absorbs `v` into `h` and runs the finalizer. Used both as
/// the stream-derivation hash and as the generator update.
std::uint64_t mix64(std::uint64_t h, std::uint64_t v);

/// Deterministic 64-bit stream (SplitMix64). Each stream owns a disjoint role
/// so that consumers never share draws.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  /// Uniform on [0,1) with 53 random bits.
  double next_unit();

  /// Uniform integer in [0, bound). Unbiased (rejection sampling), bound >= 1.
  std::uint64_t next_below(std::uint64_t bound);

  /// Number of raw 64-bit draws taken so far.
  std::uint64_t position() const { return position_; }

 private:
  std::uint64_t state_;
  std::uint64_t position_ = 0;
};

enum class SampleMode { with_replacement, without_replacement };

/// A sampled list of component indices in [0, n).
struct IndexBatch {
  std::vector<int> indices;
  SampleMode mode = SampleMode::with_replacement;
  /// Draw counter of the source stream when the batch was taken.
  std::uint64_t source_seed_position = 0;
};

/// Draws `size` indices from [0, n). Without replacement requires size <= n
/// and yields distinct indices; with replacement allows size > n.
IndexBatch sample(int n, int size, SampleMode mode, RngStream& rng);

/// The deterministic batch [0, 1, ..., n-1]; consumes no randomness.
IndexBatch exact_cover(int n);

/// Derives one independent substream per role from a single master seed, so
/// reproducibility does not depend on loop structure.
class StreamFactory {
 public:
  explicit StreamFactory(std::uint64_t master) : master_(master) {}

  RngStream anchor_d1(std::uint64_t epoch) const;
  RngStream anchor_d2(std::uint64_t epoch) const;
  RngStream inner_batch(std::uint64_t epoch, std::uint64_t iter) const;
  RngStream pair(std::uint64_t epoch, std::uint64_t iter, std::uint64_t t) const;
  RngStream output_selection() const;

  /// General-purpose substream (problem generation, Monte Carlo checks).
  RngStream derived(std::uint64_t tag) const;
  RngStream derived(std::uint64_t tag, std::uint64_t a, std::uint64_t b) const;

  std::uint64_t master() const { return master_; }

 private:
  std::uint64_t master_;
};

}  // namespace compopt

#endif  // COMPOPT_SAMPLING_HPP
