#include "compopt/sampling.hpp"

#include <numeric>

#include "compopt/errors.hpp"

namespace compopt {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kTag = 0x632BE59BD9B4E019ULL;

// Stream role tags.
enum Role : std::uint64_t {
  kRoleD1 = 1,
  kRoleD2 = 2,
  kRoleInnerBatch = 3,
  kRolePair = 4,
  kRoleOutput = 5,
  kRoleDerived = 6,
};
}  // namespace

std::uint64_t mix64(std::uint64_t h, std::uint64_t v) {
  h += kGamma * (v + kTag);
  h = (h ^ (h >> 30)) * 0xBF58476D1CE4E5B9ULL;
  h = (h ^ (h >> 27)) * 0x94D049BB133111EBULL;
  return h ^ (h >> 31);
}

std::uint64_t RngStream::next_u64() {
  ++position_;
  std::uint64_t z = (state_ += kGamma);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double RngStream::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::next_below(std::uint64_t bound) {
  if (bound == 0) throw ArgumentError("next_below: bound must be positive");
  if (bound == 1) return 0;
  // Rejection sampling over the largest multiple of bound.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t draw;
  do {
    draw = next_u64();
  } while (draw >= limit);
  return draw % bound;
}

IndexBatch sample(int n, int size, SampleMode mode, RngStream& rng) {
  if (n < 1) throw ArgumentError("sample: n must be positive");
  if (size < 1) throw ArgumentError("sample: size must be positive");
  if (mode == SampleMode::without_replacement && size > n)
    throw ArgumentError("sample: size exceeds n in without_replacement mode");

  IndexBatch batch;
  batch.mode = mode;
  batch.source_seed_position = rng.position();
  batch.indices.reserve(static_cast<std::size_t>(size));

  if (mode == SampleMode::with_replacement) {
    for (int t = 0; t < size; ++t)
      batch.indices.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n))));
  } else {
    // Partial Fisher-Yates over [0, n).
    std::vector<int> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
    for (int t = 0; t < size; ++t) {
      const std::uint64_t r =
          rng.next_below(static_cast<std::uint64_t>(n - t)) + static_cast<std::uint64_t>(t);
      std::swap(pool[static_cast<std::size_t>(t)], pool[static_cast<std::size_t>(r)]);
      batch.indices.push_back(pool[static_cast<std::size_t>(t)]);
    }
  }
  return batch;
}

IndexBatch exact_cover(int n) {
  if (n < 1) throw ArgumentError("exact_cover: n must be positive");
  IndexBatch batch;
  batch.mode = SampleMode::without_replacement;
  batch.indices.resize(static_cast<std::size_t>(n));
  std::iota(batch.indices.begin(), batch.indices.end(), 0);
  return batch;
}

RngStream StreamFactory::anchor_d1(std::uint64_t epoch) const {
  return RngStream(mix64(mix64(master_, kRoleD1), epoch));
}

RngStream StreamFactory::anchor_d2(std::uint64_t epoch) const {
  return RngStream(mix64(mix64(master_, kRoleD2), epoch));
}

RngStream StreamFactory::inner_batch(std::uint64_t epoch, std::uint64_t iter) const {
  return RngStream(mix64(mix64(mix64(master_, kRoleInnerBatch), epoch), iter));
}

RngStream StreamFactory::pair(std::uint64_t epoch, std::uint64_t iter, std::uint64_t t) const {
  return RngStream(mix64(mix64(mix64(mix64(master_, kRolePair), epoch), iter), t));
}

RngStream StreamFactory::output_selection() const {
  return RngStream(mix64(master_, kRoleOutput));
}

RngStream StreamFactory::derived(std::uint64_t tag) const {
  return RngStream(mix64(mix64(master_, kRoleDerived), tag));
}

RngStream StreamFactory::derived(std::uint64_t tag, std::uint64_t a, std::uint64_t b) const {
  return RngStream(mix64(mix64(mix64(mix64(master_, kRoleDerived), tag), a), b));
}

}  // namespace compopt
