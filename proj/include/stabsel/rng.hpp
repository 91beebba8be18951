#ifndef STABSEL_RNG_HPP
#define STABSEL_RNG_HPP

#include <cstdint>
#include <vector>

namespace stabsel {

// SplitMix64 step; used for seed expansion and stream derivation.
std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent stream seed from (seed, stream). The same pair
// always yields the same value, on every platform, so resamples, replications
// and tie-breaks can be seeded without caring about evaluation order.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

// xoshiro256++ with explicit, platform-independent distributions on top.
// std::normal_distribution & friends are implementation-defined, which would
// break the bit-reproducibility contract, so the few variates we need are
// generated here directly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();

  // Uniform integer in [0, bound), unbiased (rejection sampling). bound >= 1.
  std::uint64_t uniform_below(std::uint64_t bound);

  // Standard normal via Marsaglia's polar method (one spare cached).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  // First k entries of a random permutation of {0,...,n-1}.
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace stabsel

#endif
