#ifndef STABSEL_RESAMPLE_HPP
#define STABSEL_RESAMPLE_HPP

#include <cstdint>
#include <vector>

namespace stabsel {

enum class Resampling { Bootstrap, Subsample };

struct ResamplePlan {
  Resampling kind = Resampling::Subsample;
  int n = 0;
  int n_sub = 0;
  int B = 0;
  std::uint64_t master_seed = 0;

  void validate() const;
};

struct ResampleIndex {
  int b = 0;               // 1..B
  std::vector<int> rows;   // 0-based; distinct for Subsample, multiset for Bootstrap
};

// Draws resample b from its own seed stream derived from (master_seed, b):
// the result does not depend on which other b's were drawn, or in what order.
ResampleIndex draw(const ResamplePlan& plan, int b);

// Entries of idx.rows (with multiplicity) lying in contaminated_rows.
long long contaminated_count(const ResampleIndex& idx, const std::vector<int>& contaminated_rows);

}  // namespace stabsel

#endif
