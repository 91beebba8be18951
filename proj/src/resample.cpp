#include "stabsel/resample.hpp"

#include <algorithm>
#include <stdexcept>

#include "stabsel/rng.hpp"

namespace stabsel {

void ResamplePlan::validate() const {
  if (n < 2) throw std::invalid_argument("ResamplePlan: need n >= 2");
  if (n_sub < 1 || n_sub >= n) throw std::invalid_argument("ResamplePlan: need 1 <= n_sub < n");
  if (B < 1) throw std::invalid_argument("ResamplePlan: need B >= 1");
}

ResampleIndex draw(const ResamplePlan& plan, int b) {
  plan.validate();
  if (b < 1 || b > plan.B) throw std::invalid_argument("draw: b out of 1..B");

  Rng rng(mix_seed(plan.master_seed, static_cast<std::uint64_t>(b)));
  ResampleIndex idx;
  idx.b = b;
  if (plan.kind == Resampling::Bootstrap) {
    idx.rows.resize(plan.n_sub);
    for (int i = 0; i < plan.n_sub; ++i)
      idx.rows[i] = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(plan.n)));
  } else {
    idx.rows = rng.sample_without_replacement(plan.n, plan.n_sub);
  }
  return idx;
}

long long contaminated_count(const ResampleIndex& idx, const std::vector<int>& contaminated_rows) {
  long long count = 0;
  for (int r : idx.rows)
    if (std::find(contaminated_rows.begin(), contaminated_rows.end(), r) != contaminated_rows.end())
      ++count;
  return count;
}

}  // namespace stabsel
