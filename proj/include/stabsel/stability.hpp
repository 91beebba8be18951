#ifndef STABSEL_STABILITY_HPP
#define STABSEL_STABILITY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "stabsel/dataset.hpp"
#include "stabsel/resample.hpp"
#include "stabsel/selector.hpp"

namespace stabsel {

struct StableRule {
  enum class Kind { Threshold, Rank };
  Kind kind = Kind::Rank;
  double pi_thr = 0.5;  // Threshold variant
  int q = 5;            // Rank variant

  static StableRule threshold(double pi) { return {Kind::Threshold, pi, 0}; }
  static StableRule rank(int q) { return {Kind::Rank, 0.0, q}; }
};

struct FrequencyVector {
  std::vector<int> counts;     // selections per variable over the kept resamples
  std::vector<double> pi_hat;  // counts / effective_B
  int effective_B = 0;         // B - floor(gamma*B)
  double gamma = 0.0;
};

struct PerResample {
  ResampleIndex idx;
  SelectionResult sel;
  double loss = 0.0;  // mean squared residual on the resample's own rows
};

struct EnsembleRun {
  std::vector<PerResample> per_resample;
  std::vector<int> trimmed_set;  // 0-based resample positions, |.| = floor(gamma*B)
  FrequencyVector frequencies;
  std::vector<int> stable;       // 0-based variable indices, ascending
};

FrequencyVector aggregate_frequencies(const std::vector<std::vector<int>>& selected_sets, int p);

// Indices of the floor(gamma*B) largest losses; ties at the cut boundary are
// broken uniformly at random from the seeded stream.
std::vector<int> trim_set(const std::vector<double>& losses, double gamma, std::uint64_t tie_seed);

FrequencyVector trimmed_frequencies(const std::vector<std::vector<int>>& selected_sets,
                                    const std::vector<double>& losses, double gamma,
                                    std::uint64_t tie_seed, int p);

// Threshold: all variables with pi_hat >= pi_thr (possibly empty).
// Rank: the q variables with the largest pi_hat, boundary ties randomized.
std::vector<int> stable_set(const FrequencyVector& freq, const StableRule& rule,
                            std::uint64_t tie_seed);

// Full (trimmed) Stability Selection: B resample fits, in-sample losses,
// trimming, aggregation, stable set. gamma = 0 is the plain procedure and is
// bit-identical for every seed: seed feeds only the loss tie-breaking, while
// rank-boundary ties draw from the plan's stream. workers > 1 runs the fits
// concurrently; the outcome is identical either way.
EnsembleRun run_stability_selection(const Dataset& d, const ResamplePlan& plan,
                                    const SelectorConfig& sel_cfg, const StableRule& rule,
                                    double gamma, std::uint64_t seed, int workers = 1);

std::string ensemble_run_to_json(const EnsembleRun& run);

}  // namespace stabsel

#endif
