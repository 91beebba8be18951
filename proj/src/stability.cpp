#include "stabsel/stability.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "stabsel/math_util.hpp"
#include "stabsel/rng.hpp"

namespace stabsel {

namespace {
constexpr std::uint64_t kStreamTrimTies = 101;
constexpr std::uint64_t kStreamRankTies = 102;

// Top-k positions of `values` with boundary ties resolved uniformly at
// random. Positions with values strictly above the cut are always included.
std::vector<int> top_k_with_random_ties(const std::vector<double>& values, int k,
                                        std::uint64_t tie_seed) {
  const int n = static_cast<int>(values.size());
  if (k <= 0) return {};
  if (k > n) throw std::invalid_argument("top_k_with_random_ties: k > size");

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&values](int a, int b) { return values[a] > values[b]; });

  const double cut = values[order[k - 1]];
  std::vector<int> chosen;
  std::vector<int> boundary;
  for (int i : order) {
    if (values[i] > cut)
      chosen.push_back(i);
    else if (values[i] == cut)
      boundary.push_back(i);
  }
  const int need = k - static_cast<int>(chosen.size());
  if (need == static_cast<int>(boundary.size())) {
    chosen.insert(chosen.end(), boundary.begin(), boundary.end());
  } else {
    Rng rng(tie_seed);
    for (int i = 0; i < need; ++i) {
      const int j = i + static_cast<int>(rng.uniform_below(boundary.size() - i));
      std::swap(boundary[i], boundary[j]);
      chosen.push_back(boundary[i]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

FrequencyVector count_frequencies(const std::vector<std::vector<int>>& selected_sets,
                                  const std::vector<int>& skip, int p, double gamma) {
  FrequencyVector freq;
  freq.gamma = gamma;
  freq.counts.assign(p, 0);
  std::vector<char> skipped(selected_sets.size(), 0);
  for (int b : skip) skipped[b] = 1;
  int kept = 0;
  for (int b = 0; b < static_cast<int>(selected_sets.size()); ++b) {
    if (skipped[b]) continue;
    ++kept;
    for (int j : selected_sets[b]) {
      if (j < 0 || j >= p) throw std::invalid_argument("selected set index out of 0..p-1");
      ++freq.counts[j];
    }
  }
  if (kept == 0) throw std::invalid_argument("no resamples left to aggregate");
  freq.effective_B = kept;
  freq.pi_hat.resize(p);
  for (int j = 0; j < p; ++j) freq.pi_hat[j] = static_cast<double>(freq.counts[j]) / kept;
  return freq;
}
}  // namespace

FrequencyVector aggregate_frequencies(const std::vector<std::vector<int>>& selected_sets, int p) {
  if (selected_sets.empty()) throw std::invalid_argument("aggregate_frequencies: empty input");
  return count_frequencies(selected_sets, {}, p, 0.0);
}

std::vector<int> trim_set(const std::vector<double>& losses, double gamma, std::uint64_t tie_seed) {
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("trim_set: gamma must lie in [0,1)");
  const int B = static_cast<int>(losses.size());
  const int t = static_cast<int>(floor_gaussian(gamma * B));
  return top_k_with_random_ties(losses, t, tie_seed);
}

FrequencyVector trimmed_frequencies(const std::vector<std::vector<int>>& selected_sets,
                                    const std::vector<double>& losses, double gamma,
                                    std::uint64_t tie_seed, int p) {
  if (selected_sets.empty()) throw std::invalid_argument("trimmed_frequencies: empty input");
  if (selected_sets.size() != losses.size())
    throw std::invalid_argument("trimmed_frequencies: losses/sets length mismatch");
  const int B = static_cast<int>(losses.size());
  const int t = static_cast<int>(floor_gaussian(gamma * B));
  if (t >= B) throw std::invalid_argument("trimmed_frequencies: all resamples would be trimmed");
  return count_frequencies(selected_sets, trim_set(losses, gamma, tie_seed), p, gamma);
}

std::vector<int> stable_set(const FrequencyVector& freq, const StableRule& rule,
                            std::uint64_t tie_seed) {
  const int p = static_cast<int>(freq.pi_hat.size());
  if (rule.kind == StableRule::Kind::Threshold) {
    std::vector<int> out;
    for (int j = 0; j < p; ++j)
      if (freq.pi_hat[j] >= rule.pi_thr) out.push_back(j);
    return out;
  }
  if (rule.q > p) throw std::invalid_argument("stable_set: rank q exceeds p");
  return top_k_with_random_ties(freq.pi_hat, rule.q, tie_seed);
}

EnsembleRun run_stability_selection(const Dataset& d, const ResamplePlan& plan,
                                    const SelectorConfig& sel_cfg, const StableRule& rule,
                                    double gamma, std::uint64_t seed, int workers) {
  plan.validate();
  if (plan.n != d.n()) throw std::invalid_argument("run_stability_selection: plan.n != dataset n");
  if (gamma < 0.0 || gamma >= 1.0)
    throw std::invalid_argument("run_stability_selection: gamma must lie in [0,1)");

  EnsembleRun run;
  run.per_resample.resize(plan.B);

  auto fit_one = [&](int b) {
    PerResample& slot = run.per_resample[b - 1];
    slot.idx = draw(plan, b);
    Matrix Xb(plan.n_sub, d.p());
    std::vector<double> yb(plan.n_sub);
    for (int i = 0; i < plan.n_sub; ++i) {
      const int row = slot.idx.rows[i];
      for (int j = 0; j < d.p(); ++j) Xb(i, j) = d.X(row, j);
      yb[i] = d.y[row];
    }
    slot.sel = fit_l1_path(Xb, yb, sel_cfg);
    slot.loss = in_sample_loss(slot.sel, Xb, yb);
  };

  if (workers <= 1) {
    for (int b = 1; b <= plan.B; ++b) fit_one(b);
  } else {
    // Static interleaved split: slot b-1 is written by exactly one worker.
    std::vector<std::thread> pool;
    const int w = std::min(workers, plan.B);
    pool.reserve(w);
    for (int t = 0; t < w; ++t)
      pool.emplace_back([&, t]() {
        for (int b = 1 + t; b <= plan.B; b += w) fit_one(b);
      });
    for (auto& th : pool) th.join();
  }

  std::vector<std::vector<int>> selected_sets(plan.B);
  std::vector<double> losses(plan.B);
  for (int b = 0; b < plan.B; ++b) {
    selected_sets[b] = run.per_resample[b].sel.selected;
    losses[b] = run.per_resample[b].loss;
  }

  // seed only feeds the loss tie-breaking, so a gamma = 0 run is bit-identical
  // for every seed; rank-boundary ties draw from the plan's stream instead.
  run.trimmed_set = trim_set(losses, gamma, mix_seed(seed, kStreamTrimTies));
  run.frequencies = count_frequencies(selected_sets, run.trimmed_set, d.p(), gamma);
  run.stable = stable_set(run.frequencies, rule, mix_seed(plan.master_seed, kStreamRankTies));
  return run;
}

std::string ensemble_run_to_json(const EnsembleRun& run) {
  nlohmann::json j;
  j["schema_version"] = 1;
  nlohmann::json per = nlohmann::json::array();
  for (const auto& r : run.per_resample) {
    nlohmann::json one;
    one["rows"] = r.idx.rows;
    one["selected"] = r.sel.selected;
    one["loss"] = r.loss;
    per.push_back(std::move(one));
  }
  j["per_resample"] = std::move(per);
  j["trimmed"] = run.trimmed_set;
  j["pi_hat"] = run.frequencies.pi_hat;
  j["effective_B"] = run.frequencies.effective_B;
  j["gamma"] = run.frequencies.gamma;
  j["stable"] = run.stable;
  return j.dump(2);
}

}  // namespace stabsel
