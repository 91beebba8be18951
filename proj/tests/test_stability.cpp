#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include <algorithm>
#include <set>

#include "stabsel/dataset.hpp"
#include "stabsel/rng.hpp"
#include "stabsel/stability.hpp"

using namespace stabsel;

TEST_CASE("aggregate_frequencies direct counts") {
  const FrequencyVector f = aggregate_frequencies({{0}, {0, 1}}, 2);
  CHECK(f.effective_B == 2);
  CHECK(f.pi_hat[0] == doctest::Approx(1.0));
  CHECK(f.pi_hat[1] == doctest::Approx(0.5));

  const FrequencyVector z = aggregate_frequencies({{}, {}, {}}, 3);
  for (double v : z.pi_hat) CHECK(v == 0.0);

  CHECK_THROWS_AS(aggregate_frequencies({}, 3), std::invalid_argument);
}

TEST_CASE("aggregate_frequencies matches per-variable recount") {
  Rng rng(8);
  const int B = 100, p = 12;
  std::vector<std::vector<int>> sets(B);
  for (auto& s : sets)
    for (int j = 0; j < p; ++j)
      if (rng.uniform() < 0.3) s.push_back(j);
  const FrequencyVector f = aggregate_frequencies(sets, p);
  for (int j = 0; j < p; ++j) {
    int count = 0;
    for (const auto& s : sets)
      if (std::find(s.begin(), s.end(), j) != s.end()) ++count;
    CHECK(f.counts[j] == count);
    CHECK(f.pi_hat[j] == doctest::Approx(static_cast<double>(count) / B).epsilon(1e-15));
  }
}

TEST_CASE("trim_set basics") {
  CHECK(trim_set({1.0, 5.0, 2.0}, 1.0 / 3.0, 7) == std::vector<int>{1});
  CHECK(trim_set({1.0, 5.0, 2.0}, 0.0, 7).empty());
  CHECK_THROWS_AS(trim_set({1.0}, 1.0, 7), std::invalid_argument);
}

TEST_CASE("trim_set tie symmetry") {
  // All losses equal, B=4, gamma=0.5: each index trimmed with frequency 1/2.
  const std::vector<double> losses(4, 3.14);
  std::vector<int> trimmed_count(4, 0);
  const int trials = 10000;
  for (int t = 0; t < trials; ++t)
    for (int b : trim_set(losses, 0.5, 1000 + t)) ++trimmed_count[b];
  for (int b = 0; b < 4; ++b)
    CHECK(static_cast<double>(trimmed_count[b]) / trials == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("trimmed_frequencies compositional oracle") {
  Rng rng(19);
  const int B = 40, p = 9;
  std::vector<std::vector<int>> sets(B);
  std::vector<double> losses(B);
  for (int b = 0; b < B; ++b) {
    losses[b] = rng.uniform();
    for (int j = 0; j < p; ++j)
      if (rng.uniform() < 0.4) sets[b].push_back(j);
  }

  // gamma = 0 reduces to the plain aggregation.
  const FrequencyVector plain = trimmed_frequencies(sets, losses, 0.0, 5, p);
  const FrequencyVector agg = aggregate_frequencies(sets, p);
  CHECK(plain.pi_hat == agg.pi_hat);
  CHECK(plain.effective_B == agg.effective_B);

  // Equals aggregate_frequencies applied to the kept subsequence.
  const double gamma = 0.3;
  const std::vector<int> trimmed = trim_set(losses, gamma, 5);
  std::vector<std::vector<int>> kept;
  for (int b = 0; b < B; ++b)
    if (std::find(trimmed.begin(), trimmed.end(), b) == trimmed.end()) kept.push_back(sets[b]);
  const FrequencyVector expect = aggregate_frequencies(kept, p);
  const FrequencyVector got = trimmed_frequencies(sets, losses, gamma, 5, p);
  CHECK(got.pi_hat == expect.pi_hat);
  CHECK(got.effective_B == B - 12);

  CHECK_THROWS_AS(trimmed_frequencies({{0}}, {1.0}, 0.999999999, 5, 1), std::invalid_argument);
}

TEST_CASE("trimmed_frequencies: worst resample's exclusive pick vanishes") {
  // B=4, one resample with a unique worst loss picks variable 7 alone.
  std::vector<std::vector<int>> sets{{1, 2}, {7}, {1}, {2}};
  std::vector<double> losses{0.5, 9.0, 0.4, 0.6};
  const FrequencyVector f = trimmed_frequencies(sets, losses, 0.25, 3, 8);
  CHECK(f.effective_B == 3);
  CHECK(f.pi_hat[7] == 0.0);
  CHECK(f.pi_hat[1] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("stable_set threshold and rank") {
  FrequencyVector f;
  f.pi_hat = {0.9, 0.2, 0.5};
  f.effective_B = 10;
  CHECK(stable_set(f, StableRule::rank(2), 1) == std::vector<int>{0, 2});

  FrequencyVector g;
  g.pi_hat = {0.4, 0.3};
  g.effective_B = 10;
  CHECK(stable_set(g, StableRule::threshold(0.5), 1).empty());  // empty stable model is legal
  CHECK(stable_set(g, StableRule::threshold(0.3), 1) == std::vector<int>{0, 1});

  // Rank ties broken uniformly.
  FrequencyVector ties;
  ties.pi_hat = {0.5, 0.5};
  ties.effective_B = 2;
  int first = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const auto s = stable_set(ties, StableRule::rank(1), 5000 + t);
    REQUIRE(s.size() == 1);
    if (s[0] == 0) ++first;
  }
  CHECK(static_cast<double>(first) / trials == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("rank rule returns exactly q, threshold may return empty") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    FrequencyVector f;
    f.effective_B = 20;
    for (int j = 0; j < 10; ++j)
      f.pi_hat.push_back(static_cast<int>(rng.uniform_below(21)) / 20.0);
    CHECK(stable_set(f, StableRule::rank(4), trial).size() == 4);
  }
}

namespace {
EnsembleRun small_run(double gamma, std::uint64_t seed, std::uint64_t tie_seed) {
  const Dataset d = generate_dataset(40, 10, 3, 5.0, seed);
  ContaminationSpec attack;
  attack.scheme = ContaminationScheme::ColumnZeroRelevant;
  attack.row_count = 4;
  const Dataset dirty = contaminate(d, attack, seed + 1);
  ResamplePlan plan{Resampling::Subsample, 40, 20, 30, seed + 2};
  SelectorConfig cfg;
  cfg.target_nonzeros = 5;
  return run_stability_selection(dirty, plan, cfg, StableRule::rank(3), gamma, tie_seed);
}
}  // namespace

TEST_CASE("gamma=0 equals plain stability selection bit for bit") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const EnsembleRun a = small_run(0.0, seed, 900 + seed);
    const EnsembleRun b = small_run(0.0, seed, 1900 + seed);  // different tie seed
    CHECK(a.trimmed_set.empty());
    CHECK(a.stable == b.stable);
    CHECK(a.frequencies.pi_hat == b.frequencies.pi_hat);
    REQUIRE(a.per_resample.size() == b.per_resample.size());
    for (std::size_t i = 0; i < a.per_resample.size(); ++i) {
      CHECK(a.per_resample[i].loss == b.per_resample[i].loss);
      CHECK(a.per_resample[i].sel.selected == b.per_resample[i].sel.selected);
    }
  }
}

TEST_CASE("frequencies are multiples of 1/effective_B") {
  const EnsembleRun run = small_run(0.4, 5, 7);
  const int effB = run.frequencies.effective_B;
  CHECK(effB == 30 - 12);
  for (std::size_t j = 0; j < run.frequencies.pi_hat.size(); ++j) {
    const double scaled = run.frequencies.pi_hat[j] * effB;
    CHECK(std::abs(scaled - std::llround(scaled)) < 1e-9);
    CHECK(run.frequencies.pi_hat[j] ==
          doctest::Approx(static_cast<double>(run.frequencies.counts[j]) / effB).epsilon(1e-15));
  }
}

TEST_CASE("single-resample influence bounded by 1/B") {
  Rng rng(77);
  const int B = 25, p = 8;
  std::vector<std::vector<int>> sets(B);
  for (auto& s : sets)
    for (int j = 0; j < p; ++j)
      if (rng.uniform() < 0.5) s.push_back(j);
  const FrequencyVector base = aggregate_frequencies(sets, p);
  auto mutated = sets;
  mutated[7] = {0, 5};  // replace one resample's output entirely
  const FrequencyVector changed = aggregate_frequencies(mutated, p);
  for (int j = 0; j < p; ++j)
    CHECK(std::abs(changed.pi_hat[j] - base.pi_hat[j]) <= 1.0 / B + 1e-12);
}

TEST_CASE("full column-zero attack leaves no relevant variable stable") {
  const Dataset d = generate_dataset(50, 25, 5, 5.0, 33);
  ContaminationSpec attack;
  attack.scheme = ContaminationScheme::ColumnZeroRelevant;
  attack.row_count = d.n();
  const Dataset dirty = contaminate(d, attack, 4);
  ResamplePlan plan{Resampling::Subsample, 50, 25, 40, 91};
  SelectorConfig cfg;
  cfg.target_nonzeros = 7;
  for (double gamma : {0.0, 0.5}) {
    for (const StableRule& rule : {StableRule::rank(5), StableRule::threshold(0.5)}) {
      const EnsembleRun run = run_stability_selection(dirty, plan, cfg, rule, gamma, 12);
      for (int j : d.support)
        CHECK(std::find(run.stable.begin(), run.stable.end(), j) == run.stable.end());
    }
  }
}

TEST_CASE("clean scenario-2a-sized data: rank(5) recovers the support") {
  int recovered = 0;
  const int reps = 100;
  for (int rep = 0; rep < reps; ++rep) {
    const Dataset d = generate_dataset(100, 50, 5, 5.0, 5000 + rep);
    ResamplePlan plan{Resampling::Subsample, 100, 50, 100, 6000 + static_cast<std::uint64_t>(rep)};
    SelectorConfig cfg;
    cfg.target_nonzeros = 7;
    const EnsembleRun run = run_stability_selection(d, plan, cfg, StableRule::rank(5), 0.0, rep);
    if (run.stable == d.support) ++recovered;
  }
  CHECK(recovered >= 95);
}

TEST_CASE("worker count does not change the result") {
  const Dataset d = generate_dataset(30, 8, 2, 4.0, 13);
  ResamplePlan plan{Resampling::Subsample, 30, 15, 20, 44};
  SelectorConfig cfg;
  cfg.target_nonzeros = 4;
  const EnsembleRun one = run_stability_selection(d, plan, cfg, StableRule::rank(2), 0.25, 9, 1);
  const EnsembleRun eight = run_stability_selection(d, plan, cfg, StableRule::rank(2), 0.25, 9, 8);
  CHECK(one.stable == eight.stable);
  CHECK(one.trimmed_set == eight.trimmed_set);
  CHECK(one.frequencies.pi_hat == eight.frequencies.pi_hat);
  for (std::size_t i = 0; i < one.per_resample.size(); ++i)
    CHECK(one.per_resample[i].loss == eight.per_resample[i].loss);
}

TEST_CASE("ensemble run serializes to json") {
  const EnsembleRun run = small_run(0.4, 2, 3);
  const std::string js = ensemble_run_to_json(run);
  CHECK(js.find("\"pi_hat\"") != std::string::npos);
  CHECK(js.find("\"trimmed\"") != std::string::npos);
  CHECK(js.find("\"stable\"") != std::string::npos);
}
