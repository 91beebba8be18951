#ifndef STABSEL_HARNESS_HPP
#define STABSEL_HARNESS_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stabsel/metrics.hpp"
#include "stabsel/resample.hpp"
#include "stabsel/stability.hpp"

namespace stabsel {

struct MethodSpec {
  std::string label;
  int B = 100;
  double gamma = 0.0;
};

struct ScenarioConfig {
  std::string name;
  int n = 0;
  int p = 0;
  int s0 = 5;
  double snr = 5.0;
  int m_tilde = 0;
  int n_sub = 0;
  Resampling resampling = Resampling::Subsample;
  StableRule rule = StableRule::rank(5);
  std::vector<MethodSpec> methods;

  void validate() const;
};

// Scenario rows of the simulation study, keyed "1a".."5c" (digit: geometry and
// attack size; letter: signal-to-noise 5/2/1). Methods SS, T1, T2, T3.
ScenarioConfig scenario_preset(const std::string& name);
MethodSpec preset_method(const std::string& scenario_name, const std::string& label);

struct ExperimentConfig {
  std::uint64_t master_seed = 1;
  int replications = 100;
  int workers = 1;
  std::vector<ScenarioConfig> scenarios;

  void validate() const;
};

// Strict parse of the versioned JSON config; unknown keys are an error.
ExperimentConfig parse_experiment_config(const std::string& json_text);

struct ReplicationRow {
  std::string scenario;
  std::string method;
  int replication = 0;
  RunScore run_score;
  std::vector<int> stable;  // 0-based
};

struct SummaryRow {
  std::string scenario;
  std::string method;
  ScoreSummary summary;
};

struct ExperimentResult {
  std::vector<ReplicationRow> rows;
  std::vector<SummaryRow> summary;
};

// Runs every scenario x replication x method. Replications are distributed
// over `workers` threads; all randomness is keyed on (master_seed, scenario,
// replication, method), so the result is identical for any worker count.
// row_sink, when given, receives rows in deterministic order as replications
// complete; skip, when given, marks (scenario, replication) pairs to omit.
ExperimentResult run_experiment(
    const ExperimentConfig& cfg,
    const std::function<void(const ReplicationRow&)>& row_sink = nullptr,
    const std::function<bool(const std::string&, int)>& skip = nullptr);

std::string results_csv_header();
std::string to_csv(const ReplicationRow& row);
std::string summary_csv_header();
std::string to_csv(const SummaryRow& row, std::uint64_t master_seed);

}  // namespace stabsel

#endif
