// stabsel: scenario simulation, breakdown-probability calculator, robustness
// surplus, and synthetic dataset generation. See README.md for usage.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "stabsel/breakdown.hpp"
#include "stabsel/breakdown_json.hpp"
#include "stabsel/dataset.hpp"
#include "stabsel/harness.hpp"
#include "stabsel/rng.hpp"

namespace fs = std::filesystem;
using namespace stabsel;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- simulate ---------------------------------------------------------------

// Rows already on disk, keyed (scenario, replication) -> number of method rows.
std::map<std::pair<std::string, int>, int> scan_existing_rows(const std::string& path) {
  std::map<std::pair<std::string, int>, int> seen;
  std::ifstream in(path);
  if (!in) return seen;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string scenario, method, rep;
    std::getline(ss, scenario, ',');
    std::getline(ss, method, ',');
    std::getline(ss, rep, ',');
    ++seen[{scenario, std::stoi(rep)}];
  }
  return seen;
}

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed_override,
                 std::optional<int> workers_override, std::optional<int> replications_override,
                 const std::string& out_dir, bool resume, bool quiet) {
  ExperimentConfig cfg = parse_experiment_config(read_file(config_path));
  if (seed_override) cfg.master_seed = *seed_override;
  if (workers_override) cfg.workers = *workers_override;
  if (replications_override) cfg.replications = *replications_override;
  cfg.validate();

  fs::create_directories(out_dir);
  const std::string results_path = (fs::path(out_dir) / "results.csv").string();
  const std::string summary_path = (fs::path(out_dir) / "summary.csv").string();

  std::map<std::pair<std::string, int>, int> existing;
  if (resume) existing = scan_existing_rows(results_path);

  std::map<std::string, int> method_counts;
  for (const auto& sc : cfg.scenarios) method_counts[sc.name] = static_cast<int>(sc.methods.size());

  const bool append = resume && !existing.empty();
  std::ofstream rows_out(results_path, append ? std::ios::app : std::ios::trunc);
  if (!rows_out) throw std::runtime_error("cannot open for writing: " + results_path);
  if (!append) rows_out << results_csv_header();

  auto skip = [&](const std::string& scenario, int rep) {
    const auto it = existing.find({scenario, rep});
    return it != existing.end() && it->second == method_counts[scenario];
  };
  auto sink = [&rows_out](const ReplicationRow& row) {
    rows_out << to_csv(row);
    rows_out.flush();
  };

  run_experiment(cfg, sink, resume ? skip : std::function<bool(const std::string&, int)>{});
  rows_out.close();

  // Summaries always cover the full results file, including resumed rows.
  ExperimentConfig summary_cfg = cfg;
  std::map<std::pair<std::string, std::string>, std::vector<RunScore>> grouped;
  {
    std::ifstream in(results_path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string scenario, method, rep, count, rate, fps, stable;
      std::getline(ss, scenario, ',');
      std::getline(ss, method, ',');
      std::getline(ss, rep, ',');
      std::getline(ss, count, ',');
      std::getline(ss, rate, ',');
      std::getline(ss, fps, ',');
      std::getline(ss, stable, ',');
      RunScore s;
      s.tpr = std::stod(rate);
      const double tpr_count = std::stod(count);
      s.support_size = s.tpr > 0 ? static_cast<int>(std::lround(tpr_count / s.tpr)) : 0;
      s.full_recovery = s.tpr == 1.0;
      s.total_miss = s.tpr == 0.0;
      s.false_positives = std::stoi(fps);
      grouped[{scenario, method}].push_back(s);
    }
  }
  std::ofstream summary_out(summary_path);
  if (!summary_out) throw std::runtime_error("cannot open for writing: " + summary_path);
  summary_out << summary_csv_header();
  for (const auto& sc : summary_cfg.scenarios)
    for (const auto& method : sc.methods) {
      const auto it = grouped.find({sc.name, method.label});
      if (it == grouped.end()) continue;
      std::vector<RunScore> scores = it->second;
      // tpr_count needs the true support size; rows with tpr 0 can't recover
      // it from the ratio, so take the scenario's s0.
      for (RunScore& s : scores) s.support_size = sc.s0;
      SummaryRow row{sc.name, method.label, summarize(scores)};
      summary_out << to_csv(row, summary_cfg.master_seed);
      if (!quiet) std::cout << to_csv(row, summary_cfg.master_seed);
    }
  return 0;
}

// --- bdp / surplus ----------------------------------------------------------

template <typename T>
T require_flag(const std::optional<T>& value, const std::string& flag, const std::string& why) {
  if (!value) throw std::invalid_argument("missing " + flag + " (" + why + ")");
  return *value;
}

BreakdownQuery query_from_flags(const std::string& rule, const std::string& contamination,
                                const std::string& scenario, const std::string& resampling,
                                long long n, long long n_sub, long long B, double c, long long m,
                                std::optional<double> pi_thr, std::optional<double> max_pi_plus,
                                std::optional<int> q_rank, std::optional<int> s_rank,
                                std::optional<double> min_pi_minus,
                                const std::vector<long long>& z,
                                const std::vector<long long>& z_rel, std::optional<int> cell_p,
                                std::optional<int> cell_s0, std::optional<long long> k_override) {
  nlohmann::json j;
  j["rule"] = rule;
  j["contamination"] = contamination;
  j["scenario"] = scenario;
  j["resampling"] = resampling;
  j["n"] = n;
  j["n_sub"] = n_sub;
  j["B"] = B;
  j["c"] = c;
  j["m"] = m;
  if (rule == "threshold") {
    j["pi_thr"] = require_flag(pi_thr, "--pi-thr", "threshold rule");
    j["max_pi_plus"] = require_flag(max_pi_plus, "--max-pi-plus", "threshold rule");
  } else {
    j["q"] = require_flag(q_rank, "--q", "rank rule");
    j["s"] = require_flag(s_rank, "--s", "rank rule");
    j["max_pi_plus"] = require_flag(max_pi_plus, "--max-pi-plus", "rank rule");
    j["min_pi_minus"] = require_flag(min_pi_minus, "--min-pi-minus", "rank rule");
  }
  if (contamination == "cell") {
    if (z.empty() || z_rel.empty())
      throw std::invalid_argument("missing --z / --z-rel (cell contamination)");
    j["cell"] = {{"z", z},
                 {"z_rel", z_rel},
                 {"p", require_flag(cell_p, "--p", "cell contamination")},
                 {"s0", require_flag(cell_s0, "--s0", "cell contamination")}};
  }
  if (k_override) j["k_override"] = *k_override;
  return parse_breakdown_query(j.dump());
}

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
  out << text << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability Selection robustness toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run the scenario study and emit CSV results");
  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed_override;
  std::optional<int> workers_override, replications_override;
  bool resume = false, quiet = false;
  simulate->add_option("--config", config_path, "experiment config JSON")->required();
  simulate->add_option("--seed", seed_override, "override master_seed");
  simulate->add_option("--workers", workers_override, "override worker count");
  simulate->add_option("--replications-override", replications_override,
                       "override replication count");
  simulate->add_option("--out", out_dir, "output directory (results.csv, summary.csv)");
  simulate->add_flag("--resume", resume, "skip replications already present in results.csv");
  simulate->add_flag("--quiet", quiet, "suppress summary on stdout");

  // bdp
  auto* bdp = app.add_subcommand("bdp", "breakdown probability calculator");
  std::string query_path, out_path;
  std::string rule = "threshold", contamination = "case", scenario = "pessimistic",
              resampling = "subsample", method = "exact";
  long long n = 0, n_sub = 0, B = 0, m = 0;
  double c = 0.5;
  std::optional<double> pi_thr, max_pi_plus, min_pi_minus;
  std::optional<int> q_rank, s_rank, cell_p, cell_s0;
  std::vector<long long> z, z_rel;
  std::optional<long long> k_override;
  long long mc_trials = 100000;
  std::uint64_t mc_seed = 20260808ULL;
  bdp->add_option("--query", query_path, "query JSON file (overrides the flags)");
  bdp->add_option("--rule", rule, "threshold|rank");
  bdp->add_option("--contamination", contamination, "case|cell");
  bdp->add_option("--scenario-kind", scenario, "optimistic|pessimistic");
  bdp->add_option("--resampling", resampling, "subsample|bootstrap");
  bdp->add_option("--n", n, "rows in the data set");
  bdp->add_option("--n-sub", n_sub, "rows per resample");
  bdp->add_option("--B", B, "number of resamples");
  bdp->add_option("--c", c, "BDP of the base selector (cell-BDP for cell queries)");
  bdp->add_option("--m", m, "contaminated rows (case) / response outliers (cell)");
  bdp->add_option("--pi-thr", pi_thr, "stability threshold");
  bdp->add_option("--max-pi-plus", max_pi_plus, "max frequency over relevant variables");
  bdp->add_option("--q", q_rank, "stable set size (rank rule)");
  bdp->add_option("--s", s_rank, "relevant variables among the top q");
  bdp->add_option("--min-pi-minus", min_pi_minus, "min frequency of the next-best non-relevant");
  bdp->add_option("--z", z, "cell profile: rows with l outlying cells, l = 0,1,...")
      ->delimiter(',');
  bdp->add_option("--z-rel", z_rel, "cell profile over the relevant columns")->delimiter(',');
  bdp->add_option("--p", cell_p, "number of predictors (cell queries)");
  bdp->add_option("--s0", cell_s0, "number of relevant predictors (cell queries)");
  bdp->add_option("--k-override", k_override, "replace the broken-model count K");
  bdp->add_option("--method", method, "exact|mc");
  bdp->add_option("--mc-trials", mc_trials, "Monte-Carlo trials (method=mc or cell fallback)");
  bdp->add_option("--mc-seed", mc_seed, "Monte-Carlo seed");
  bdp->add_option("--out", out_path, "write result JSON here instead of stdout");

  // surplus
  auto* surplus = app.add_subcommand("surplus", "robustness surplus vs the one-broken-resample baseline");
  std::string surplus_mode = "prob";
  double alpha = 0.0, gamma = 0.0;
  long long k_gamma = 0;
  surplus->add_option("--mode", surplus_mode, "prob|bdp");
  surplus->add_option("--alpha", alpha, "tolerance level (bdp mode)");
  surplus->add_option("--gamma", gamma, "trimming rate for the numerator");
  surplus->add_option("--k-gamma", k_gamma, "broken models among the trimmed ones");
  surplus->add_option("--rule", rule, "threshold|rank");
  surplus->add_option("--scenario-kind", scenario, "optimistic|pessimistic");
  surplus->add_option("--resampling", resampling, "subsample|bootstrap");
  surplus->add_option("--n", n, "rows in the data set");
  surplus->add_option("--n-sub", n_sub, "rows per resample");
  surplus->add_option("--B", B, "number of resamples");
  surplus->add_option("--c", c, "BDP of the base selector");
  surplus->add_option("--m", m, "contaminated rows");
  surplus->add_option("--pi-thr", pi_thr, "stability threshold");
  surplus->add_option("--max-pi-plus", max_pi_plus, "max frequency over relevant variables");
  surplus->add_option("--q", q_rank, "stable set size (rank rule)");
  surplus->add_option("--s", s_rank, "relevant variables among the top q");
  surplus->add_option("--min-pi-minus", min_pi_minus, "min frequency of the next-best non-relevant");
  surplus->add_option("--out", out_path, "write result JSON here instead of stdout");

  // datagen
  auto* datagen = app.add_subcommand("datagen", "generate a synthetic dataset CSV + sidecar");
  int dg_n = 50, dg_p = 25, dg_s0 = 5;
  double dg_snr = 5.0;
  std::uint64_t dg_seed = 1;
  std::string dg_out = "dataset";
  std::string attack = "none";
  int attack_rows = 0;
  double cell_rate = 0.0, replacement = 0.0;
  datagen->add_option("--n", dg_n, "rows");
  datagen->add_option("--p", dg_p, "predictors");
  datagen->add_option("--s0", dg_s0, "relevant predictors");
  datagen->add_option("--snr", dg_snr, "signal-to-noise ratio");
  datagen->add_option("--seed", dg_seed, "generation seed");
  datagen->add_option("--out", dg_out, "output prefix (<out>.csv, <out>.json)");
  datagen->add_option("--attack", attack, "none|column-zero|case-wise|cell-random|response");
  datagen->add_option("--rows", attack_rows, "attacked rows");
  datagen->add_option("--cell-rate", cell_rate, "cell contamination probability");
  datagen->add_option("--replacement", replacement, "replacement value for attacked cells");

  try {
    app.parse(argc, argv);

    if (*simulate)
      return cmd_simulate(config_path, seed_override, workers_override, replications_override,
                          out_dir, resume, quiet);

    if (*bdp) {
      BreakdownQuery q =
          query_path.empty()
              ? query_from_flags(rule, contamination, scenario, resampling, n, n_sub, B, c, m,
                                 pi_thr, max_pi_plus, q_rank, s_rank, min_pi_minus, z, z_rel,
                                 cell_p, cell_s0, k_override)
              : parse_breakdown_query(read_file(query_path));
      MonteCarloConfig mc{mc_trials, mc_seed};
      BreakdownResult r;
      if (method == "exact")
        r = evaluate_breakdown(q, mc);
      else if (method == "mc")
        r = monte_carlo_breakdown(q, mc_trials, mc_seed);
      else
        throw std::invalid_argument("--method must be exact or mc");
      write_output(breakdown_result_to_json(r), out_path);
      return 0;
    }

    if (*surplus) {
      BreakdownQuery q = query_from_flags(rule, "case", scenario, resampling, n, n_sub, B, c, m,
                                          pi_thr, max_pi_plus, q_rank, s_rank, min_pi_minus, {},
                                          {}, 0, 0, std::nullopt);
      SurplusMode mode;
      if (surplus_mode == "prob")
        mode = SurplusMode::ProbabilityRatio;
      else if (surplus_mode == "bdp")
        mode = SurplusMode::BdpRatio;
      else
        throw std::invalid_argument("--mode must be prob or bdp");
      const Surplus s = robustness_surplus(q, mode, alpha, gamma, k_gamma);
      nlohmann::json j;
      j["defined"] = s.defined;
      if (s.defined) j["value"] = s.value;
      j["numerator"] = s.numerator;
      j["denominator"] = s.denominator;
      if (s.half_gap_adjustment_ambiguous) j["flags"] = {{"half_gap_adjustment_ambiguous", true}};
      write_output(j.dump(2), out_path);
      return 0;
    }

    if (*datagen) {
      const Dataset clean = generate_dataset(dg_n, dg_p, dg_s0, dg_snr, dg_seed);
      if (attack == "none") {
        write_dataset_csv(clean, dg_out + ".csv");
        write_dataset_sidecar(clean, dg_seed, dg_out + ".json");
        return 0;
      }
      ContaminationSpec spec;
      if (attack == "column-zero")
        spec.scheme = ContaminationScheme::ColumnZeroRelevant;
      else if (attack == "case-wise")
        spec.scheme = ContaminationScheme::CaseWise;
      else if (attack == "cell-random")
        spec.scheme = ContaminationScheme::CellWiseRandom;
      else if (attack == "response")
        spec.scheme = ContaminationScheme::ResponseOnly;
      else
        throw std::invalid_argument("--attack must be none|column-zero|case-wise|cell-random|response");
      spec.row_count = attack_rows;
      spec.cell_rate = cell_rate;
      spec.replacement_value = replacement;
      std::vector<int> attacked;
      const Dataset dirty = contaminate(clean, spec, mix_seed(dg_seed, 0xA77ACC), &attacked);
      write_dataset_csv(dirty, dg_out + ".csv");
      write_dataset_sidecar(dirty, dg_seed, dg_out + ".json", &attacked, attack);
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
