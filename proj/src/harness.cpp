#include "stabsel/harness.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "stabsel/dataset.hpp"
#include "stabsel/rng.hpp"
#include "stabsel/selector.hpp"

namespace stabsel {

namespace {
constexpr std::uint64_t kStreamScenario = 0x5C10;
constexpr std::uint64_t kStreamDataset = 1;
constexpr std::uint64_t kStreamAttack = 2;
constexpr std::uint64_t kStreamMethodBase = 100;
constexpr std::uint64_t kStreamPlan = 1;
constexpr std::uint64_t kStreamTies = 2;

struct PresetRow {
  int scenario_number;
  int p, n, m_tilde, n_sub;
  double t1_gamma, t2_gamma, t3_gamma;
  int t1_B, t2_B, t3_B;
};

const PresetRow kPresets[] = {
    {1, 25, 50, 2, 25, 0.50, 0.75, 0.90, 100, 100, 100},
    {2, 50, 100, 2, 50, 0.50, 0.75, 0.90, 100, 100, 100},
    {3, 50, 100, 5, 50, 0.75, 0.90, 0.95, 100, 100, 1000},
    {4, 200, 200, 20, 100, 0.50, 0.75, 0.90, 100, 100, 1000},
    {5, 500, 200, 10, 100, 0.75, 0.95, 0.99, 100, 1000, 1000},
};

const PresetRow& preset_row(const std::string& name) {
  if (name.size() != 2 || name[0] < '1' || name[0] > '5' || name[1] < 'a' || name[1] > 'c')
    throw std::invalid_argument("unknown scenario preset: " + name);
  return kPresets[name[0] - '1'];
}

double preset_snr(char letter) {
  switch (letter) {
    case 'a': return 5.0;
    case 'b': return 2.0;
    default: return 1.0;
  }
}
}  // namespace

void ScenarioConfig::validate() const {
  if (name.empty()) throw std::invalid_argument("scenario: name must be nonempty");
  if (n < 2 || p < 1) throw std::invalid_argument("scenario " + name + ": need n >= 2, p >= 1");
  if (s0 < 1 || s0 > p) throw std::invalid_argument("scenario " + name + ": need 1 <= s0 <= p");
  if (!(snr > 0.0)) throw std::invalid_argument("scenario " + name + ": need snr > 0");
  if (m_tilde < 0 || m_tilde > n)
    throw std::invalid_argument("scenario " + name + ": need 0 <= m_tilde <= n");
  if (n_sub < 1 || n_sub >= n)
    throw std::invalid_argument("scenario " + name + ": need 1 <= n_sub < n");
  if (methods.empty()) throw std::invalid_argument("scenario " + name + ": no methods");
  std::set<std::string> labels;
  for (const auto& m : methods) {
    if (!labels.insert(m.label).second)
      throw std::invalid_argument("scenario " + name + ": duplicate method label " + m.label);
    if (m.B < 1) throw std::invalid_argument("scenario " + name + ": method B >= 1 required");
    if (m.gamma < 0.0 || m.gamma >= 1.0)
      throw std::invalid_argument("scenario " + name + ": method gamma in [0,1) required");
  }
  if (rule.kind == StableRule::Kind::Rank && (rule.q < 1 || rule.q > p))
    throw std::invalid_argument("scenario " + name + ": rank q out of 1..p");
}

MethodSpec preset_method(const std::string& scenario_name, const std::string& label) {
  const PresetRow& row = preset_row(scenario_name);
  if (label == "SS") return {"SS", 100, 0.0};
  if (label == "T1") return {"T1", row.t1_B, row.t1_gamma};
  if (label == "T2") return {"T2", row.t2_B, row.t2_gamma};
  if (label == "T3") return {"T3", row.t3_B, row.t3_gamma};
  throw std::invalid_argument("unknown preset method label: " + label);
}

ScenarioConfig scenario_preset(const std::string& name) {
  const PresetRow& row = preset_row(name);
  ScenarioConfig sc;
  sc.name = name;
  sc.p = row.p;
  sc.n = row.n;
  sc.s0 = 5;
  sc.snr = preset_snr(name[1]);
  sc.m_tilde = row.m_tilde;
  sc.n_sub = row.n_sub;
  sc.resampling = Resampling::Subsample;
  sc.rule = StableRule::rank(5);
  for (const char* label : {"SS", "T1", "T2", "T3"}) sc.methods.push_back(preset_method(name, label));
  return sc;
}

void ExperimentConfig::validate() const {
  if (replications < 1) throw std::invalid_argument("config: replications >= 1 required");
  if (workers < 1) throw std::invalid_argument("config: workers >= 1 required");
  if (scenarios.empty()) throw std::invalid_argument("config: no scenarios");
  std::set<std::string> names;
  for (const auto& sc : scenarios) {
    sc.validate();
    if (!names.insert(sc.name).second)
      throw std::invalid_argument("config: duplicate scenario name " + sc.name);
  }
}

namespace {

void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
}

MethodSpec parse_method(const nlohmann::json& j, const std::string& scenario_name) {
  if (j.is_string()) return preset_method(scenario_name, j.get<std::string>());
  reject_unknown_keys(j, {"label", "B", "gamma"}, "method of scenario " + scenario_name);
  MethodSpec m;
  m.label = j.at("label").get<std::string>();
  m.B = j.value("B", 100);
  m.gamma = j.value("gamma", 0.0);
  return m;
}

ScenarioConfig parse_scenario(const nlohmann::json& j) {
  if (j.contains("preset")) {
    reject_unknown_keys(j, {"preset", "methods"}, "scenario");
    ScenarioConfig sc = scenario_preset(j.at("preset").get<std::string>());
    if (j.contains("methods")) {
      sc.methods.clear();
      for (const auto& mj : j.at("methods")) sc.methods.push_back(parse_method(mj, sc.name));
    }
    return sc;
  }
  reject_unknown_keys(j,
                      {"name", "n", "p", "s0", "snr", "m_tilde", "n_sub", "resampling", "rule",
                       "methods"},
                      "scenario");
  ScenarioConfig sc;
  sc.name = j.at("name").get<std::string>();
  sc.n = j.at("n").get<int>();
  sc.p = j.at("p").get<int>();
  sc.s0 = j.value("s0", 5);
  sc.snr = j.value("snr", 5.0);
  sc.m_tilde = j.at("m_tilde").get<int>();
  sc.n_sub = j.at("n_sub").get<int>();
  const std::string res = j.value("resampling", "subsample");
  if (res == "subsample")
    sc.resampling = Resampling::Subsample;
  else if (res == "bootstrap")
    sc.resampling = Resampling::Bootstrap;
  else
    throw std::invalid_argument("config: resampling must be 'subsample' or 'bootstrap'");
  if (j.contains("rule")) {
    const auto& rj = j.at("rule");
    reject_unknown_keys(rj, {"kind", "q", "pi_thr"}, "rule of scenario " + sc.name);
    const std::string kind = rj.at("kind").get<std::string>();
    if (kind == "rank")
      sc.rule = StableRule::rank(rj.value("q", 5));
    else if (kind == "threshold")
      sc.rule = StableRule::threshold(rj.value("pi_thr", 0.5));
    else
      throw std::invalid_argument("config: rule.kind must be 'rank' or 'threshold'");
  }
  for (const auto& mj : j.at("methods")) sc.methods.push_back(parse_method(mj, sc.name));
  return sc;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
  }
  reject_unknown_keys(j, {"schema_version", "master_seed", "replications", "workers", "scenarios"},
                      "top level");
  const int version = j.at("schema_version").get<int>();
  if (version != 1) throw std::invalid_argument("config: unsupported schema_version");
  ExperimentConfig cfg;
  cfg.master_seed = j.value("master_seed", 1ULL);
  cfg.replications = j.value("replications", 100);
  cfg.workers = j.value("workers", 1);
  for (const auto& sj : j.at("scenarios")) cfg.scenarios.push_back(parse_scenario(sj));
  cfg.validate();
  return cfg;
}

namespace {

std::vector<ReplicationRow> run_replication(const ExperimentConfig& cfg, int scenario_index,
                                            int replication) {
  const ScenarioConfig& sc = cfg.scenarios[scenario_index];
  const std::uint64_t scen_seed =
      mix_seed(cfg.master_seed, kStreamScenario + static_cast<std::uint64_t>(scenario_index));
  const std::uint64_t rep_seed = mix_seed(scen_seed, static_cast<std::uint64_t>(replication));

  const Dataset clean =
      generate_dataset(sc.n, sc.p, sc.s0, sc.snr, mix_seed(rep_seed, kStreamDataset));
  ContaminationSpec attack;
  attack.scheme = ContaminationScheme::ColumnZeroRelevant;
  attack.row_count = sc.m_tilde;
  const Dataset data = contaminate(clean, attack, mix_seed(rep_seed, kStreamAttack));

  SelectorConfig sel_cfg;
  sel_cfg.target_nonzeros = sc.s0 + 2;

  std::vector<ReplicationRow> rows;
  rows.reserve(sc.methods.size());
  for (std::size_t mi = 0; mi < sc.methods.size(); ++mi) {
    const MethodSpec& method = sc.methods[mi];
    const std::uint64_t run_seed = mix_seed(rep_seed, kStreamMethodBase + mi);
    ResamplePlan plan;
    plan.kind = sc.resampling;
    plan.n = sc.n;
    plan.n_sub = sc.n_sub;
    plan.B = method.B;
    plan.master_seed = mix_seed(run_seed, kStreamPlan);
    const EnsembleRun run = run_stability_selection(data, plan, sel_cfg, sc.rule, method.gamma,
                                                    mix_seed(run_seed, kStreamTies));
    ReplicationRow row;
    row.scenario = sc.name;
    row.method = method.label;
    row.replication = replication;
    row.stable = run.stable;
    row.run_score = score(run.stable, clean.support);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::function<void(const ReplicationRow&)>& row_sink,
                                const std::function<bool(const std::string&, int)>& skip) {
  cfg.validate();

  struct Task {
    int scenario_index;
    int replication;
  };
  std::vector<Task> tasks;
  for (int si = 0; si < static_cast<int>(cfg.scenarios.size()); ++si)
    for (int rep = 0; rep < cfg.replications; ++rep)
      if (!skip || !skip(cfg.scenarios[si].name, rep)) tasks.push_back({si, rep});

  std::vector<std::vector<ReplicationRow>> per_task(tasks.size());
  ExperimentResult result;

  if (cfg.workers <= 1 || tasks.size() <= 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      per_task[t] = run_replication(cfg, tasks[t].scenario_index, tasks[t].replication);
      for (auto& row : per_task[t]) {
        if (row_sink) row_sink(row);
        result.rows.push_back(std::move(row));
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<char> done(tasks.size(), 0);
    std::mutex mu;
    std::condition_variable cv;
    auto work = [&]() {
      for (;;) {
        const std::size_t t = next.fetch_add(1);
        if (t >= tasks.size()) return;
        auto rows = run_replication(cfg, tasks[t].scenario_index, tasks[t].replication);
        {
          std::lock_guard<std::mutex> lock(mu);
          per_task[t] = std::move(rows);
          done[t] = 1;
        }
        cv.notify_one();
      }
    };
    std::vector<std::thread> pool;
    const int w = static_cast<int>(std::min<std::size_t>(cfg.workers, tasks.size()));
    pool.reserve(w);
    for (int i = 0; i < w; ++i) pool.emplace_back(work);
    // Flush rows in task order as soon as they complete.
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      std::unique_lock<std::mutex> lock(mu);
      cv.wait(lock, [&]() { return done[t] == 1; });
      lock.unlock();
      for (auto& row : per_task[t]) {
        if (row_sink) row_sink(row);
        result.rows.push_back(std::move(row));
      }
    }
    for (auto& th : pool) th.join();
  }

  // Summaries in scenario/method declaration order.
  std::map<std::pair<std::string, std::string>, std::vector<RunScore>> grouped;
  for (const auto& row : result.rows) grouped[{row.scenario, row.method}].push_back(row.run_score);
  for (const auto& sc : cfg.scenarios)
    for (const auto& method : sc.methods) {
      const auto it = grouped.find({sc.name, method.label});
      if (it == grouped.end()) continue;
      result.summary.push_back({sc.name, method.label, summarize(it->second)});
    }
  return result;
}

std::string results_csv_header() {
  return "scenario,method,replication,tpr_count,tpr_rate,false_positives,stable\n";
}

std::string to_csv(const ReplicationRow& row) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.4f,%.6f", row.run_score.tpr * row.run_score.support_size,
                row.run_score.tpr);
  std::string stable;
  for (std::size_t i = 0; i < row.stable.size(); ++i) {
    if (i) stable += ';';
    stable += std::to_string(row.stable[i] + 1);  // 1-based, matching x1..xp
  }
  return row.scenario + "," + row.method + "," + std::to_string(row.replication) + "," + buf +
         "," + std::to_string(row.run_score.false_positives) + "," + stable + "\n";
}

std::string summary_csv_header() {
  return "scenario,method,mean_tpr_count,mean_tpr_rate,cases_tpr1,cases_tpr0,replications,seed\n";
}

std::string to_csv(const SummaryRow& row, std::uint64_t master_seed) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.4f,%.6f", row.summary.mean_tpr_count,
                row.summary.mean_tpr_rate);
  return row.scenario + "," + row.method + "," + buf + "," + std::to_string(row.summary.cases_tpr1) +
         "," + std::to_string(row.summary.cases_tpr0) + "," +
         std::to_string(row.summary.replications) + "," + std::to_string(master_seed) + "\n";
}

}  // namespace stabsel
