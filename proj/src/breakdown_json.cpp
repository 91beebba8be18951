#include "stabsel/breakdown_json.hpp"

#include <set>
#include <stdexcept>

#include <json.hpp>

namespace stabsel {

namespace {
void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw std::invalid_argument("bdp query: unknown key '" + it.key() + "' in " + where);
}
}  // namespace

BreakdownQuery parse_breakdown_query(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("bdp query: JSON parse error: ") + e.what());
  }
  reject_unknown(j,
                 {"rule", "contamination", "scenario", "resampling", "n", "n_sub", "B", "c", "m",
                  "pi_thr", "max_pi_plus", "q", "s", "min_pi_minus", "cell", "k_override"},
                 "top level");

  BreakdownQuery q;
  const std::string rule = j.at("rule").get<std::string>();
  if (rule == "threshold")
    q.rule = BreakdownQuery::Rule::Threshold;
  else if (rule == "rank")
    q.rule = BreakdownQuery::Rule::Rank;
  else
    throw std::invalid_argument("bdp query: rule must be 'threshold' or 'rank'");

  const std::string contamination = j.value("contamination", std::string("case"));
  if (contamination == "case")
    q.contamination = BreakdownQuery::Contamination::Case;
  else if (contamination == "cell")
    q.contamination = BreakdownQuery::Contamination::Cell;
  else
    throw std::invalid_argument("bdp query: contamination must be 'case' or 'cell'");

  const std::string scenario = j.value("scenario", std::string("pessimistic"));
  if (scenario == "pessimistic")
    q.scenario = AttackScenario::Pessimistic;
  else if (scenario == "optimistic")
    q.scenario = AttackScenario::Optimistic;
  else
    throw std::invalid_argument("bdp query: scenario must be 'optimistic' or 'pessimistic'");

  const std::string resampling = j.value("resampling", std::string("subsample"));
  if (resampling == "subsample")
    q.resampling = Resampling::Subsample;
  else if (resampling == "bootstrap")
    q.resampling = Resampling::Bootstrap;
  else
    throw std::invalid_argument("bdp query: resampling must be 'subsample' or 'bootstrap'");

  q.n = j.at("n").get<long long>();
  q.n_sub = j.at("n_sub").get<long long>();
  q.B = j.at("B").get<long long>();
  q.c = j.at("c").get<double>();
  q.m = j.value("m", 0LL);

  if (q.rule == BreakdownQuery::Rule::Threshold) {
    if (!j.contains("pi_thr") || !j.contains("max_pi_plus"))
      throw std::invalid_argument("bdp query: threshold rule needs pi_thr and max_pi_plus");
    q.threshold = ThresholdContext{j.at("pi_thr").get<double>(), j.at("max_pi_plus").get<double>()};
  } else {
    if (!j.contains("q") || !j.contains("s") || !j.contains("max_pi_plus") ||
        !j.contains("min_pi_minus"))
      throw std::invalid_argument("bdp query: rank rule needs q, s, max_pi_plus, min_pi_minus");
    q.rank = RankContext{j.at("q").get<int>(), j.at("s").get<int>(),
                         j.at("max_pi_plus").get<double>(), j.at("min_pi_minus").get<double>()};
  }

  if (q.contamination == BreakdownQuery::Contamination::Cell) {
    if (!j.contains("cell")) throw std::invalid_argument("bdp query: missing cell profile");
    const auto& cj = j.at("cell");
    reject_unknown(cj, {"z", "z_rel", "p", "s0"}, "cell");
    CellProfile prof;
    prof.z = cj.at("z").get<std::vector<long long>>();
    prof.z_rel = cj.at("z_rel").get<std::vector<long long>>();
    prof.p = cj.at("p").get<int>();
    prof.s0 = cj.at("s0").get<int>();
    prof.response_outliers = q.m;
    q.cell = std::move(prof);
  }

  if (j.contains("k_override")) q.k_override = j.at("k_override").get<long long>();
  q.validate();
  return q;
}

std::string breakdown_result_to_json(const BreakdownResult& r) {
  nlohmann::json j;
  if (r.is_interval) {
    j["interval"] = {r.lo, r.hi};
    j["broken_model_threshold_lo"] = r.broken_model_threshold_lo;
  } else {
    j["value"] = r.lo;
  }
  j["broken_model_threshold"] = r.broken_model_threshold;
  j["method"] = (r.method == BreakdownResult::Method::Exact) ? "exact" : "monte_carlo";
  if (r.method == BreakdownResult::Method::MonteCarlo) {
    j["mc_samples"] = r.mc_samples;
    j["std_err"] = r.std_err;
  }
  nlohmann::json flags = nlohmann::json::object();
  if (r.immediate_breakdown) flags["immediate_breakdown"] = true;
  if (r.interval_family_caveat) flags["interval_family_caveat"] = true;
  if (r.half_gap_adjustment_ambiguous) flags["half_gap_adjustment_ambiguous"] = true;
  j["flags"] = flags;
  return j.dump(2);
}

}  // namespace stabsel
