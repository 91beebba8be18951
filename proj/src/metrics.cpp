#include "stabsel/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace stabsel {

RunScore score(const std::vector<int>& stable, const std::vector<int>& support) {
  if (support.empty()) throw std::invalid_argument("score: support must be nonempty");
  int hits = 0;
  int fps = 0;
  for (int j : stable) {
    if (std::find(support.begin(), support.end(), j) != support.end())
      ++hits;
    else
      ++fps;
  }
  RunScore s;
  s.support_size = static_cast<int>(support.size());
  s.tpr = static_cast<double>(hits) / s.support_size;
  s.full_recovery = (hits == s.support_size);
  s.total_miss = (hits == 0);
  s.false_positives = fps;
  return s;
}

ScoreSummary summarize(const std::vector<RunScore>& scores) {
  if (scores.empty()) throw std::invalid_argument("summarize: empty input");
  ScoreSummary out;
  out.replications = static_cast<int>(scores.size());
  double rate_sum = 0.0;
  double count_sum = 0.0;
  for (const RunScore& s : scores) {
    rate_sum += s.tpr;
    count_sum += s.tpr * s.support_size;
    if (s.full_recovery) ++out.cases_tpr1;
    if (s.total_miss) ++out.cases_tpr0;
  }
  out.mean_tpr_rate = rate_sum / out.replications;
  out.mean_tpr_count = count_sum / out.replications;
  return out;
}

}  // namespace stabsel
