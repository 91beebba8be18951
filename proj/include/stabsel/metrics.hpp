#ifndef STABSEL_METRICS_HPP
#define STABSEL_METRICS_HPP

#include <vector>

namespace stabsel {

struct RunScore {
  double tpr = 0.0;
  bool full_recovery = false;  // tpr == 1
  bool total_miss = false;     // tpr == 0, the variable-selection breakdown event
  int false_positives = 0;
  int support_size = 0;
};

RunScore score(const std::vector<int>& stable, const std::vector<int>& support);

struct ScoreSummary {
  int replications = 0;
  double mean_tpr_rate = 0.0;   // in [0,1]
  double mean_tpr_count = 0.0;  // mean number of recovered predictors
  int cases_tpr1 = 0;
  int cases_tpr0 = 0;
};

ScoreSummary summarize(const std::vector<RunScore>& scores);

}  // namespace stabsel

#endif
