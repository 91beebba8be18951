#ifndef STABSEL_BREAKDOWN_HPP
#define STABSEL_BREAKDOWN_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "stabsel/resample.hpp"

namespace stabsel {

// ---------------------------------------------------------------------------
// Discrete laws (log-space factorial arithmetic throughout)
// ---------------------------------------------------------------------------

struct Binomial {
  long long trials = 0;
  double prob = 0.0;
};

// Counts successes when drawing `draws` without replacement from a population
// of size `population` containing `successes` success items.
struct Hypergeometric {
  long long population = 0;
  long long successes = 0;
  long long draws = 0;
};

struct MultivariateHypergeometric {
  std::vector<long long> counts;  // category sizes, sum = population
  long long draws = 0;
};

struct Multinomial {
  long long trials = 0;
  std::vector<double> probs;  // sums to 1 within 1e-12
};

using DiscreteLaw = std::variant<Binomial, Hypergeometric, MultivariateHypergeometric, Multinomial>;

double log_factorial(long long n);
double log_choose(long long n, long long k);

// Univariate pmf/cdf; out-of-support outcomes have probability 0.
double pmf(const DiscreteLaw& law, long long x);
double cdf(const DiscreteLaw& law, long long x);
// Multivariate pmf (MultivariateHypergeometric / Multinomial).
double pmf(const DiscreteLaw& law, std::span<const long long> x);

// P(X > k) summed from the upper end (exact, no 1-cdf cancellation).
double upper_tail(const DiscreteLaw& law, long long k);

// ---------------------------------------------------------------------------
// Breakdown queries
// ---------------------------------------------------------------------------

enum class AttackScenario { Optimistic, Pessimistic };
enum class Aggregation { Mean, Median };

struct ThresholdContext {
  double pi_thr = 0.5;       // stability threshold pi
  double max_pi_plus = 1.0;  // max_j pi_hat_j^+ over the relevant variables
};

struct RankContext {
  int q = 0;                  // size of the stable set
  int s = 0;                  // relevant variables among the current top q
  double max_pi_plus = 1.0;   // max over the s relevant top-q frequencies
  double min_pi_minus = 0.0;  // min over the next-best s non-relevant frequencies
};

// Per-row contaminated-cell counts, grouped: z[l] rows carry l outlying cells
// (response column included, so l ranges over 0..p+1), z_rel[l'] rows carry l'
// outlying cells within the s0 relevant columns, response_outliers rows have
// an outlying response cell.
struct CellProfile {
  std::vector<long long> z;
  std::vector<long long> z_rel;
  long long response_outliers = 0;
  int p = 0;
  int s0 = 0;

  void validate(long long n) const;
  long long total_cells() const;      // sum l * z[l]
  long long relevant_cells() const;   // sum l' * z_rel[l']
};

struct BreakdownQuery {
  enum class Rule { Threshold, Rank };
  enum class Contamination { Case, Cell };

  Rule rule = Rule::Threshold;
  Contamination contamination = Contamination::Case;
  AttackScenario scenario = AttackScenario::Pessimistic;
  Resampling resampling = Resampling::Subsample;

  long long n = 0;
  long long n_sub = 0;
  long long B = 0;
  double c = 0.5;    // case-BDP of the base algorithm, or the cell-BDP for Cell queries
  long long m = 0;   // contaminated rows (Case) / response-cell outliers (Cell)

  std::optional<ThresholdContext> threshold;
  std::optional<RankContext> rank;
  std::optional<CellProfile> cell;

  // When set, replaces the broken-model count K in the probability (used for
  // the surplus denominator and the trimming adjustment).
  std::optional<long long> k_override;

  void validate() const;
};

struct BreakdownResult {
  double lo = 0.0;  // point value when !is_interval
  double hi = 0.0;
  bool is_interval = false;
  long long broken_model_threshold = 0;      // K entering "> K"
  long long broken_model_threshold_lo = 0;   // full-gap K of the interval's lower end
  enum class Method { Exact, MonteCarlo } method = Method::Exact;
  long long mc_samples = 0;
  double std_err = 0.0;
  bool immediate_breakdown = false;      // precondition/standing assumption failed
  bool interval_family_caveat = false;   // rank/cell optimistic: min over interval family
  bool half_gap_adjustment_ambiguous = false;  // trimming of a half-gap count applied

  double value() const { return lo; }
};

struct MonteCarloConfig {
  long long trials = 200000;
  std::uint64_t seed = 0x5eedULL;
};

// ---------------------------------------------------------------------------
// Resampling / bagging breakdown probabilities
// ---------------------------------------------------------------------------

// p*: probability that one resample picks up at least ceil(c * n_sub)
// contaminated rows, out of m contaminated among n.
double per_resample_overrun(double c, long long n_sub, Resampling kind, long long n, long long m);

// Probability that at least one of B resamples is sufficiently contaminated.
// eps = m/n; for subsampling eps must be a multiple of 1/n.
double prob_resample_overrun(double c, long long n_sub, long long B, double eps, Resampling kind,
                             long long n);

struct BdpValue {
  double value = 1.0;
  long long m_star = -1;
  bool reached = false;
};

// Smallest eps in {0, 1/n, ..., 1} with overrun probability > alpha.
BdpValue resampling_bdp(double c, long long n_sub, long long B, double alpha, Resampling kind,
                        long long n);

// Bounded-domain bagging: Mean aggregation breaks only when every resample is
// sufficiently contaminated; Median when at least floor((B+1)/2) are.
double prob_bagging_bounded_breakdown(double c, long long n_sub, long long B, double eps,
                                      Resampling kind, long long n, Aggregation agg);

// Universal bound min(q, k) / (p + k) on the cell-wise variable selection BDP.
double vsbdp_upper_bound(long long q_true, long long k, long long p);

// ---------------------------------------------------------------------------
// Stability Selection breakdown probabilities
// ---------------------------------------------------------------------------

BreakdownResult prob_breakdown_threshold_case(const BreakdownQuery& q);
BreakdownResult prob_breakdown_threshold_cell(const BreakdownQuery& q,
                                              const MonteCarloConfig& mc = {});
BreakdownResult prob_breakdown_rank_case(const BreakdownQuery& q);
BreakdownResult prob_breakdown_rank_cell(const BreakdownQuery& q, const MonteCarloConfig& mc = {});

// Dispatch on (rule, contamination).
BreakdownResult evaluate_breakdown(const BreakdownQuery& q, const MonteCarloConfig& mc = {});

// Minimum contamination fraction whose breakdown probability reaches alpha:
// scans prob_of_m over m = 0..m_max and reports m*/denominator. A probability
// of exactly zero never counts as reaching alpha.
BdpValue stab_bdp_scan(const std::function<double(long long)>& prob_of_m, long long m_max,
                       double denominator, double alpha);

// Case-wise convenience: scans the query's m from 0 to n. Interval-valued
// queries (rank + optimistic) are rejected.
BdpValue stab_bdp(const BreakdownQuery& query_template, double alpha);

// Broken-model count after trimming: k_gamma tolerated broken trimmed models
// plus the rescaled count ceil((B - floor(gamma B)) * K / B). special_half
// doubles the k_gamma term, which is the reading for the half-gap (rank)
// counts; its parenthesization in the source is ambiguous, so results built
// from it carry half_gap_adjustment_ambiguous.
long long trimmed_breakdown_threshold(long long K, long long B, double gamma, long long k_gamma,
                                      bool special_half = false);

enum class SurplusMode { ProbabilityRatio, BdpRatio };

struct Surplus {
  double value = 0.0;
  bool defined = false;
  double numerator = 0.0;
  double denominator = 0.0;
  bool half_gap_adjustment_ambiguous = false;
};

// Breakdown probability (or minimal breaking m) relative to the single-broken-
// resample baseline ("> 0"). gamma/k_gamma apply the trimming adjustment to
// the numerator's broken-model count.
Surplus robustness_surplus(const BreakdownQuery& q, SurplusMode mode, double alpha = 0.0,
                           double gamma = 0.0, long long k_gamma = 0);

// Simulation oracle: replays the resampling process with the abstract rule
// "resample b is broken iff its contaminated count reaches ceil(c * n_sub)"
// (or the cell-count thresholds) and counts trials with more than K broken
// models. Entirely independent of the closed-form path.
BreakdownResult monte_carlo_breakdown(const BreakdownQuery& q, long long trials,
                                      std::uint64_t seed);

}  // namespace stabsel

#endif
