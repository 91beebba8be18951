#include "stabsel/breakdown.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

#include "stabsel/math_util.hpp"
#include "stabsel/rng.hpp"

namespace stabsel {

// ---------------------------------------------------------------------------
// log factorials
// ---------------------------------------------------------------------------

double log_factorial(long long n) {
  if (n < 0) throw std::invalid_argument("log_factorial: negative argument");
  static std::vector<double> table = {0.0, 0.0};
  static long double running = 0.0L;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  while (static_cast<long long>(table.size()) <= n) {
    running += std::log(static_cast<long double>(table.size()));
    table.push_back(static_cast<double>(running));
  }
  return table[static_cast<std::size_t>(n)];
}

double log_choose(long long n, long long k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

// ---------------------------------------------------------------------------
// pmf / cdf
// ---------------------------------------------------------------------------

namespace {

struct Support {
  long long lo;
  long long hi;
};

Support support_of(const Binomial& b) { return {0, b.trials}; }

Support support_of(const Hypergeometric& h) {
  return {std::max(0LL, h.draws - (h.population - h.successes)), std::min(h.successes, h.draws)};
}

double pmf_binomial(const Binomial& b, long long k) {
  if (b.trials < 0 || b.prob < 0.0 || b.prob > 1.0)
    throw std::invalid_argument("Binomial: invalid parameters");
  if (k < 0 || k > b.trials) return 0.0;
  if (b.prob == 0.0) return k == 0 ? 1.0 : 0.0;
  if (b.prob == 1.0) return k == b.trials ? 1.0 : 0.0;
  const double log_p = log_choose(b.trials, k) + k * std::log(b.prob) +
                       (b.trials - k) * std::log1p(-b.prob);
  return std::exp(log_p);
}

double pmf_hypergeometric(const Hypergeometric& h, long long k) {
  if (h.population < 0 || h.successes < 0 || h.successes > h.population || h.draws < 0 ||
      h.draws > h.population)
    throw std::invalid_argument("Hypergeometric: invalid parameters");
  const Support s = support_of(h);
  if (k < s.lo || k > s.hi) return 0.0;
  const double log_p = log_choose(h.successes, k) +
                       log_choose(h.population - h.successes, h.draws - k) -
                       log_choose(h.population, h.draws);
  return std::exp(log_p);
}

}  // namespace

double pmf(const DiscreteLaw& law, long long x) {
  if (const auto* b = std::get_if<Binomial>(&law)) return pmf_binomial(*b, x);
  if (const auto* h = std::get_if<Hypergeometric>(&law)) return pmf_hypergeometric(*h, x);
  throw std::invalid_argument("pmf: univariate outcome for a multivariate law");
}

double pmf(const DiscreteLaw& law, std::span<const long long> x) {
  if (const auto* mh = std::get_if<MultivariateHypergeometric>(&law)) {
    if (x.size() != mh->counts.size())
      throw std::invalid_argument("pmf: outcome arity mismatch");
    long long population = 0, drawn = 0;
    for (std::size_t l = 0; l < x.size(); ++l) {
      if (x[l] < 0 || x[l] > mh->counts[l]) return 0.0;
      population += mh->counts[l];
      drawn += x[l];
    }
    if (drawn != mh->draws) return 0.0;
    double log_p = -log_choose(population, mh->draws);
    for (std::size_t l = 0; l < x.size(); ++l) log_p += log_choose(mh->counts[l], x[l]);
    return std::exp(log_p);
  }
  if (const auto* mn = std::get_if<Multinomial>(&law)) {
    if (x.size() != mn->probs.size())
      throw std::invalid_argument("pmf: outcome arity mismatch");
    double total_prob = 0.0;
    for (double p : mn->probs) {
      if (p < 0.0) throw std::invalid_argument("Multinomial: negative probability");
      total_prob += p;
    }
    if (std::abs(total_prob - 1.0) > 1e-12)
      throw std::invalid_argument("Multinomial: probabilities must sum to 1");
    long long drawn = 0;
    double log_p = 0.0;
    for (std::size_t l = 0; l < x.size(); ++l) {
      if (x[l] < 0) return 0.0;
      drawn += x[l];
      if (x[l] > 0) {
        if (mn->probs[l] == 0.0) return 0.0;
        log_p += x[l] * std::log(mn->probs[l]) - log_factorial(x[l]);
      }
    }
    if (drawn != mn->trials) return 0.0;
    log_p += log_factorial(mn->trials);
    return std::exp(log_p);
  }
  throw std::invalid_argument("pmf: multivariate outcome for a univariate law");
}

double cdf(const DiscreteLaw& law, long long x) {
  Support s{};
  if (const auto* b = std::get_if<Binomial>(&law))
    s = support_of(*b);
  else if (const auto* h = std::get_if<Hypergeometric>(&law))
    s = support_of(*h);
  else
    throw std::invalid_argument("cdf: only defined for univariate laws");

  if (x < s.lo) return 0.0;
  if (x >= s.hi) return 1.0;
  double acc = 0.0;
  for (long long k = s.lo; k <= x; ++k) acc += pmf(law, k);
  return std::min(acc, 1.0);
}

double upper_tail(const DiscreteLaw& law, long long k) {
  Support s{};
  if (const auto* b = std::get_if<Binomial>(&law))
    s = support_of(*b);
  else if (const auto* h = std::get_if<Hypergeometric>(&law))
    s = support_of(*h);
  else
    throw std::invalid_argument("upper_tail: only defined for univariate laws");

  if (k < s.lo) return 1.0;
  if (k >= s.hi) return 0.0;
  double acc = 0.0;
  for (long long j = s.hi; j > k; --j) acc += pmf(law, j);
  return std::min(acc, 1.0);
}

// ---------------------------------------------------------------------------
// resampling / bagging probabilities
// ---------------------------------------------------------------------------

namespace {

// P(Bin(B, p) > K), summed from the right.
double binom_exceeds(long long B, double p, long long K) {
  if (K < 0) return 1.0;
  if (K >= B) return 0.0;
  return upper_tail(Binomial{B, p}, K);
}

void check_base(double c, long long n_sub, long long n, long long m) {
  if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("breakdown: c must lie in (0,1]");
  if (n_sub < 1 || n_sub >= n) throw std::invalid_argument("breakdown: need 1 <= n_sub < n");
  if (m < 0 || m > n) throw std::invalid_argument("breakdown: need 0 <= m <= n");
}

}  // namespace

double per_resample_overrun(double c, long long n_sub, Resampling kind, long long n, long long m) {
  check_base(c, n_sub, n, m);
  const long long need = ceil_gaussian(c * static_cast<double>(n_sub));
  if (kind == Resampling::Bootstrap) {
    const double eps = static_cast<double>(m) / static_cast<double>(n);
    return binom_exceeds(n_sub, eps, need - 1);  // P(Bin >= need)
  }
  // Clean rows drawn <= floor((1-c) n_sub) <=> contaminated rows >= need.
  return cdf(Hypergeometric{n, n - m, n_sub}, n_sub - need);
}

double prob_resample_overrun(double c, long long n_sub, long long B, double eps, Resampling kind,
                             long long n) {
  if (B < 1) throw std::invalid_argument("prob_resample_overrun: need B >= 1");
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("prob_resample_overrun: eps in [0,1]");
  long long m;
  if (kind == Resampling::Subsample) {
    m = std::llround(eps * static_cast<double>(n));
    if (std::abs(eps * static_cast<double>(n) - static_cast<double>(m)) > 1e-6)
      throw std::invalid_argument("prob_resample_overrun: subsampling needs eps = m/n");
  } else {
    m = std::llround(eps * static_cast<double>(n));
  }
  double p_star;
  if (kind == Resampling::Bootstrap) {
    check_base(c, n_sub, n, std::min(m, n));
    const long long need = ceil_gaussian(c * static_cast<double>(n_sub));
    p_star = binom_exceeds(n_sub, eps, need - 1);
  } else {
    p_star = per_resample_overrun(c, n_sub, kind, n, m);
  }
  if (p_star <= 0.0) return 0.0;
  if (p_star >= 1.0) return 1.0;
  // 1 - (1 - p*)^B without cancellation for small p*.
  return -std::expm1(static_cast<double>(B) * std::log1p(-p_star));
}

BdpValue resampling_bdp(double c, long long n_sub, long long B, double alpha, Resampling kind,
                        long long n) {
  if (alpha < 0.0 || alpha >= 1.0) throw std::invalid_argument("resampling_bdp: alpha in [0,1)");
  for (long long m = 0; m <= n; ++m) {
    const double eps = static_cast<double>(m) / static_cast<double>(n);
    if (prob_resample_overrun(c, n_sub, B, eps, kind, n) > alpha)
      return {eps, m, true};
  }
  return {1.0, -1, false};
}

double prob_bagging_bounded_breakdown(double c, long long n_sub, long long B, double eps,
                                      Resampling kind, long long n, Aggregation agg) {
  if (B < 1) throw std::invalid_argument("prob_bagging_bounded_breakdown: need B >= 1");
  long long m = std::llround(eps * static_cast<double>(n));
  if (kind == Resampling::Subsample &&
      std::abs(eps * static_cast<double>(n) - static_cast<double>(m)) > 1e-6)
    throw std::invalid_argument("prob_bagging_bounded_breakdown: subsampling needs eps = m/n");

  double p_star;
  if (kind == Resampling::Bootstrap) {
    check_base(c, n_sub, n, std::min(m, n));
    const long long need = ceil_gaussian(c * static_cast<double>(n_sub));
    p_star = binom_exceeds(n_sub, eps, need - 1);
  } else {
    p_star = per_resample_overrun(c, n_sub, kind, n, m);
  }

  if (agg == Aggregation::Mean) {
    // All B resamples sufficiently contaminated.
    return binom_exceeds(B, p_star, B - 1);
  }
  // At least floor((B+1)/2) resamples sufficiently contaminated.
  return binom_exceeds(B, p_star, (B + 1) / 2 - 1);
}

double vsbdp_upper_bound(long long q_true, long long k, long long p) {
  if (q_true < 0 || q_true > p || k < 1) throw std::invalid_argument("vsbdp_upper_bound: bad args");
  return static_cast<double>(std::min(q_true, k)) / static_cast<double>(p + k);
}

// ---------------------------------------------------------------------------
// query validation
// ---------------------------------------------------------------------------

long long CellProfile::total_cells() const {
  long long t = 0;
  for (std::size_t l = 0; l < z.size(); ++l) t += static_cast<long long>(l) * z[l];
  return t;
}

long long CellProfile::relevant_cells() const {
  long long t = 0;
  for (std::size_t l = 0; l < z_rel.size(); ++l) t += static_cast<long long>(l) * z_rel[l];
  return t;
}

void CellProfile::validate(long long n) const {
  if (p < 1 || s0 < 1 || s0 > p) throw std::invalid_argument("CellProfile: need 1 <= s0 <= p");
  if (z.empty() || static_cast<long long>(z.size()) > p + 2)
    throw std::invalid_argument("CellProfile: z must cover categories 0..p+1");
  if (z_rel.empty() || static_cast<long long>(z_rel.size()) > s0 + 1)
    throw std::invalid_argument("CellProfile: z_rel must cover categories 0..s0");
  long long sum_z = 0, sum_rel = 0;
  for (long long v : z) {
    if (v < 0) throw std::invalid_argument("CellProfile: negative count");
    sum_z += v;
  }
  for (long long v : z_rel) {
    if (v < 0) throw std::invalid_argument("CellProfile: negative count");
    sum_rel += v;
  }
  if (sum_z != n) throw std::invalid_argument("CellProfile: sum(z) != n");
  if (sum_rel != n) throw std::invalid_argument("CellProfile: sum(z_rel) != n");
  if (response_outliers < 0 || response_outliers > n - z[0])
    throw std::invalid_argument("CellProfile: response outliers exceed rows with outlying cells");
  if (relevant_cells() + response_outliers > total_cells())
    throw std::invalid_argument("CellProfile: relevant + response cells exceed total cells");
}

void BreakdownQuery::validate() const {
  if (n < 2) throw std::invalid_argument("BreakdownQuery: need n >= 2");
  if (B < 1) throw std::invalid_argument("BreakdownQuery: need B >= 1");
  check_base(c, n_sub, n, m);
  if (rule == Rule::Threshold && !threshold)
    throw std::invalid_argument("BreakdownQuery: threshold context missing");
  if (rule == Rule::Rank) {
    if (!rank) throw std::invalid_argument("BreakdownQuery: rank context missing");
    if (rank->q < 1 || rank->s < 0 || rank->s > rank->q)
      throw std::invalid_argument("BreakdownQuery: need 0 <= s <= q, q >= 1");
  }
  if (contamination == Contamination::Cell) {
    if (!cell) throw std::invalid_argument("BreakdownQuery: cell profile missing");
    cell->validate(n);
    if (cell->response_outliers != m)
      throw std::invalid_argument("BreakdownQuery: m must equal cell.response_outliers");
  }
}

// ---------------------------------------------------------------------------
// broken-model counts K
// ---------------------------------------------------------------------------

namespace {

long long k_threshold(const BreakdownQuery& q) {
  return ceil_gaussian(static_cast<double>(q.B) * (q.threshold->max_pi_plus - q.threshold->pi_thr));
}

double rank_gap(const BreakdownQuery& q) { return q.rank->max_pi_plus - q.rank->min_pi_minus; }

long long k_rank_half(const BreakdownQuery& q) {
  return ceil_gaussian(0.5 * static_cast<double>(q.B) * rank_gap(q));
}

long long k_rank_full(const BreakdownQuery& q) {
  return ceil_gaussian(static_cast<double>(q.B) * rank_gap(q));
}

BreakdownResult immediate_result(long long k) {
  BreakdownResult r;
  r.lo = r.hi = 1.0;
  r.broken_model_threshold = k;
  r.immediate_breakdown = true;
  return r;
}

BreakdownResult point_result(double v, long long k) {
  BreakdownResult r;
  r.lo = r.hi = v;
  r.broken_model_threshold = k;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Exact weighted tails over contamination categories
// ---------------------------------------------------------------------------

namespace {

struct TailResult {
  double prob = 0.0;
  bool exact = true;
  long long samples = 0;
  double std_err = 0.0;
};

constexpr int kMaxExactCategories = 6;
constexpr double kMaxExactTerms = 1e7;

// P( sum_l l * z_l >= threshold ) when drawing n_draw rows; counts[l] rows
// carry weight l. Without replacement: multivariate hypergeometric; with
// replacement: multinomial with probabilities counts[l] / n.
TailResult weighted_tail(const std::vector<long long>& counts, long long n_draw,
                         long long threshold, bool with_replacement, const MonteCarloConfig& mc) {
  long long n = 0;
  for (long long v : counts) n += v;
  if (n_draw < 0 || (!with_replacement && n_draw > n))
    throw std::invalid_argument("weighted_tail: invalid draw count");

  std::vector<int> weights;  // nonempty categories only
  std::vector<long long> sizes;
  for (std::size_t l = 0; l < counts.size(); ++l)
    if (counts[l] > 0) {
      weights.push_back(static_cast<int>(l));
      sizes.push_back(counts[l]);
    }
  const int k = static_cast<int>(weights.size());

  TailResult out;
  if (threshold <= 0) {
    out.prob = 1.0;
    return out;
  }
  if (k == 0) {
    out.prob = 0.0;
    return out;
  }

  double term_bound = 1.0;
  if (!with_replacement) {
    for (long long s : sizes) term_bound *= static_cast<double>(std::min(s, n_draw) + 1);
  } else {
    // C(n_draw + k - 1, k - 1)
    term_bound = std::exp(log_choose(n_draw + k - 1, k - 1));
  }

  if (k <= kMaxExactCategories && term_bound <= kMaxExactTerms) {
    // Exact lattice enumeration; the last category absorbs the remainder.
    std::vector<std::vector<double>> log_weight_tables(k);
    for (int c = 0; c < k; ++c) {
      const long long cap = with_replacement ? n_draw : std::min(sizes[c], n_draw);
      log_weight_tables[c].resize(static_cast<std::size_t>(cap) + 1);
      for (long long z = 0; z <= cap; ++z) {
        if (!with_replacement) {
          log_weight_tables[c][z] = log_choose(sizes[c], z);
        } else {
          const double p = static_cast<double>(sizes[c]) / static_cast<double>(n);
          log_weight_tables[c][z] = z * std::log(p) - log_factorial(z);
        }
      }
    }
    const double log_norm =
        with_replacement ? -log_factorial(n_draw) : log_choose(n, n_draw);

    double acc = 0.0;
    std::vector<long long> z(k, 0);
    // Depth-first over categories 0..k-2; category k-1 absorbs.
    std::function<void(int, long long, long long, double)> recurse =
        [&](int depth, long long remaining, long long weight_so_far, double log_p_so_far) {
          if (depth == k - 1) {
            const long long cap =
                with_replacement ? n_draw : std::min(sizes[depth], n_draw);
            if (remaining < 0 || remaining > cap) return;
            const long long total_weight = weight_so_far + weights[depth] * remaining;
            if (total_weight < threshold) return;
            acc += std::exp(log_p_so_far + log_weight_tables[depth][remaining] - log_norm);
            return;
          }
          const long long cap =
              std::min(remaining, with_replacement ? n_draw : std::min(sizes[depth], n_draw));
          for (long long v = 0; v <= cap; ++v)
            recurse(depth + 1, remaining - v, weight_so_far + weights[depth] * v,
                    log_p_so_far + log_weight_tables[depth][v]);
        };
    recurse(0, n_draw, 0, 0.0);
    out.prob = std::min(acc, 1.0);
    return out;
  }

  // Monte-Carlo fallback.
  Rng rng(mc.seed);
  long long hits = 0;
  std::vector<long long> urn(sizes);
  for (long long t = 0; t < mc.trials; ++t) {
    long long weight = 0;
    if (with_replacement) {
      for (long long d = 0; d < n_draw; ++d) {
        long long u = static_cast<long long>(rng.uniform_below(static_cast<std::uint64_t>(n)));
        for (int c = 0; c < k; ++c) {
          if (u < sizes[c]) {
            weight += weights[c];
            break;
          }
          u -= sizes[c];
        }
      }
    } else {
      urn = sizes;
      long long left = n;
      for (long long d = 0; d < n_draw; ++d) {
        long long u = static_cast<long long>(rng.uniform_below(static_cast<std::uint64_t>(left)));
        for (int c = 0; c < k; ++c) {
          if (u < urn[c]) {
            weight += weights[c];
            --urn[c];
            break;
          }
          u -= urn[c];
        }
        --left;
      }
    }
    if (weight >= threshold) ++hits;
  }
  out.exact = false;
  out.samples = mc.trials;
  out.prob = static_cast<double>(hits) / static_cast<double>(mc.trials);
  out.std_err = std::sqrt(out.prob * (1.0 - out.prob) / static_cast<double>(mc.trials));
  return out;
}

// d/dp P(Bin(B, p) > K) = B * pmf(Bin(B-1, p), K); used to propagate a
// Monte-Carlo standard error on p through the outer binomial.
double binom_exceeds_derivative(long long B, double p, long long K) {
  if (K < 0 || K >= B) return 0.0;
  return static_cast<double>(B) * pmf_binomial(Binomial{B - 1, p}, K);
}

struct CellPart {
  double prob = 0.0;       // P_v
  bool exact = true;
  long long samples = 0;
  double std_err = 0.0;    // on P_v
};

CellPart cell_part(const TailResult& tail, long long B, long long K) {
  CellPart part;
  part.prob = binom_exceeds(B, tail.prob, K);
  part.exact = tail.exact;
  part.samples = tail.samples;
  part.std_err = tail.exact ? 0.0 : binom_exceeds_derivative(B, tail.prob, K) * tail.std_err;
  return part;
}

}  // namespace

// ---------------------------------------------------------------------------
// Stability Selection breakdown: threshold rule
// ---------------------------------------------------------------------------

BreakdownResult prob_breakdown_threshold_case(const BreakdownQuery& q) {
  q.validate();
  if (q.rule != BreakdownQuery::Rule::Threshold || q.contamination != BreakdownQuery::Contamination::Case)
    throw std::invalid_argument("prob_breakdown_threshold_case: wrong query kind");
  const long long K = q.k_override.value_or(k_threshold(q));
  if (q.threshold->max_pi_plus < q.threshold->pi_thr) return immediate_result(K);
  const double p_star = per_resample_overrun(q.c, q.n_sub, q.resampling, q.n, q.m);
  return point_result(binom_exceeds(q.B, p_star, K), K);
}

namespace {

// Common core of the cell-wise breakdown evaluations: the degenerate cases and the
// min(P1, P2, P3) assembly, parameterized by the broken-model count(s).
BreakdownResult cell_breakdown(const BreakdownQuery& q, long long K,
                               std::optional<long long> K_full, const MonteCarloConfig& mc,
                               double p3_point, std::optional<double> p3_lo) {
  const CellProfile& prof = *q.cell;
  const double c_tilde = q.c;

  // i) immediate: too many outlying cells in the relevant columns or the
  //    response column, regardless of resampling.
  const double rel_frac = static_cast<double>(prof.relevant_cells()) /
                          (static_cast<double>(q.n) * prof.s0);
  const double resp_frac =
      static_cast<double>(prof.response_outliers) / static_cast<double>(q.n);
  if (rel_frac > c_tilde || resp_frac > c_tilde) {
    BreakdownResult r = point_result(1.0, K);
    if (K_full) {
      r.is_interval = true;
      r.hi = 1.0;
      r.broken_model_threshold_lo = *K_full;
    }
    return r;
  }

  // ii) every row below/above the per-row cell budget.
  const long long row_budget = floor_gaussian(c_tilde * static_cast<double>(prof.p + 1));
  bool all_below = true, all_above = true;
  for (std::size_t l = 0; l < prof.z.size(); ++l) {
    if (prof.z[l] == 0) continue;
    if (static_cast<long long>(l) > row_budget) all_below = false;
    if (static_cast<long long>(l) <= row_budget) all_above = false;
  }
  if (all_below || all_above) {
    const double v = all_below ? 0.0 : 1.0;
    BreakdownResult r = point_result(v, K);
    if (K_full) {
      r.is_interval = true;
      r.hi = v;
      r.broken_model_threshold_lo = *K_full;
    }
    return r;
  }

  // iii)/iv): tails of the contaminated-cell count per resample.
  const bool with_replacement = (q.resampling == Resampling::Bootstrap);
  const long long t_all = ceil_gaussian(c_tilde * static_cast<double>(q.n_sub) * (prof.p + 1));
  const long long t_rel = ceil_gaussian(c_tilde * static_cast<double>(q.n_sub) * prof.s0);
  MonteCarloConfig mc1 = mc;
  MonteCarloConfig mc2 = mc;
  mc2.seed = mix_seed(mc.seed, 2);
  const TailResult tail_all = weighted_tail(prof.z, q.n_sub, t_all, with_replacement, mc1);
  const TailResult tail_rel = weighted_tail(prof.z_rel, q.n_sub, t_rel, with_replacement, mc2);

  auto assemble = [&](long long k_used, double p3) {
    const CellPart p1 = cell_part(tail_all, q.B, k_used);
    const CellPart p2 = cell_part(tail_rel, q.B, k_used);
    CellPart p3_part;
    p3_part.prob = p3;
    CellPart best = p1;
    if (p2.prob < best.prob) best = p2;
    if (p3_part.prob < best.prob) best = p3_part;
    best.exact = p1.exact && p2.exact;  // an MC tail anywhere taints the min
    best.samples = std::max(p1.samples, p2.samples);
    return best;
  };

  const CellPart hi_part = assemble(K, p3_point);
  BreakdownResult r = point_result(hi_part.prob, K);
  r.method = hi_part.exact ? BreakdownResult::Method::Exact : BreakdownResult::Method::MonteCarlo;
  r.mc_samples = hi_part.samples;
  r.std_err = hi_part.std_err;
  if (K_full) {
    const CellPart lo_part = assemble(*K_full, p3_lo.value_or(p3_point));
    r.is_interval = true;
    r.lo = lo_part.prob;
    r.hi = hi_part.prob;
    r.broken_model_threshold_lo = *K_full;
    if (!lo_part.exact) {
      r.method = BreakdownResult::Method::MonteCarlo;
      r.mc_samples = std::max(r.mc_samples, lo_part.samples);
      r.std_err = std::max(r.std_err, lo_part.std_err);
    }
  }
  return r;
}

}  // namespace

BreakdownResult prob_breakdown_threshold_cell(const BreakdownQuery& qexact,
                                              const MonteCarloConfig& mc) {
  BreakdownQuery q = qexact;
  q.validate();
  if (q.rule != BreakdownQuery::Rule::Threshold ||
      q.contamination != BreakdownQuery::Contamination::Cell)
    throw std::invalid_argument("prob_breakdown_threshold_cell: wrong query kind");
  const long long K = q.k_override.value_or(k_threshold(q));
  if (q.threshold->max_pi_plus < q.threshold->pi_thr) return immediate_result(K);

  // P3: response-column outliers, exactly the case-wise expression.
  const double p_star = per_resample_overrun(q.c, q.n_sub, q.resampling, q.n, q.m);
  const double p3 = binom_exceeds(q.B, p_star, K);
  return cell_breakdown(q, K, std::nullopt, mc, p3, std::nullopt);
}

// ---------------------------------------------------------------------------
// Stability Selection breakdown: rank rule
// ---------------------------------------------------------------------------

BreakdownResult prob_breakdown_rank_case(const BreakdownQuery& q) {
  q.validate();
  if (q.rule != BreakdownQuery::Rule::Rank || q.contamination != BreakdownQuery::Contamination::Case)
    throw std::invalid_argument("prob_breakdown_rank_case: wrong query kind");

  const long long K_half = q.k_override.value_or(k_rank_half(q));
  if (q.rank->s < 1 || rank_gap(q) < 0.0) return immediate_result(K_half);

  const double p_star = per_resample_overrun(q.c, q.n_sub, q.resampling, q.n, q.m);
  if (q.scenario == AttackScenario::Pessimistic)
    return point_result(binom_exceeds(q.B, p_star, K_half), K_half);

  const long long K_full = q.k_override ? *q.k_override : k_rank_full(q);
  BreakdownResult r;
  r.is_interval = true;
  r.lo = binom_exceeds(q.B, p_star, K_full);
  r.hi = binom_exceeds(q.B, p_star, K_half);
  r.broken_model_threshold = K_half;
  r.broken_model_threshold_lo = K_full;
  return r;
}

BreakdownResult prob_breakdown_rank_cell(const BreakdownQuery& qexact, const MonteCarloConfig& mc) {
  BreakdownQuery q = qexact;
  q.validate();
  if (q.rule != BreakdownQuery::Rule::Rank || q.contamination != BreakdownQuery::Contamination::Cell)
    throw std::invalid_argument("prob_breakdown_rank_cell: wrong query kind");

  const long long K_half = q.k_override.value_or(k_rank_half(q));
  if (q.rank->s < 1 || rank_gap(q) < 0.0) return immediate_result(K_half);

  const double p_star = per_resample_overrun(q.c, q.n_sub, q.resampling, q.n, q.m);
  const double p3_half = binom_exceeds(q.B, p_star, K_half);

  if (q.scenario == AttackScenario::Pessimistic)
    return cell_breakdown(q, K_half, std::nullopt, mc, p3_half, std::nullopt);

  const long long K_full = q.k_override ? *q.k_override : k_rank_full(q);
  const double p3_full = binom_exceeds(q.B, p_star, K_full);
  BreakdownResult r = cell_breakdown(q, K_half, K_full, mc, p3_half, p3_full);
  r.interval_family_caveat = !r.immediate_breakdown;
  return r;
}

BreakdownResult evaluate_breakdown(const BreakdownQuery& q, const MonteCarloConfig& mc) {
  if (q.contamination == BreakdownQuery::Contamination::Case)
    return q.rule == BreakdownQuery::Rule::Threshold ? prob_breakdown_threshold_case(q)
                                                     : prob_breakdown_rank_case(q);
  return q.rule == BreakdownQuery::Rule::Threshold ? prob_breakdown_threshold_cell(q, mc)
                                                   : prob_breakdown_rank_cell(q, mc);
}

// ---------------------------------------------------------------------------
// BDP search, trimming adjustment, surplus
// ---------------------------------------------------------------------------

BdpValue stab_bdp_scan(const std::function<double(long long)>& prob_of_m, long long m_max,
                       double denominator, double alpha) {
  if (alpha < 0.0 || alpha >= 1.0) throw std::invalid_argument("stab_bdp: alpha in [0,1)");
  for (long long m = 0; m <= m_max; ++m) {
    const double p = prob_of_m(m);
    if (p > 0.0 && p >= alpha) return {static_cast<double>(m) / denominator, m, true};
  }
  return {1.0, -1, false};
}

BdpValue stab_bdp(const BreakdownQuery& query_template, double alpha) {
  if (query_template.rule == BreakdownQuery::Rule::Rank &&
      query_template.scenario == AttackScenario::Optimistic)
    throw std::invalid_argument("stab_bdp: optimistic rank queries have no point value");
  if (query_template.contamination == BreakdownQuery::Contamination::Cell)
    throw std::invalid_argument(
        "stab_bdp: cell queries need an attack template; use stab_bdp_scan");
  auto prob_of_m = [&](long long m) {
    BreakdownQuery q = query_template;
    q.m = m;
    return evaluate_breakdown(q).value();
  };
  return stab_bdp_scan(prob_of_m, query_template.n, static_cast<double>(query_template.n), alpha);
}

long long trimmed_breakdown_threshold(long long K, long long B, double gamma, long long k_gamma,
                                      bool special_half) {
  if (B < 1) throw std::invalid_argument("trimmed_breakdown_threshold: need B >= 1");
  if (gamma < 0.0 || gamma >= 1.0)
    throw std::invalid_argument("trimmed_breakdown_threshold: gamma in [0,1)");
  const long long trimmed = floor_gaussian(gamma * static_cast<double>(B));
  if (k_gamma < 0 || k_gamma > trimmed)
    throw std::invalid_argument("trimmed_breakdown_threshold: need 0 <= k_gamma <= floor(gamma B)");
  const long long rescaled =
      ceil_gaussian(static_cast<double>(B - trimmed) * static_cast<double>(K) /
                    static_cast<double>(B));
  return (special_half ? 2 * k_gamma : k_gamma) + rescaled;
}

Surplus robustness_surplus(const BreakdownQuery& q, SurplusMode mode, double alpha, double gamma,
                           long long k_gamma) {
  q.validate();
  if (q.rule == BreakdownQuery::Rule::Rank && q.scenario == AttackScenario::Optimistic)
    throw std::invalid_argument("robustness_surplus: optimistic rank queries have no point value");

  const bool half_gap = (q.rule == BreakdownQuery::Rule::Rank);
  const long long K_base =
      q.k_override.value_or(half_gap ? k_rank_half(q) : k_threshold(q));
  const long long K_num =
      (gamma > 0.0) ? trimmed_breakdown_threshold(K_base, q.B, gamma, k_gamma, half_gap) : K_base;

  Surplus s;
  s.half_gap_adjustment_ambiguous = half_gap && gamma > 0.0;

  if (mode == SurplusMode::ProbabilityRatio) {
    BreakdownQuery num_q = q;
    num_q.k_override = K_num;
    BreakdownQuery den_q = q;
    den_q.k_override = 0;
    s.numerator = evaluate_breakdown(num_q).value();
    s.denominator = evaluate_breakdown(den_q).value();
    if (s.denominator > 0.0) {
      s.defined = true;
      s.value = s.numerator / s.denominator;
    }
    return s;
  }

  // BdpRatio: minimal m with probability exceeding alpha, with K vs with 0.
  if (q.contamination == BreakdownQuery::Contamination::Cell)
    throw std::invalid_argument("robustness_surplus: BdpRatio scans m, case-wise queries only");
  auto min_m = [&](long long k_used) -> long long {
    for (long long m = 0; m <= q.n; ++m) {
      BreakdownQuery qm = q;
      qm.m = m;
      qm.k_override = k_used;
      if (evaluate_breakdown(qm).value() > alpha) return m;
    }
    return -1;
  };
  const long long m_num = min_m(K_num);
  const long long m_den = min_m(0);
  s.numerator = static_cast<double>(m_num);
  s.denominator = static_cast<double>(m_den);
  if (m_num >= 0 && m_den > 0) {
    s.defined = true;
    s.value = static_cast<double>(m_num) / static_cast<double>(m_den);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Monte-Carlo oracle
// ---------------------------------------------------------------------------

namespace {

// Draws n_sub row labels (with/without replacement) and sums their weights.
long long simulate_resample_weight(Rng& rng, const std::vector<int>& row_weights, long long n_sub,
                                   bool with_replacement, std::vector<int>& scratch) {
  const int n = static_cast<int>(row_weights.size());
  long long total = 0;
  if (with_replacement) {
    for (long long d = 0; d < n_sub; ++d)
      total += row_weights[rng.uniform_below(static_cast<std::uint64_t>(n))];
    return total;
  }
  scratch.resize(n);
  for (int i = 0; i < n; ++i) scratch[i] = i;
  for (long long d = 0; d < n_sub; ++d) {
    const int j =
        static_cast<int>(d) + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n - d)));
    std::swap(scratch[d], scratch[j]);
    total += row_weights[scratch[d]];
  }
  return total;
}

std::vector<int> expand_profile(const std::vector<long long>& z) {
  std::vector<int> rows;
  for (std::size_t l = 0; l < z.size(); ++l)
    for (long long i = 0; i < z[l]; ++i) rows.push_back(static_cast<int>(l));
  return rows;
}

double mc_std_err(double p, long long trials) {
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(trials));
}

}  // namespace

BreakdownResult monte_carlo_breakdown(const BreakdownQuery& q, long long trials,
                                      std::uint64_t seed) {
  q.validate();
  if (trials < 1) throw std::invalid_argument("monte_carlo_breakdown: trials >= 1");

  const bool rank = (q.rule == BreakdownQuery::Rule::Rank);
  const bool optimistic = rank && q.scenario == AttackScenario::Optimistic;
  const long long K_hi = q.k_override.value_or(rank ? k_rank_half(q) : k_threshold(q));
  const long long K_lo = q.k_override.value_or(rank ? k_rank_full(q) : K_hi);
  const bool with_replacement = (q.resampling == Resampling::Bootstrap);
  const long long row_need = ceil_gaussian(q.c * static_cast<double>(q.n_sub));

  Rng rng(seed);
  std::vector<int> scratch;

  if (q.contamination == BreakdownQuery::Contamination::Case) {
    std::vector<int> row_weights(q.n, 0);
    for (long long i = 0; i < q.m; ++i) row_weights[i] = 1;
    long long hits_hi = 0, hits_lo = 0;
    for (long long t = 0; t < trials; ++t) {
      long long broken = 0;
      for (long long b = 0; b < q.B; ++b)
        if (simulate_resample_weight(rng, row_weights, q.n_sub, with_replacement, scratch) >=
            row_need)
          ++broken;
      if (broken > K_hi) ++hits_hi;
      if (broken > K_lo) ++hits_lo;
    }
    BreakdownResult r;
    r.hi = static_cast<double>(hits_hi) / trials;
    r.lo = optimistic ? static_cast<double>(hits_lo) / trials : r.hi;
    r.is_interval = optimistic;
    r.broken_model_threshold = K_hi;
    r.broken_model_threshold_lo = K_lo;
    r.method = BreakdownResult::Method::MonteCarlo;
    r.mc_samples = trials;
    r.std_err = mc_std_err(r.hi, trials);
    return r;
  }

  // Cell contamination: estimate each of the three probes on its own stream
  // and take the minimum, mirroring min(P1, P2, P3).
  const CellProfile& prof = *q.cell;
  const long long t_all = ceil_gaussian(q.c * static_cast<double>(q.n_sub) * (prof.p + 1));
  const long long t_rel = ceil_gaussian(q.c * static_cast<double>(q.n_sub) * prof.s0);

  const std::vector<int> rows_all = expand_profile(prof.z);
  const std::vector<int> rows_rel = expand_profile(prof.z_rel);
  std::vector<int> rows_resp(q.n, 0);
  for (long long i = 0; i < prof.response_outliers; ++i) rows_resp[i] = 1;

  struct Probe {
    const std::vector<int>* weights;
    long long threshold;
    long long hits_hi = 0;
    long long hits_lo = 0;
  };
  std::vector<Probe> probes = {{&rows_all, t_all}, {&rows_rel, t_rel}, {&rows_resp, row_need}};

  for (auto& probe : probes) {
    for (long long t = 0; t < trials; ++t) {
      long long broken = 0;
      for (long long b = 0; b < q.B; ++b)
        if (simulate_resample_weight(rng, *probe.weights, q.n_sub, with_replacement, scratch) >=
            probe.threshold)
          ++broken;
      if (broken > K_hi) ++probe.hits_hi;
      if (broken > K_lo) ++probe.hits_lo;
    }
  }

  long long best_hi = probes[0].hits_hi, best_lo = probes[0].hits_lo;
  for (const auto& probe : probes) {
    best_hi = std::min(best_hi, probe.hits_hi);
    best_lo = std::min(best_lo, probe.hits_lo);
  }

  BreakdownResult r;
  r.hi = static_cast<double>(best_hi) / trials;
  r.lo = optimistic ? static_cast<double>(best_lo) / trials : r.hi;
  r.is_interval = optimistic;
  r.interval_family_caveat = optimistic;
  r.broken_model_threshold = K_hi;
  r.broken_model_threshold_lo = K_lo;
  r.method = BreakdownResult::Method::MonteCarlo;
  r.mc_samples = trials;
  r.std_err = mc_std_err(r.hi, trials);
  return r;
}

}  // namespace stabsel
