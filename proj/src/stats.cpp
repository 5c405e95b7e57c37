#include "hemvip/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hemvip/special_functions.hpp"

namespace hemvip {

Interval clopper_pearson_ci(int successes, int trials, double confidence) {
  if (trials <= 0) throw StatsError("clopper_pearson_ci: trials must be positive");
  if (successes < 0 || successes > trials) throw StatsError("clopper_pearson_ci: successes outside [0, trials]");
  if (!(confidence > 0.0 && confidence < 1.0)) throw StatsError("clopper_pearson_ci: confidence outside (0, 1)");
  const double alpha = 1.0 - confidence;
  const double k = successes;
  const double n = trials;
  Interval ci{0.0, 1.0};
  if (successes > 0) ci.lo = special::incomplete_beta_inverse(k, n - k + 1.0, alpha / 2.0);
  if (successes < trials) ci.hi = special::incomplete_beta_inverse(k + 1.0, n - k, 1.0 - alpha / 2.0);
  return ci;
}

double binomial_sign_test(int positives, int trials) {
  if (trials <= 0) throw StatsError("binomial_sign_test: trials must be positive");
  if (positives < 0 || positives > trials) throw StatsError("binomial_sign_test: positives outside [0, trials]");
  const int m = std::min(positives, trials - positives);
  if (trials > 1000) return std::min(1.0, 2.0 * special::binomial_cdf(m, trials, 0.5));
  // Smaller tail as a sum of C(n, i) / 2^n; exact while the coefficients fit a double.
  double coef = 1.0;
  double tail = 0.0;
  for (int i = 0; i <= m; ++i) {
    tail += coef;
    coef = coef * (trials - i) / (i + 1);
  }
  return std::min(1.0, 2.0 * std::ldexp(tail, -trials));
}

TTestResult paired_t_test(std::span<const double> diffs, double confidence) {
  if (diffs.size() < 2) throw StatsError("paired_t_test: need at least two differences");
  TTestResult r;
  r.n = static_cast<int>(diffs.size());
  r.df = r.n - 1;
  r.mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / r.n;
  double ss = 0.0;
  for (const double d : diffs) ss += (d - r.mean) * (d - r.mean);
  r.sd = std::sqrt(ss / r.df);
  if (!(r.sd > 0.0)) throw DegenerateSampleError("paired_t_test: differences have zero variance");
  const double se = r.sd / std::sqrt(static_cast<double>(r.n));
  r.t = r.mean / se;
  r.p = special::student_t_two_sided(r.t, r.df);
  const double crit = special::student_t_quantile(0.5 + confidence / 2.0, r.df);
  r.ci = {r.mean - crit * se, r.mean + crit * se};
  return r;
}

namespace {

// Mid-ranks of |d| for the non-zero differences, doubled so they are integers.
std::vector<int> doubled_midranks(const std::vector<double>& magnitudes) {
  const std::size_t n = magnitudes.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return magnitudes[a] < magnitudes[b]; });
  std::vector<int> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && magnitudes[order[j + 1]] == magnitudes[order[i]]) ++j;
    // Ranks i+1..j+1 share their mean; doubled that is i + j + 2.
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = static_cast<int>(i + j + 2);
    i = j + 1;
  }
  return ranks;
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs, WilcoxonMethod method) {
  std::vector<double> magnitudes;
  std::vector<bool> positive;
  WilcoxonResult r;
  for (const double d : diffs) {
    if (d == 0.0) {
      ++r.n_ties;
      continue;
    }
    magnitudes.push_back(std::abs(d));
    positive.push_back(d > 0.0);
  }
  r.n_nonzero = static_cast<int>(magnitudes.size());
  if (r.n_nonzero == 0) throw DegenerateSampleError("wilcoxon_signed_rank: all differences are zero");

  const auto ranks2 = doubled_midranks(magnitudes);
  int w2 = 0;
  for (std::size_t i = 0; i < ranks2.size(); ++i) {
    if (positive[i]) w2 += ranks2[i];
  }
  r.w_plus = w2 / 2.0;

  r.exact = method == WilcoxonMethod::kExact ||
            (method == WilcoxonMethod::kAuto && r.n_nonzero <= kWilcoxonExactMaxN);
  if (r.exact) {
    if (r.n_nonzero > 62) throw StatsError("wilcoxon_signed_rank: exact method limited to 62 differences");
    // Null distribution of doubled W+: every sign pattern equally likely.
    const int total2 = std::accumulate(ranks2.begin(), ranks2.end(), 0);
    std::vector<double> ways(static_cast<std::size_t>(total2) + 1, 0.0);
    ways[0] = 1.0;
    int reach = 0;
    for (const int rank : ranks2) {
      for (int s = reach; s >= 0; --s) ways[static_cast<std::size_t>(s + rank)] += ways[static_cast<std::size_t>(s)];
      reach += rank;
    }
    double at_most = 0.0;
    double at_least = 0.0;
    for (int s = 0; s <= total2; ++s) {
      if (s <= w2) at_most += ways[static_cast<std::size_t>(s)];
      if (s >= w2) at_least += ways[static_cast<std::size_t>(s)];
    }
    const double patterns = std::ldexp(1.0, r.n_nonzero);
    r.p = std::min(1.0, 2.0 * std::min(at_most, at_least) / patterns);
    return r;
  }

  const double n = r.n_nonzero;
  const double mean = n * (n + 1.0) / 4.0;
  double tie_term = 0.0;
  {
    std::vector<int> sorted = ranks2;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i);
      tie_term += t * t * t - t;
      i = j;
    }
  }
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
  const double dev = std::max(0.0, std::abs(r.w_plus - mean) - 0.5);
  const double z = dev / std::sqrt(var);
  r.p = std::min(1.0, 2.0 * special::normal_sf(z));
  return r;
}

std::vector<double> holm_bonferroni(std::span<const double> pvalues) {
  const std::size_t m = pvalues.size();
  for (const double p : pvalues) {
    if (!(p >= 0.0 && p <= 1.0)) throw StatsError("holm_bonferroni: p-value outside [0, 1]: " + std::to_string(p));
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
  std::vector<double> adjusted(m);
  double running = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double scaled = std::min(1.0, static_cast<double>(m - i) * pvalues[order[i]]);
    running = std::max(running, scaled);
    adjusted[order[i]] = running;
  }
  return adjusted;
}

}  // namespace hemvip
