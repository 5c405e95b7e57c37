#pragma once

// Paired-comparison tests: exact binomial (sign) test with Clopper-Pearson
// interval, one-sample t-test on differences, Wilcoxon signed-rank test and
// Holm-Bonferroni step-down adjustment.

#include <span>
#include <stdexcept>
#include <vector>

namespace hemvip {

class StatsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The sample carries no information for the test (zero variance, all ties).
class DegenerateSampleError : public StatsError {
 public:
  using StatsError::StatsError;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Exact two-sided interval for a binomial proportion. Throws StatsError when n == 0.
Interval clopper_pearson_ci(int successes, int trials, double confidence = 0.95);

/// Two-sided exact binomial test against p = 0.5:
/// min(1, 2 * min(P(X <= k), P(X >= k))).
double binomial_sign_test(int positives, int trials);

struct TTestResult {
  int n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double t = 0.0;
  int df = 0;
  double p = 1.0;
  Interval ci;
};

/// One-sample t-test of the differences against zero. Requires n >= 2 and
/// non-zero sample variance (DegenerateSampleError otherwise).
TTestResult paired_t_test(std::span<const double> diffs, double confidence = 0.95);

enum class WilcoxonMethod { kAuto, kExact, kNormal };

/// Largest number of non-zero differences handled exactly under kAuto.
inline constexpr int kWilcoxonExactMaxN = 25;

struct WilcoxonResult {
  int n_nonzero = 0;
  int n_ties = 0;        // zero differences dropped
  double w_plus = 0.0;   // sum of (mid-)ranks of positive differences
  double p = 1.0;
  bool exact = false;
};

/// Zeros dropped, tied magnitudes mid-ranked. Exact null distribution of W+
/// for up to kWilcoxonExactMaxN differences, otherwise normal approximation
/// with tie and continuity corrections.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs, WilcoxonMethod method = WilcoxonMethod::kAuto);

/// Holm step-down adjusted p-values, returned in input order.
std::vector<double> holm_bonferroni(std::span<const double> pvalues);

}  // namespace hemvip
