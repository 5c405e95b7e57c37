#pragma once

// Within-page paired contrasts between conditions and the full per-contrast
// test battery with Holm correction per test family.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hemvip/model.hpp"
#include "hemvip/stats.hpp"

namespace hemvip {

/// Contrast A→B; differences are R_B − R_A.
struct ConditionPair {
  std::string a;
  std::string b;

  bool operator==(const ConditionPair&) const = default;
};

struct PairedSample {
  std::string condition_a;
  std::string condition_b;
  std::vector<double> diffs;
};

enum class Aggregation {
  kPooledPages,       // one difference per (participant, page)
  kParticipantMeans,  // per-participant mean of the page differences
};

struct AnalysisConfig {
  double alpha = 0.05;
  double confidence = 0.95;
  // Empty means all pairs. All-pairs order follows condition_order if given,
  // otherwise the sorted condition ids.
  std::vector<ConditionPair> contrasts;
  std::vector<std::string> condition_order;
  Aggregation aggregation = Aggregation::kPooledPages;
};

struct TestOutcome {
  std::optional<double> p;
  std::optional<double> p_adjusted;
  bool significant = false;
  std::string note;  // why p is absent
};

struct ContrastResult {
  std::string condition_a;
  std::string condition_b;
  int n = 0;  // all differences, ties included
  int n_ties = 0;
  int n_positive = 0;
  int n_negative = 0;
  double mean_diff = 0.0;
  std::optional<Interval> mean_diff_ci;
  std::optional<double> pref_b;  // share of positive among non-zero differences
  std::optional<Interval> pref_ci;
  std::optional<double> t_statistic;
  std::optional<double> w_plus;
  TestOutcome clopper_pearson;
  TestOutcome t_test;
  TestOutcome wilcoxon;
};

/// One difference per (participant, page) where both conditions were rated,
/// ordered by (participant, page). Attention-check rows are ignored.
PairedSample extract_pairs(const std::vector<RatingRecord>& rows, const ConditionPair& pair,
                           Aggregation aggregation = Aggregation::kPooledPages);

/// Conditions present in the rows (attention checks excluded), sorted.
std::vector<std::string> conditions_in(const std::vector<RatingRecord>& rows);

std::vector<ConditionPair> all_pairs(const std::vector<std::string>& conditions);

/// Throws StatsError when alpha or confidence lie outside (0, 1).
std::vector<ContrastResult> analyze(const std::vector<RatingRecord>& rows, const AnalysisConfig& config);

}  // namespace hemvip
