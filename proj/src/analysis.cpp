#include "hemvip/analysis.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

namespace hemvip {
namespace {

using PageKey = std::pair<std::string, int>;
using PageIndex = std::map<PageKey, std::map<std::string, int>>;

PageIndex index_pages(const std::vector<RatingRecord>& rows) {
  PageIndex idx;
  for (const auto& r : rows) {
    if (r.is_attention_check) continue;
    idx[{r.participant_id, r.page_index}][r.condition_id] = r.value;
  }
  return idx;
}

PairedSample pairs_from_index(const PageIndex& idx, const ConditionPair& pair, Aggregation aggregation) {
  PairedSample sample{pair.a, pair.b, {}};
  std::string current;
  double sum = 0.0;
  int count = 0;
  auto flush = [&] {
    if (count > 0) sample.diffs.push_back(sum / count);
    sum = 0.0;
    count = 0;
  };
  for (const auto& [key, values] : idx) {
    const auto a = values.find(pair.a);
    const auto b = values.find(pair.b);
    if (a == values.end() || b == values.end()) continue;
    const double d = b->second - a->second;
    if (aggregation == Aggregation::kPooledPages) {
      sample.diffs.push_back(d);
      continue;
    }
    if (key.first != current) {
      flush();
      current = key.first;
    }
    sum += d;
    ++count;
  }
  if (aggregation == Aggregation::kParticipantMeans) flush();
  return sample;
}

ContrastResult run_tests(const PairedSample& sample, const AnalysisConfig& config) {
  ContrastResult r;
  r.condition_a = sample.condition_a;
  r.condition_b = sample.condition_b;
  r.n = static_cast<int>(sample.diffs.size());
  for (const double d : sample.diffs) {
    if (d > 0) {
      ++r.n_positive;
    } else if (d < 0) {
      ++r.n_negative;
    } else {
      ++r.n_ties;
    }
  }
  if (r.n == 0) {
    r.clopper_pearson.note = r.t_test.note = r.wilcoxon.note = "no paired ratings";
    return r;
  }
  r.mean_diff = std::accumulate(sample.diffs.begin(), sample.diffs.end(), 0.0) / r.n;

  const int decided = r.n_positive + r.n_negative;
  if (decided > 0) {
    r.pref_b = static_cast<double>(r.n_positive) / decided;
    r.pref_ci = clopper_pearson_ci(r.n_positive, decided, config.confidence);
    r.clopper_pearson.p = binomial_sign_test(r.n_positive, decided);
  } else {
    r.clopper_pearson.note = "all differences tied";
  }

  try {
    const auto t = paired_t_test(sample.diffs, config.confidence);
    r.t_statistic = t.t;
    r.mean_diff_ci = t.ci;
    r.t_test.p = t.p;
  } catch (const DegenerateSampleError&) {
    r.t_test.note = "zero variance";
  } catch (const StatsError&) {
    r.t_test.note = "fewer than two differences";
  }

  try {
    const auto w = wilcoxon_signed_rank(sample.diffs);
    r.w_plus = w.w_plus;
    r.wilcoxon.p = w.p;
  } catch (const DegenerateSampleError&) {
    r.wilcoxon.note = "all differences tied";
  }
  return r;
}

void adjust_family(std::vector<ContrastResult>& results, TestOutcome ContrastResult::*test, double alpha) {
  std::vector<double> raw;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& outcome = results[i].*test;
    if (outcome.p) {
      raw.push_back(*outcome.p);
      where.push_back(i);
    }
  }
  const auto adjusted = holm_bonferroni(raw);
  for (std::size_t k = 0; k < where.size(); ++k) {
    auto& outcome = results[where[k]].*test;
    outcome.p_adjusted = adjusted[k];
    outcome.significant = adjusted[k] < alpha;
  }
}

}  // namespace

PairedSample extract_pairs(const std::vector<RatingRecord>& rows, const ConditionPair& pair, Aggregation aggregation) {
  return pairs_from_index(index_pages(rows), pair, aggregation);
}

std::vector<std::string> conditions_in(const std::vector<RatingRecord>& rows) {
  std::set<std::string> ids;
  for (const auto& r : rows) {
    if (!r.is_attention_check) ids.insert(r.condition_id);
  }
  return {ids.begin(), ids.end()};
}

std::vector<ConditionPair> all_pairs(const std::vector<std::string>& conditions) {
  std::vector<ConditionPair> out;
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    for (std::size_t j = i + 1; j < conditions.size(); ++j) out.push_back({conditions[i], conditions[j]});
  }
  return out;
}

std::vector<ContrastResult> analyze(const std::vector<RatingRecord>& rows, const AnalysisConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw StatsError("alpha must lie in (0, 1)");
  if (!(config.confidence > 0.0 && config.confidence < 1.0)) throw StatsError("confidence must lie in (0, 1)");

  std::vector<ConditionPair> contrasts = config.contrasts;
  if (contrasts.empty()) {
    contrasts = all_pairs(config.condition_order.empty() ? conditions_in(rows) : config.condition_order);
  }

  const auto idx = index_pages(rows);
  std::vector<ContrastResult> results;
  results.reserve(contrasts.size());
  for (const auto& pair : contrasts) results.push_back(run_tests(pairs_from_index(idx, pair, config.aggregation), config));

  adjust_family(results, &ContrastResult::clopper_pearson, config.alpha);
  adjust_family(results, &ContrastResult::t_test, config.alpha);
  adjust_family(results, &ContrastResult::wilcoxon, config.alpha);
  return results;
}

}  // namespace hemvip
