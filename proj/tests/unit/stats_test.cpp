#include "hemvip/stats.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hemvip/analysis.hpp"
#include "hemvip/report.hpp"
#include "oracles.hpp"

namespace hemvip {
namespace {

TEST(ClopperPearson, Examples) {
  const auto zero = clopper_pearson_ci(0, 20);
  EXPECT_EQ(zero.lo, 0.0);
  EXPECT_NEAR(zero.hi, 0.168433470983085337, 1e-12);
  const auto all = clopper_pearson_ci(20, 20);
  EXPECT_NEAR(all.lo, 1.0 - 0.168433470983085337, 1e-12);
  EXPECT_EQ(all.hi, 1.0);
  const auto half = clopper_pearson_ci(10, 20);
  EXPECT_TRUE(half.contains(0.5));
  EXPECT_NEAR(half.lo + half.hi, 1.0, 1e-12);
  EXPECT_THROW(clopper_pearson_ci(0, 0), StatsError);
  EXPECT_THROW(clopper_pearson_ci(3, 2), StatsError);
}

TEST(ClopperPearson, MatchesBisectionOracle) {
  for (int n = 1; n <= 50; ++n) {
    for (int k = 0; k <= n; ++k) {
      const auto ci = clopper_pearson_ci(k, n);
      const auto [lo, hi] = oracle::clopper_pearson_bisection(k, n, 0.95);
      ASSERT_NEAR(ci.lo, lo, 1e-9) << k << "/" << n;
      ASSERT_NEAR(ci.hi, hi, 1e-9) << k << "/" << n;
    }
  }
}

TEST(SignTest, Examples) {
  EXPECT_DOUBLE_EQ(binomial_sign_test(0, 10), 0.001953125);
  EXPECT_DOUBLE_EQ(binomial_sign_test(5, 10), 1.0);
  EXPECT_DOUBLE_EQ(binomial_sign_test(1, 1), 1.0);
  EXPECT_NEAR(binomial_sign_test(27, 100), oracle::sign_test_exact(27, 100), 1e-12);
  EXPECT_NEAR(binomial_sign_test(27, 100), 4.69241261264223e-06, 1e-15);
  EXPECT_THROW(binomial_sign_test(0, 0), StatsError);
}

TEST(SignTest, SymmetricAndMatchesOracle) {
  for (int n = 1; n <= 120; n += 7) {
    for (int k = 0; k <= n; ++k) {
      const double p = binomial_sign_test(k, n);
      EXPECT_DOUBLE_EQ(p, binomial_sign_test(n - k, n));
      EXPECT_GT(p, 0.0);
      EXPECT_LE(p, 1.0);
      EXPECT_NEAR(p, oracle::sign_test_exact(k, n), 1e-12) << k << "/" << n;
    }
  }
}

TEST(PairedT, Examples) {
  const std::vector<double> d{1, 2, 3, 4, 5};
  const auto r = paired_t_test(d);
  EXPECT_EQ(r.n, 5);
  EXPECT_EQ(r.df, 4);
  EXPECT_DOUBLE_EQ(r.mean, 3.0);
  EXPECT_NEAR(r.t, 4.242640687119285, 1e-12);
  EXPECT_NEAR(r.p, 0.013235599563682693, 1e-10);
  EXPECT_NEAR(r.p, oracle::t_two_sided_by_quadrature(r.t, 4), 1e-6);
  EXPECT_NEAR(r.ci.hi - r.mean, 2.7764451051977987 * std::sqrt(2.5 / 5.0), 1e-9);

  const std::vector<double> flat{-1, 1, -1, 1};
  const auto z = paired_t_test(flat);
  EXPECT_EQ(z.t, 0.0);
  EXPECT_DOUBLE_EQ(z.p, 1.0);
  EXPECT_EQ(z.mean, 0.0);

  const std::vector<double> constant{2, 2, 2};
  EXPECT_THROW(paired_t_test(constant), DegenerateSampleError);
  const std::vector<double> single{4};
  EXPECT_THROW(paired_t_test(single), StatsError);
}

TEST(PairedT, MatchesQuadratureAcrossSizes) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> noise(0.4, 1.0);
  for (int n = 2; n <= 200; n += 3) {
    std::vector<double> d(static_cast<std::size_t>(n));
    for (auto& x : d) x = noise(gen);
    const auto r = paired_t_test(d);
    EXPECT_NEAR(r.p, oracle::t_two_sided_by_quadrature(r.t, r.df), 1e-6) << "n " << n;
  }
}

TEST(Wilcoxon, Examples) {
  const std::vector<double> up{1, 2, 3};
  const auto r = wilcoxon_signed_rank(up);
  EXPECT_DOUBLE_EQ(r.w_plus, 6.0);
  EXPECT_DOUBLE_EQ(r.p, 0.25);
  EXPECT_TRUE(r.exact);

  const std::vector<double> sym{-1, 1};
  EXPECT_DOUBLE_EQ(wilcoxon_signed_rank(sym).p, 1.0);

  const std::vector<double> with_zeros{0, 0, 2, -1, 3};
  const auto z = wilcoxon_signed_rank(with_zeros);
  EXPECT_EQ(z.n_ties, 2);
  EXPECT_EQ(z.n_nonzero, 3);
  EXPECT_DOUBLE_EQ(z.w_plus, 5.0);

  const std::vector<double> zeros{0, 0, 0};
  EXPECT_THROW(wilcoxon_signed_rank(zeros), DegenerateSampleError);
}

TEST(Wilcoxon, ExactMatchesEnumeration) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 12);
    // Small integer range so ties and zeros are common.
    std::uniform_int_distribution<int> value(-6, 9);
    std::vector<double> d(static_cast<std::size_t>(n));
    for (auto& x : d) x = value(gen);
    if (std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; })) continue;
    const auto r = wilcoxon_signed_rank(d, WilcoxonMethod::kExact);
    EXPECT_NEAR(r.p, oracle::wilcoxon_by_enumeration(d), 1e-12) << "trial " << trial;
  }
}

TEST(Wilcoxon, NormalApproximationCloseAtTwenty) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> noise(0.3, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> d(20);
    for (auto& x : d) x = noise(gen);
    const double exact = wilcoxon_signed_rank(d, WilcoxonMethod::kExact).p;
    EXPECT_NEAR(exact, oracle::wilcoxon_by_enumeration(d), 1e-12);
    EXPECT_NEAR(exact, wilcoxon_signed_rank(d, WilcoxonMethod::kNormal).p, 0.02);
  }
}

TEST(Wilcoxon, AutoSwitchesAboveThreshold) {
  std::vector<double> d;
  for (int i = 1; i <= kWilcoxonExactMaxN; ++i) d.push_back(i % 3 == 0 ? -i : i);
  EXPECT_TRUE(wilcoxon_signed_rank(d).exact);
  d.push_back(100);
  EXPECT_FALSE(wilcoxon_signed_rank(d).exact);
}

TEST(Holm, Examples) {
  const std::vector<double> p{0.01, 0.04, 0.03};
  const auto adj = holm_bonferroni(p);
  ASSERT_EQ(adj.size(), 3u);
  EXPECT_DOUBLE_EQ(adj[0], 0.03);
  EXPECT_DOUBLE_EQ(adj[1], 0.06);
  EXPECT_DOUBLE_EQ(adj[2], 0.06);

  const std::vector<double> one{0.2};
  EXPECT_DOUBLE_EQ(holm_bonferroni(one)[0], 0.2);
  const std::vector<double> ones{1, 1, 1, 1};
  for (double x : holm_bonferroni(ones)) EXPECT_EQ(x, 1.0);
  EXPECT_TRUE(holm_bonferroni(std::vector<double>{}).empty());
  EXPECT_THROW(holm_bonferroni(std::vector<double>{0.5, 1.5}), StatsError);
}

TEST(Holm, DefinitionPermutationAndMonotonicity) {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(1 + gen() % 28);
    for (auto& x : p) x = u(gen);
    if (trial % 5 == 0) p[0] = p.back();  // exact ties
    const auto adj = holm_bonferroni(p);
    const auto ref = oracle::holm_by_definition(p);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_DOUBLE_EQ(adj[i], ref[i]);

    std::vector<std::size_t> perm(p.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<double> shuffled(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) shuffled[i] = p[perm[i]];
    const auto adj_shuffled = holm_bonferroni(shuffled);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_DOUBLE_EQ(adj_shuffled[i], adj[perm[i]]);

    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = 0; j < p.size(); ++j)
        if (p[i] <= p[j]) EXPECT_LE(adj[i], adj[j]);
  }
}

// --- analysis ---------------------------------------------------------------

RatingRecord row(const std::string& pid, int page, int slider, const std::string& cond, int value) {
  RatingRecord r;
  r.participant_id = pid;
  r.study_id = "study";
  r.page_index = page;
  r.slider_index = slider;
  r.condition_id = cond;
  r.segment_id = "s" + std::to_string(page);
  r.value = value;
  return r;
}

RatingRecord check_row(const std::string& pid, int page, int slider, int target, int value) {
  RatingRecord r = row(pid, page, slider, "", value);
  r.is_attention_check = true;
  r.target = target;
  return r;
}

/// Three conditions; B sits `gap` above A, C below A, with per-page noise.
std::vector<RatingRecord> synthetic(int participants, int pages, int gap, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, 5.0);
  std::vector<RatingRecord> rows;
  for (int p = 0; p < participants; ++p) {
    const std::string pid = "p" + std::to_string(p);
    for (int g = 0; g < pages; ++g) {
      const double base = 50 + noise(gen);
      auto clamp = [](double v) { return std::clamp(static_cast<int>(std::lround(v)), 0, 100); };
      rows.push_back(row(pid, g, 0, "A", clamp(base + noise(gen))));
      rows.push_back(row(pid, g, 1, "B", clamp(base + gap + noise(gen))));
      rows.push_back(row(pid, g, 2, "C", clamp(base - gap + noise(gen))));
    }
  }
  return rows;
}

TEST(ExtractPairs, DifferencesAreBMinusA) {
  std::vector<RatingRecord> rows{row("p", 0, 0, "A", 40), row("p", 0, 1, "B", 52)};
  auto s = extract_pairs(rows, {"A", "B"});
  ASSERT_EQ(s.diffs.size(), 1u);
  EXPECT_EQ(s.diffs[0], 12.0);

  // Page 1: B displaced by a check.
  rows.push_back(row("p", 1, 0, "A", 10));
  rows.push_back(check_row("p", 1, 1, 47, 46));
  s = extract_pairs(rows, {"A", "B"});
  EXPECT_EQ(s.diffs.size(), 1u);
}

TEST(ExtractPairs, FullGridCount) {
  const auto rows = synthetic(46, 10, 5, 1);
  EXPECT_EQ(extract_pairs(rows, {"A", "B"}).diffs.size(), 460u);
  EXPECT_EQ(extract_pairs(rows, {"A", "B"}, Aggregation::kParticipantMeans).diffs.size(), 46u);
}

TEST(ExtractPairs, ParticipantOffsetLeavesDiffsUnchanged) {
  auto rows = synthetic(10, 10, 5, 2);
  const auto before = extract_pairs(rows, {"C", "B"}).diffs;
  for (auto& r : rows)
    if (r.participant_id == "p3") r.value += 7;
  EXPECT_EQ(extract_pairs(rows, {"C", "B"}).diffs, before);
}

TEST(Analyze, AllPairsOfEightGivesTwentyEight) {
  std::vector<RatingRecord> rows;
  for (int p = 0; p < 4; ++p)
    for (int g = 0; g < 3; ++g)
      for (int c = 0; c < 8; ++c) rows.push_back(row("p" + std::to_string(p), g, c, "C" + std::to_string(c), 10 * c + p + g));
  EXPECT_EQ(conditions_in(rows).size(), 8u);
  EXPECT_EQ(analyze(rows, {}).size(), 28u);
  EXPECT_EQ(all_pairs(conditions_in(rows)).size(), 28u);
}

TEST(Analyze, RecoversDirectionAndSignificance) {
  const auto rows = synthetic(46, 10, 8, 4);
  AnalysisConfig cfg;
  cfg.contrasts = {{"A", "B"}, {"A", "C"}, {"C", "B"}};
  const auto results = analyze(rows, cfg);
  ASSERT_EQ(results.size(), 3u);
  EXPECT_GT(results[0].mean_diff, 0);
  EXPECT_LT(results[1].mean_diff, 0);
  EXPECT_GT(results[2].mean_diff, 12);
  for (const auto& r : results) {
    EXPECT_EQ(r.n, 460);
    EXPECT_TRUE(r.clopper_pearson.significant);
    EXPECT_TRUE(r.t_test.significant);
    EXPECT_TRUE(r.wilcoxon.significant);
    ASSERT_TRUE(r.mean_diff_ci);
    EXPECT_TRUE(r.mean_diff_ci->contains(r.mean_diff));
    EXPECT_EQ(r.n_positive + r.n_negative + r.n_ties, r.n);
  }
}

TEST(Analyze, SelfContrastIsDegenerate) {
  auto rows = synthetic(5, 4, 3, 5);
  std::vector<RatingRecord> dup;
  for (const auto& r : rows)
    if (r.condition_id == "A") {
      auto copy = r;
      copy.condition_id = "A2";
      copy.slider_index = 7;
      dup.push_back(copy);
    }
  rows.insert(rows.end(), dup.begin(), dup.end());
  AnalysisConfig cfg;
  cfg.contrasts = {{"A", "A2"}, {"A", "B"}};
  const auto results = analyze(rows, cfg);
  const auto& self = results[0];
  EXPECT_EQ(self.mean_diff, 0.0);
  EXPECT_EQ(self.n_ties, self.n);
  for (const auto* t : {&self.clopper_pearson, &self.t_test, &self.wilcoxon}) {
    EXPECT_TRUE(!t->p || *t->p_adjusted == 1.0);
    EXPECT_FALSE(t->significant);
  }
  EXPECT_FALSE(self.t_test.p);
  EXPECT_FALSE(self.t_test.note.empty());
}

TEST(Analyze, RejectsBadAlpha) {
  AnalysisConfig cfg;
  cfg.alpha = 1.5;
  EXPECT_THROW(analyze(synthetic(2, 2, 1, 1), cfg), StatsError);
}

TEST(Report, RendersEveryContrast) {
  const auto rows = synthetic(10, 10, 8, 6);
  AnalysisConfig cfg;
  const auto results = analyze(rows, cfg);
  const auto text = render_text_report(results, cfg);
  EXPECT_NE(text.find("A"), std::string::npos);
  EXPECT_NE(text.find("†"), std::string::npos);
  const auto csv = render_csv_report(results);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  const auto doc = to_json_document(results, cfg);
  EXPECT_EQ(doc["contrasts"].size(), 3u);
}

TEST(Report, ParsesContrastLists) {
  const auto pairs = parse_contrast_list("# header\nGT Full\nFull,NoPCA\n\nNoText->GT  # trailing\n");
  ASSERT_EQ(pairs.size(), 3u);
  EXPECT_EQ(pairs[0], (ConditionPair{"GT", "Full"}));
  EXPECT_EQ(pairs[1], (ConditionPair{"Full", "NoPCA"}));
  EXPECT_EQ(pairs[2], (ConditionPair{"NoText", "GT"}));
  EXPECT_THROW(parse_contrast_list("GT\n"), FormatError);
}

}  // namespace
}  // namespace hemvip
