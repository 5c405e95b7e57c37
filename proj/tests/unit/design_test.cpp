#include "hemvip/design.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "support/fixtures.hpp"

namespace hemvip {
namespace {

using testing::make_study;
using testing::standard_study;

std::vector<std::string> ids(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("p" + std::to_string(i));
  return out;
}

TEST(GenerateBatch, StandardStudyArithmetic) {
  const auto configs = generate_batch(standard_study(), ids(46));
  ASSERT_EQ(configs.size(), 46u);
  int slots = 0;
  int checks = 0;
  for (const auto& cfg : configs) {
    ASSERT_EQ(cfg.pages.size(), 10u);
    for (const auto& page : cfg.pages) {
      slots += static_cast<int>(page.slots.size());
      checks += page.check_slot() ? 1 : 0;
    }
  }
  EXPECT_EQ(slots, 3680);
  EXPECT_EQ(checks, 138);
  EXPECT_EQ(slots - checks, 3542);
}

TEST(GenerateBatch, DegenerateMinimum) {
  const auto configs = generate_batch(make_study(1, 0, 1, 1, 0, 1), ids(1));
  ASSERT_EQ(configs.size(), 1u);
  ASSERT_EQ(configs[0].pages.size(), 1u);
  ASSERT_EQ(configs[0].pages[0].slots.size(), 1u);
  EXPECT_EQ(configs[0].pages[0].slots[0].condition_id, "C0");
  EXPECT_EQ(configs[0].pages[0].slots[0].video_uri, "v/C0/s0.mp4");
}

TEST(GenerateBatch, FixedSeedIsByteIdentical) {
  const auto def = standard_study(42);
  const auto a = generate_batch(def, ids(46));
  const auto b = generate_batch(def, ids(46));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(encode_config(a[i]), encode_config(b[i]));
  EXPECT_EQ(a[0].design_seed, 42u);
  const auto c = generate_batch(standard_study(43), ids(46));
  EXPECT_NE(encode_config(a[0]), encode_config(c[0]));
}

TEST(GenerateBatch, PageInvariantsHoldAcrossSeeds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto def = standard_study(seed);
    for (const auto& cfg : generate_batch(def, ids(46))) {
      std::set<std::string> segments;
      int check_pages = 0;
      for (const auto& page : cfg.pages) {
        segments.insert(page.segment_id);
        std::set<std::string> conds;
        int checks = 0;
        for (const auto& slot : page.slots) {
          if (slot.is_check()) {
            ++checks;
            ASSERT_TRUE(slot.attention_target);
            EXPECT_TRUE(def.attention_target_range.contains(*slot.attention_target));
            EXPECT_EQ(slot.video_uri, "attention/" + std::to_string(*slot.attention_target) + ".mp4");
          } else {
            EXPECT_TRUE(conds.insert(slot.condition_id).second) << "duplicate condition on a page";
            EXPECT_EQ(slot.video_uri, *def.catalog.find_video(page.segment_id, slot.condition_id));
          }
        }
        ASSERT_LE(checks, 1);
        check_pages += checks;
        EXPECT_TRUE(conds.contains("C0"));
        EXPECT_TRUE(conds.contains("C1"));
        // Five ablations beside a check, six otherwise.
        EXPECT_EQ(conds.size(), checks ? 7u : 8u);
        for (std::size_t k = 0; k < page.slots.size(); ++k) EXPECT_EQ(page.slots[k].slider_index, static_cast<int>(k));
      }
      EXPECT_EQ(segments.size(), cfg.pages.size());
      EXPECT_EQ(check_pages, 3);
    }
  }
}

TEST(GenerateBatch, SubsetOfConditionsPerPage) {
  const auto def = make_study(10, 1, 20, 6, 2, 5, 3);
  const auto configs = generate_batch(def, ids(30));
  std::map<std::string, int> shown;
  for (const auto& cfg : configs) {
    for (const auto& page : cfg.pages) {
      ASSERT_EQ(page.slots.size(), 5u);
      for (const auto& s : page.slots) {
        if (!s.is_check()) ++shown[s.condition_id];
      }
    }
  }
  EXPECT_EQ(shown["C0"], 180);
  int lo = 1 << 30;
  int hi = 0;
  for (const auto& [c, n] : shown) {
    if (c == "C0") continue;
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  EXPECT_LE(hi - lo, 1) << "unprotected conditions should be shown equally often";
}

TEST(GenerateBatch, UnprotectedExposureStaysBalancedOnCheckPages) {
  const auto configs = generate_batch(standard_study(5), ids(46));
  std::map<std::string, int> shown;
  for (const auto& cfg : configs)
    for (const auto& page : cfg.pages)
      for (const auto& s : page.slots)
        if (!s.is_check()) ++shown[s.condition_id];
  for (int c = 2; c < 8; ++c) EXPECT_NEAR(shown["C" + std::to_string(c)], 437, 1);
}

TEST(GenerateBatch, Errors) {
  EXPECT_THROW(generate_batch(make_study(8, 2, 9, 10, 3, 8), ids(2)), DesignError);
  const std::vector<std::string> dup{"a", "b", "a"};
  EXPECT_THROW(generate_batch(standard_study(), dup), DesignError);
  const std::vector<std::string> empty_id{""};
  EXPECT_THROW(generate_batch(standard_study(), empty_id), DesignError);
}

TEST(GenerateBatch, AttentionTargetsUniform) {
  // Seed schedule 1..10, 334 participants x 3 checks each: 10020 draws over [5, 95].
  std::map<int, int> freq;
  int total = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::vector<std::string> batch_ids;
    for (int i = 0; i < 334; ++i) batch_ids.push_back("s" + std::to_string(seed) + "-" + std::to_string(i));
    for (const auto& cfg : generate_batch(standard_study(seed), batch_ids))
      for (const auto& page : cfg.pages)
        if (const auto* s = page.check_slot()) {
          ++freq[*s->attention_target];
          ++total;
        }
  }
  ASSERT_EQ(total, 10020);
  ASSERT_EQ(freq.begin()->first, 5);
  ASSERT_EQ(freq.rbegin()->first, 95);
  const double p = 1.0 / 91.0;
  const double expected = total * p;
  const double sigma = std::sqrt(total * p * (1.0 - p));
  double chi2 = 0.0;
  for (int v = 5; v <= 95; ++v) {
    EXPECT_LE(std::abs(freq[v] - expected), 3.0 * sigma) << "target " << v;
    chi2 += (freq[v] - expected) * (freq[v] - expected) / expected;
  }
  EXPECT_LT(chi2, 137.208);  // chi-square, 90 df, 0.999 quantile
}

TEST(GenerateBatch, CheckPlacementCoversPagesAndSliders) {
  const auto configs = generate_batch(standard_study(9), ids(400));
  std::map<int, int> by_page;
  std::map<int, int> by_slider;
  for (const auto& cfg : configs)
    for (const auto& page : cfg.pages)
      if (const auto* s = page.check_slot()) {
        ++by_page[page.page_index];
        ++by_slider[s->slider_index];
      }
  // 1200 checks: 120 expected per page, 150 per slider.
  ASSERT_EQ(by_page.size(), 10u);
  ASSERT_EQ(by_slider.size(), 8u);
  for (const auto& [p, n] : by_page) EXPECT_NEAR(n, 120, 3 * std::sqrt(120 * 0.9));
  for (const auto& [k, n] : by_slider) EXPECT_NEAR(n, 150, 3 * std::sqrt(150 * 0.875));
}

TEST(GenerateBatch, ParticipantIdsAreLabelsOnly) {
  const auto def = standard_study(17);
  auto forward = ids(12);
  auto reversed = forward;
  std::reverse(reversed.begin(), reversed.end());
  const auto a = generate_batch(def, forward);
  const auto b = generate_batch(def, reversed);
  std::multiset<std::string> pages_a;
  std::multiset<std::string> pages_b;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(b[i].participant_id, reversed[i]);
    EXPECT_EQ(a[i].pages, b[i].pages);
    pages_a.insert(Json(a[i].pages).dump());
    pages_b.insert(Json(b[i].pages).dump());
  }
  EXPECT_EQ(pages_a, pages_b);
}

TEST(AuditBalance, GeneratedBatchesAreBalanced) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto configs = generate_batch(standard_study(seed), ids(46));
    const auto report = audit_balance(configs);
    EXPECT_LT(report.max_deviation, 0.25) << "seed " << seed;
    EXPECT_LE(report.stimulus_order_max_abs_deviation, 1.0) << "seed " << seed;
    int total = 0;
    for (const auto& [k, n] : report.condition_slider_counts) total += n;
    EXPECT_EQ(total, 46 * 10 * 8);
    int order_total = 0;
    for (const auto& [k, n] : report.stimulus_order_counts) order_total += n;
    EXPECT_EQ(order_total, 46 * 10);
  }
}

TEST(AuditBalance, SingleParticipantSinglePage) {
  const auto configs = generate_batch(make_study(3, 1, 4, 1, 1, 3), ids(1));
  const auto report = audit_balance(configs);
  for (const auto& [k, n] : report.condition_slider_counts) EXPECT_TRUE(n == 0 || n == 1);
  for (const auto& [k, n] : report.stimulus_order_counts) EXPECT_TRUE(n == 0 || n == 1);
}

TEST(AuditBalance, LatinSquareIsPerfectlyUniform) {
  std::vector<ParticipantConfig> configs;
  for (int i = 0; i < 4; ++i) {
    ParticipantConfig cfg;
    cfg.participant_id = "p" + std::to_string(i);
    cfg.study_id = "latin";
    for (int j = 0; j < 4; ++j) {
      Page page{j, "s" + std::to_string((i + j) % 4), {}};
      for (int k = 0; k < 4; ++k) {
        page.slots.push_back({k, SlotKind::kCondition, "C" + std::to_string((k + i + j) % 4), "u", std::nullopt});
      }
      cfg.pages.push_back(page);
    }
    configs.push_back(cfg);
  }
  const auto report = audit_balance(configs);
  EXPECT_DOUBLE_EQ(report.max_deviation, 0.0);
  EXPECT_DOUBLE_EQ(report.stimulus_order_max_abs_deviation, 0.0);
}

TEST(AuditBalance, MixedStudiesRejected) {
  auto configs = generate_batch(standard_study(), ids(2));
  configs[1].study_id = "other";
  EXPECT_THROW(audit_balance(configs), DesignError);
}

TEST(AuditBalance, JsonDocumentCarriesCounts) {
  const auto configs = generate_batch(standard_study(), ids(3));
  const auto doc = to_json_document(audit_balance(configs));
  EXPECT_EQ(doc["participants"], 3);
  EXPECT_FALSE(doc["condition_slider_counts"].empty());
  EXPECT_TRUE(doc.contains("max_deviation"));
}

}  // namespace
}  // namespace hemvip
