#pragma once

// Study definitions shared by the test suites.

#include <string>
#include <vector>

#include "hemvip/model.hpp"

namespace hemvip::testing {

/// `n_conditions` conditions named C0..; the first `n_protected` protected.
inline StudyDefinition make_study(int n_conditions, int n_protected, int n_segments, int pages, int checks, int slots,
                                  std::uint64_t seed = 1) {
  StudyDefinition def;
  def.study_id = "study";
  def.question = "How human-like are the character's movements?";
  for (int c = 0; c < n_conditions; ++c) {
    def.conditions.push_back({"C" + std::to_string(c), "Condition " + std::to_string(c), c < n_protected});
  }
  for (int s = 0; s < n_segments; ++s) {
    const std::string seg = "s" + std::to_string(s);
    def.catalog.segments.push_back(seg);
    for (const auto& c : def.conditions) def.catalog.videos.push_back({seg, c.id, "v/" + c.id + "/" + seg + ".mp4"});
  }
  def.pages_per_participant = pages;
  def.attention_checks_per_participant = checks;
  def.slots_per_page = slots;
  def.random_seed = seed;
  return def;
}

/// Standard shape: 8 conditions (2 protected), 50 segments,
/// 10 pages, 3 checks, 8 slots.
inline StudyDefinition standard_study(std::uint64_t seed = 1) { return make_study(8, 2, 50, 10, 3, 8, seed); }

}  // namespace hemvip::testing
