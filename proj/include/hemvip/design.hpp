#pragma once

// Counterbalanced per-participant configuration generator and balance audit.

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hemvip/model.hpp"

namespace hemvip {

class DesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Key under which attention-check slots are tallied in BalanceReport.
inline constexpr std::string_view kAttentionCheckKey = "@attention_check";

struct BalanceReport {
  std::string study_id;
  int participants = 0;
  int pages_per_participant = 0;
  int slots_per_page = 0;
  // (segment_id, page_index) -> number of participants seeing that segment at that position.
  std::map<std::pair<std::string, int>, int> stimulus_order_counts;
  // (condition_id, slider_index) -> occurrences; attention checks under kAttentionCheckKey.
  std::map<std::pair<std::string, int>, int> condition_slider_counts;
  // max |count - expected| / expected over condition-slider cells, where
  // expected is the condition's total spread evenly over the sliders.
  double max_deviation = 0.0;
  // max |count - expected| in raw counts over (segment, position) cells;
  // expected = participants / segments. Kept unnormalized because the
  // expectation is below one for typical study shapes.
  double stimulus_order_max_abs_deviation = 0.0;
};

/// Builds one config per id, in the order given. Ids are labels only: the
/// i-th config depends on the definition and i, never on the id strings.
/// Throws DesignError on an invalid definition or duplicate ids.
std::vector<ParticipantConfig> generate_batch(const StudyDefinition& def,
                                              std::span<const std::string> participant_ids);

/// Throws DesignError when configs belong to more than one study.
BalanceReport audit_balance(std::span<const ParticipantConfig> configs);

Json to_json_document(const BalanceReport& report);

}  // namespace hemvip
