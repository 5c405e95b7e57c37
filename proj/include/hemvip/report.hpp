#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hemvip/analysis.hpp"

namespace hemvip {

/// Fixed-width table: mean difference ± CI half-width, preference share with
/// CI, and Holm-adjusted p-values per test; '†' marks significance.
std::string render_text_report(const std::vector<ContrastResult>& results, const AnalysisConfig& config);

std::string render_csv_report(const std::vector<ContrastResult>& results);

Json to_json_document(const std::vector<ContrastResult>& results, const AnalysisConfig& config);

/// One contrast per non-empty line: "A B", "A,B" or "A->B". '#' starts a comment.
std::vector<ConditionPair> parse_contrast_list(std::string_view text);

}  // namespace hemvip
