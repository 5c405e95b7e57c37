#pragma once

// Tabular rating dataset: the CSV export produced by the evaluation service
// and consumed by the analysis tools.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "hemvip/model.hpp"

namespace hemvip {

inline constexpr std::string_view kExportHeader =
    "participant_id,page_index,slider_index,condition_id,segment_id,is_attention_check,target,value,submitted_at";

/// RFC 3339 UTC timestamp with millisecond precision, e.g. 2021-08-16T09:30:00.250Z.
std::string format_rfc3339(std::int64_t unix_ms);
/// Accepts the format produced by format_rfc3339 (fraction and offset optional).
std::int64_t parse_rfc3339(std::string_view text);

/// Orders rows by (participant, page, slider).
void sort_export_order(std::vector<RatingRecord>& rows);

void write_ratings_csv(std::ostream& out, const std::vector<RatingRecord>& rows);
std::string ratings_csv(const std::vector<RatingRecord>& rows);

/// Throws FormatError on a malformed header or row.
std::vector<RatingRecord> read_ratings_csv(std::istream& in);
std::vector<RatingRecord> parse_ratings_csv(std::string_view text);

/// Rows that are not attention checks.
std::vector<RatingRecord> without_attention_checks(const std::vector<RatingRecord>& rows);

}  // namespace hemvip
