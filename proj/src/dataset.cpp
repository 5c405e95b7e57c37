#include "hemvip/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

namespace hemvip {
namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw FormatError("unterminated quote in CSV line");
  return fields;
}

template <typename T>
T parse_number(std::string_view s, std::string_view what) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw FormatError("invalid " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string format_rfc3339(std::int64_t unix_ms) {
  using namespace std::chrono;
  const sys_time<milliseconds> tp{milliseconds{unix_ms}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss hms{tp - day};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()), static_cast<int>(hms.subseconds().count()));
  return buf;
}

std::int64_t parse_rfc3339(std::string_view text) {
  using namespace std::chrono;
  auto bad = [&] { return FormatError("invalid RFC 3339 timestamp: '" + std::string(text) + "'"); };
  if (text.size() < 20 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != 't') ||
      text[13] != ':' || text[16] != ':') {
    throw bad();
  }
  const int y = parse_number<int>(text.substr(0, 4), "year");
  const unsigned mo = parse_number<unsigned>(text.substr(5, 2), "month");
  const unsigned d = parse_number<unsigned>(text.substr(8, 2), "day");
  const int h = parse_number<int>(text.substr(11, 2), "hour");
  const int mi = parse_number<int>(text.substr(14, 2), "minute");
  const int s = parse_number<int>(text.substr(17, 2), "second");
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) throw bad();

  std::size_t pos = 19;
  std::int64_t ms = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      if (digits < 3) ms = ms * 10 + (text[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) throw bad();
    for (; digits < 3; ++digits) ms *= 10;
  }
  std::int64_t offset_min = 0;
  const auto zone = text.substr(pos);
  if (zone == "Z" || zone == "z") {
  } else if (zone.size() == 6 && (zone[0] == '+' || zone[0] == '-') && zone[3] == ':') {
    offset_min = parse_number<int>(zone.substr(1, 2), "offset") * 60 + parse_number<int>(zone.substr(4, 2), "offset");
    if (zone[0] == '-') offset_min = -offset_min;
  } else {
    throw bad();
  }
  const auto tp = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + milliseconds{ms} - minutes{offset_min};
  return duration_cast<milliseconds>(tp.time_since_epoch()).count();
}

void sort_export_order(std::vector<RatingRecord>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const RatingRecord& a, const RatingRecord& b) {
    return std::tie(a.participant_id, a.page_index, a.slider_index) <
           std::tie(b.participant_id, b.page_index, b.slider_index);
  });
}

void write_ratings_csv(std::ostream& out, const std::vector<RatingRecord>& rows) {
  out << kExportHeader << '\n';
  for (const auto& r : rows) {
    out << csv_field(r.participant_id) << ',' << r.page_index << ',' << r.slider_index << ','
        << csv_field(r.condition_id) << ',' << csv_field(r.segment_id) << ','
        << (r.is_attention_check ? "true" : "false") << ',';
    if (r.target) out << *r.target;
    out << ',' << r.value << ',' << format_rfc3339(r.submitted_at_ms) << '\n';
  }
}

std::string ratings_csv(const std::vector<RatingRecord>& rows) {
  std::ostringstream out;
  write_ratings_csv(out, rows);
  return out.str();
}

std::vector<RatingRecord> read_ratings_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty ratings CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kExportHeader) throw FormatError("unexpected CSV header: '" + line + "'");
  std::vector<RatingRecord> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) {
      throw FormatError("line " + std::to_string(line_no) + ": expected 9 fields, got " + std::to_string(f.size()));
    }
    RatingRecord r;
    r.participant_id = f[0];
    r.page_index = parse_number<int>(f[1], "page_index");
    r.slider_index = parse_number<int>(f[2], "slider_index");
    r.condition_id = f[3];
    r.segment_id = f[4];
    if (f[5] == "true" || f[5] == "1") {
      r.is_attention_check = true;
    } else if (f[5] != "false" && f[5] != "0") {
      throw FormatError("line " + std::to_string(line_no) + ": invalid is_attention_check '" + f[5] + "'");
    }
    if (!f[6].empty()) r.target = parse_number<int>(f[6], "target");
    r.value = parse_number<int>(f[7], "value");
    r.submitted_at_ms = parse_rfc3339(f[8]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<RatingRecord> parse_ratings_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_ratings_csv(in);
}

std::vector<RatingRecord> without_attention_checks(const std::vector<RatingRecord>& rows) {
  std::vector<RatingRecord> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [](const RatingRecord& r) { return !r.is_attention_check; });
  return out;
}

}  // namespace hemvip
