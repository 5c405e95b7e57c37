#include "hemvip/report.hpp"

#include <cstdio>
#include <sstream>

namespace hemvip {
namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string format_p(const TestOutcome& t) {
  if (!t.p_adjusted) return "n/a";
  std::string s = *t.p_adjusted < 1e-4 ? "<0.0001" : fmt("%.4f", *t.p_adjusted);
  if (t.significant) s += "†";
  return s;
}

std::string pad(std::string s, std::size_t width) {
  // Width counts code points so the dagger and arrows do not skew columns.
  std::size_t cps = 0;
  for (const unsigned char c : s) cps += (c & 0xC0) != 0x80;
  if (cps < width) s.append(width - cps, ' ');
  return s;
}

std::string opt_num(const std::optional<double>& v) {
  return v ? fmt("%.10g", *v) : std::string();
}

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json outcome_json(const TestOutcome& t) {
  Json j{{"p", opt_json(t.p)}, {"p_adjusted", opt_json(t.p_adjusted)}, {"significant", t.significant}};
  if (!t.note.empty()) j["note"] = t.note;
  return j;
}

Json interval_json(const std::optional<Interval>& ci) {
  return ci ? Json::array({ci->lo, ci->hi}) : Json(nullptr);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string render_text_report(const std::vector<ContrastResult>& results, const AnalysisConfig& config) {
  std::ostringstream out;
  const int conf_pct = static_cast<int>(config.confidence * 100.0 + 0.5);
  out << pad("Contrast (A→B)", 24) << pad("n", 6) << pad("ties", 6)
      << pad("E[R_B−R_A] ±" + std::to_string(conf_pct) + "%", 18)
      << pad("P(R_B>R_A) [" + std::to_string(conf_pct) + "% CI]", 26) << pad("p C-P", 11) << pad("p t", 11)
      << "p Wilcoxon\n";
  for (const auto& r : results) {
    std::string mean = fmt("%+.1f", r.mean_diff);
    if (r.mean_diff_ci) mean += " ± " + fmt("%.1f", (r.mean_diff_ci->hi - r.mean_diff_ci->lo) / 2.0);
    std::string pref = "n/a";
    if (r.pref_b && r.pref_ci) {
      pref = fmt("%.1f%%", *r.pref_b * 100.0) + " [" + fmt("%.1f", r.pref_ci->lo * 100.0) + ", " +
             fmt("%.1f", r.pref_ci->hi * 100.0) + "]";
    }
    out << pad(r.condition_a + "→" + r.condition_b, 24) << pad(std::to_string(r.n), 6)
        << pad(std::to_string(r.n_ties), 6) << pad(mean, 18) << pad(pref, 26) << pad(format_p(r.clopper_pearson), 11)
        << pad(format_p(r.t_test), 11) << format_p(r.wilcoxon) << '\n';
  }
  out << "\nHolm-Bonferroni adjusted p-values per test family over " << results.size()
      << " contrasts; † significant at alpha = " << fmt("%g", config.alpha)
      << ". Ties are excluded from C-P and Wilcoxon, kept for the t-test.\n";
  return out.str();
}

std::string render_csv_report(const std::vector<ContrastResult>& results) {
  std::ostringstream out;
  out << "condition_a,condition_b,n,n_ties,n_positive,n_negative,mean_diff,mean_ci_lo,mean_ci_hi,"
         "pref_b,pref_ci_lo,pref_ci_hi,p_cp,p_cp_adj,sig_cp,p_t,p_t_adj,sig_t,p_wilcoxon,p_wilcoxon_adj,"
         "sig_wilcoxon,t,w_plus\n";
  auto test_cols = [](const TestOutcome& t) {
    return opt_num(t.p) + "," + opt_num(t.p_adjusted) + "," + (t.significant ? "true" : "false");
  };
  for (const auto& r : results) {
    out << r.condition_a << ',' << r.condition_b << ',' << r.n << ',' << r.n_ties << ',' << r.n_positive << ','
        << r.n_negative << ',' << fmt("%.10g", r.mean_diff) << ','
        << (r.mean_diff_ci ? fmt("%.10g", r.mean_diff_ci->lo) : "") << ','
        << (r.mean_diff_ci ? fmt("%.10g", r.mean_diff_ci->hi) : "") << ',' << opt_num(r.pref_b) << ','
        << (r.pref_ci ? fmt("%.10g", r.pref_ci->lo) : "") << ',' << (r.pref_ci ? fmt("%.10g", r.pref_ci->hi) : "")
        << ',' << test_cols(r.clopper_pearson) << ',' << test_cols(r.t_test) << ',' << test_cols(r.wilcoxon) << ','
        << opt_num(r.t_statistic) << ',' << opt_num(r.w_plus) << '\n';
  }
  return out.str();
}

Json to_json_document(const std::vector<ContrastResult>& results, const AnalysisConfig& config) {
  Json contrasts = Json::array();
  for (const auto& r : results) {
    contrasts.push_back({{"condition_a", r.condition_a},
                         {"condition_b", r.condition_b},
                         {"n", r.n},
                         {"n_ties", r.n_ties},
                         {"n_positive", r.n_positive},
                         {"n_negative", r.n_negative},
                         {"mean_diff", r.mean_diff},
                         {"mean_diff_ci", interval_json(r.mean_diff_ci)},
                         {"pref_b", opt_json(r.pref_b)},
                         {"pref_ci", interval_json(r.pref_ci)},
                         {"t", opt_json(r.t_statistic)},
                         {"w_plus", opt_json(r.w_plus)},
                         {"clopper_pearson", outcome_json(r.clopper_pearson)},
                         {"t_test", outcome_json(r.t_test)},
                         {"wilcoxon", outcome_json(r.wilcoxon)}});
  }
  return Json{{"alpha", config.alpha},
              {"confidence", config.confidence},
              {"aggregation", config.aggregation == Aggregation::kPooledPages ? "pooled_pages" : "participant_means"},
              {"correction", "holm-bonferroni per test family"},
              {"contrasts", std::move(contrasts)}};
}

std::vector<ConditionPair> parse_contrast_list(std::string_view text) {
  std::vector<ConditionPair> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string s = trim(line);
    if (s.empty()) continue;
    std::size_t sep_len = 2;
    auto sep = s.find("->");
    if (sep == std::string::npos) {
      sep_len = 1;
      sep = s.find_first_of(", \t");
    }
    if (sep == std::string::npos) throw FormatError("contrast line " + std::to_string(line_no) + ": need two ids");
    ConditionPair p{trim(s.substr(0, sep)), trim(s.substr(sep + sep_len))};
    if (p.a.empty() || p.b.empty()) throw FormatError("contrast line " + std::to_string(line_no) + ": need two ids");
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace hemvip
