#include "hemvip/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string_view>

#include "hemvip/random.hpp"

namespace hemvip {
namespace {

std::string attention_video(const StudyDefinition& def, int target) {
  std::string uri = def.attention_video_template;
  constexpr std::string_view placeholder = "{target}";
  const auto pos = uri.find(placeholder);
  if (pos != std::string::npos) uri.replace(pos, placeholder.size(), std::to_string(target));
  return uri;
}

// Random tie-break ranks: a fresh permutation of 0..n-1.
std::vector<int> tie_ranks(Rng& rng, std::size_t n) {
  std::vector<int> r(n);
  std::iota(r.begin(), r.end(), 0);
  rng.shuffle(std::span<int>(r));
  return r;
}

class BatchGenerator {
 public:
  explicit BatchGenerator(const StudyDefinition& def)
      : def_(def),
        rng_(def.random_seed),
        n_segments_(def.catalog.segments.size()),
        n_slots_(static_cast<std::size_t>(def.slots_per_page)),
        seg_pos_(n_segments_, std::vector<int>(static_cast<std::size_t>(def.pages_per_participant), 0)),
        seg_total_(n_segments_, 0) {
    for (std::size_t c = 0; c < def.conditions.size(); ++c) {
      (def.conditions[c].is_protected ? protected_ : unprotected_).push_back(c);
    }
    cond_slider_.assign(def.conditions.size(), std::vector<int>(n_slots_, 0));
    cond_total_.assign(def.conditions.size(), 0);
  }

  ParticipantConfig next(const std::string& participant_id) {
    const int n_pages = def_.pages_per_participant;
    ParticipantConfig cfg;
    cfg.participant_id = participant_id;
    cfg.study_id = def_.study_id;
    cfg.design_seed = def_.random_seed;
    cfg.question = def_.question;
    cfg.rating_scale = def_.rating_scale;
    cfg.anchor_labels = def_.anchor_labels;
    cfg.survey = def_.survey;

    const auto segments = assign_segments();

    std::vector<int> page_order(static_cast<std::size_t>(n_pages));
    std::iota(page_order.begin(), page_order.end(), 0);
    rng_.shuffle(std::span<int>(page_order));
    std::set<int> check_pages(page_order.begin(), page_order.begin() + def_.attention_checks_per_participant);

    for (int p = 0; p < n_pages; ++p) {
      cfg.pages.push_back(build_page(p, segments[static_cast<std::size_t>(p)], check_pages.contains(p)));
    }
    return cfg;
  }

 private:
  // Segment for each page position: fill positions in random order, each
  // taking the unused segment least seen at that position, then least used
  // overall.
  std::vector<std::size_t> assign_segments() {
    const auto n_pages = static_cast<std::size_t>(def_.pages_per_participant);
    std::vector<std::size_t> positions(n_pages);
    std::iota(positions.begin(), positions.end(), 0);
    rng_.shuffle(std::span<std::size_t>(positions));
    const auto rank = tie_ranks(rng_, n_segments_);

    std::vector<bool> used(n_segments_, false);
    std::vector<std::size_t> out(n_pages);
    for (const auto pos : positions) {
      std::size_t best = n_segments_;
      for (std::size_t s = 0; s < n_segments_; ++s) {
        if (used[s]) continue;
        if (best == n_segments_ ||
            std::tie(seg_pos_[s][pos], seg_total_[s], rank[s]) <
                std::tie(seg_pos_[best][pos], seg_total_[best], rank[best])) {
          best = s;
        }
      }
      used[best] = true;
      out[pos] = best;
      ++seg_pos_[best][pos];
      ++seg_total_[best];
    }
    return out;
  }

  Page build_page(int page_index, std::size_t segment, bool has_check) {
    Page page;
    page.page_index = page_index;
    page.segment_id = def_.catalog.segments[segment];

    // Keep the least-shown unprotected conditions; the most-shown drop out.
    const std::size_t wanted = n_slots_ - protected_.size() - (has_check ? 1 : 0);
    const auto cond_rank = tie_ranks(rng_, def_.conditions.size());
    std::vector<std::size_t> pool = unprotected_;
    std::sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
      return std::tie(cond_total_[a], cond_rank[a]) < std::tie(cond_total_[b], cond_rank[b]);
    });
    std::vector<std::size_t> shown = protected_;
    shown.insert(shown.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(wanted));

    std::vector<bool> taken(n_slots_, false);
    page.slots.resize(n_slots_);
    if (has_check) {
      const auto slider = static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(n_slots_) - 1));
      const int target =
          static_cast<int>(rng_.uniform_int(def_.attention_target_range.lo, def_.attention_target_range.hi));
      auto& slot = page.slots[slider];
      slot.kind = SlotKind::kAttentionCheck;
      slot.attention_target = target;
      slot.video_uri = attention_video(def_, target);
      taken[slider] = true;
    }

    // Conditions claim sliders in random order, each taking the free
    // slider it has occupied least often.
    rng_.shuffle(std::span<std::size_t>(shown));
    const auto slider_rank = tie_ranks(rng_, n_slots_);
    for (const auto c : shown) {
      std::size_t best = n_slots_;
      for (std::size_t k = 0; k < n_slots_; ++k) {
        if (taken[k]) continue;
        if (best == n_slots_ ||
            std::tie(cond_slider_[c][k], slider_rank[k]) < std::tie(cond_slider_[c][best], slider_rank[best])) {
          best = k;
        }
      }
      taken[best] = true;
      ++cond_slider_[c][best];
      ++cond_total_[c];
      auto& slot = page.slots[best];
      slot.kind = SlotKind::kCondition;
      slot.condition_id = def_.conditions[c].id;
      slot.video_uri = *def_.catalog.find_video(page.segment_id, slot.condition_id);
    }
    for (std::size_t k = 0; k < n_slots_; ++k) page.slots[k].slider_index = static_cast<int>(k);
    return page;
  }

  const StudyDefinition& def_;
  Rng rng_;
  std::size_t n_segments_;
  std::size_t n_slots_;
  std::vector<std::size_t> protected_;
  std::vector<std::size_t> unprotected_;
  std::vector<std::vector<int>> seg_pos_;
  std::vector<int> seg_total_;
  std::vector<std::vector<int>> cond_slider_;
  std::vector<int> cond_total_;
};

}  // namespace

std::vector<ParticipantConfig> generate_batch(const StudyDefinition& def,
                                              std::span<const std::string> participant_ids) {
  if (auto violations = validate_study(def); !violations.empty()) {
    std::string msg = "invalid study definition:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw DesignError(msg);
  }
  std::set<std::string_view> seen;
  for (const auto& id : participant_ids) {
    if (id.empty()) throw DesignError("empty participant id");
    if (!seen.insert(id).second) throw DesignError("duplicate participant id '" + id + "'");
  }
  const int unprotected = static_cast<int>(def.conditions.size()) - def.protected_count();
  if (unprotected < def.slots_per_page - def.protected_count()) {
    throw DesignError("not enough unprotected conditions to fill a page");
  }

  BatchGenerator gen(def);
  std::vector<ParticipantConfig> out;
  out.reserve(participant_ids.size());
  for (const auto& id : participant_ids) out.push_back(gen.next(id));
  return out;
}

BalanceReport audit_balance(std::span<const ParticipantConfig> configs) {
  BalanceReport report;
  if (configs.empty()) return report;
  report.study_id = configs.front().study_id;
  report.participants = static_cast<int>(configs.size());

  std::set<std::string> segments;
  for (const auto& cfg : configs) {
    if (cfg.study_id != report.study_id) {
      throw DesignError("mixed study ids: '" + report.study_id + "' and '" + cfg.study_id + "'");
    }
    report.pages_per_participant = std::max(report.pages_per_participant, static_cast<int>(cfg.pages.size()));
    for (const auto& page : cfg.pages) {
      segments.insert(page.segment_id);
      ++report.stimulus_order_counts[{page.segment_id, page.page_index}];
      report.slots_per_page = std::max(report.slots_per_page, static_cast<int>(page.slots.size()));
      for (const auto& slot : page.slots) {
        const std::string key = slot.is_check() ? std::string(kAttentionCheckKey) : slot.condition_id;
        ++report.condition_slider_counts[{key, slot.slider_index}];
      }
    }
  }

  std::map<std::string, int> condition_totals;
  for (const auto& [key, n] : report.condition_slider_counts) {
    if (key.first != kAttentionCheckKey) condition_totals[key.first] += n;
  }
  const int n_sliders = report.slots_per_page;
  for (const auto& [cond, total] : condition_totals) {
    const double expected = static_cast<double>(total) / n_sliders;
    for (int k = 0; k < n_sliders; ++k) {
      const auto it = report.condition_slider_counts.find({cond, k});
      const int count = it == report.condition_slider_counts.end() ? 0 : it->second;
      report.max_deviation = std::max(report.max_deviation, std::abs(count - expected) / expected);
    }
  }

  for (int p = 0; p < report.pages_per_participant; ++p) {
    int at_position = 0;
    for (const auto& s : segments) {
      const auto it = report.stimulus_order_counts.find({s, p});
      if (it != report.stimulus_order_counts.end()) at_position += it->second;
    }
    const double expected = static_cast<double>(at_position) / static_cast<double>(segments.size());
    for (const auto& s : segments) {
      const auto it = report.stimulus_order_counts.find({s, p});
      const int count = it == report.stimulus_order_counts.end() ? 0 : it->second;
      report.stimulus_order_max_abs_deviation =
          std::max(report.stimulus_order_max_abs_deviation, std::abs(count - expected));
    }
  }
  return report;
}

Json to_json_document(const BalanceReport& report) {
  Json order = Json::array();
  for (const auto& [key, n] : report.stimulus_order_counts) {
    order.push_back({{"segment_id", key.first}, {"page_index", key.second}, {"count", n}});
  }
  Json sliders = Json::array();
  for (const auto& [key, n] : report.condition_slider_counts) {
    sliders.push_back({{"condition_id", key.first}, {"slider_index", key.second}, {"count", n}});
  }
  return Json{{"study_id", report.study_id},
              {"participants", report.participants},
              {"pages_per_participant", report.pages_per_participant},
              {"slots_per_page", report.slots_per_page},
              {"max_deviation", report.max_deviation},
              {"stimulus_order_max_abs_deviation", report.stimulus_order_max_abs_deviation},
              {"stimulus_order_counts", std::move(order)},
              {"condition_slider_counts", std::move(sliders)}};
}

}  // namespace hemvip
