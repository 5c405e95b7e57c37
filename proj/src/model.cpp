#include "hemvip/model.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <utility>

namespace hemvip {

const std::string* StimulusCatalog::find_video(std::string_view segment_id,
                                               std::string_view condition_id) const {
  for (const auto& v : videos) {
    if (v.segment_id == segment_id && v.condition_id == condition_id) return &v.uri;
  }
  return nullptr;
}

std::vector<AnchorLabel> default_anchor_labels() {
  return {{"Bad", 10}, {"Poor", 30}, {"Fair", 50}, {"Good", 70}, {"Excellent", 90}};
}

std::vector<SurveyQuestion> default_survey() {
  return {
      {"age", "What is your age?", SurveyAnswerKind::kInteger, {}},
      {"gender", "What is your gender?", SurveyAnswerKind::kChoice,
       {"female", "male", "other", "prefer not to say"}},
      {"continent", "On which continent have you lived the most?", SurveyAnswerKind::kChoice,
       {"Africa", "Asia", "Europe", "North America", "Oceania", "South America"}},
      {"native_english", "Is English your native language?", SurveyAnswerKind::kChoice,
       {"yes", "no"}},
      {"difficulty", "How difficult did you find the task?", SurveyAnswerKind::kChoice,
       {"very easy", "easy", "neutral", "difficult", "very difficult"}},
      {"comments", "Any other comments?", SurveyAnswerKind::kText, {}},
  };
}

const Condition* StudyDefinition::find_condition(std::string_view id) const {
  for (const auto& c : conditions) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

int StudyDefinition::protected_count() const {
  return static_cast<int>(
      std::count_if(conditions.begin(), conditions.end(), [](const Condition& c) { return c.is_protected; }));
}

std::vector<std::string> validate_study(const StudyDefinition& def) {
  std::vector<std::string> out;
  auto violation = [&out](std::string msg) { out.push_back(std::move(msg)); };

  if (def.study_id.empty()) violation("study_id is empty");

  const int n_conditions = static_cast<int>(def.conditions.size());
  if (n_conditions == 0) violation("no conditions defined");
  std::set<std::string> condition_ids;
  for (const auto& c : def.conditions) {
    if (c.id.empty()) {
      violation("condition with empty id");
    } else if (!condition_ids.insert(c.id).second) {
      violation("duplicate condition id '" + c.id + "'");
    }
  }

  if (def.pages_per_participant <= 0) violation("pages_per_participant must be positive");
  if (def.attention_checks_per_participant < 0) {
    violation("attention_checks_per_participant must be non-negative");
  }
  if (def.attention_checks_per_participant > def.pages_per_participant) {
    violation("attention_checks_per_participant (" + std::to_string(def.attention_checks_per_participant) +
              ") exceeds pages_per_participant (" + std::to_string(def.pages_per_participant) + ")");
  }

  if (def.slots_per_page <= 0) {
    violation("slots_per_page must be positive");
  } else {
    if (def.slots_per_page > kMaxStimuliPerPage) {
      violation("slots_per_page (" + std::to_string(def.slots_per_page) + ") exceeds the recommended maximum of " +
                std::to_string(kMaxStimuliPerPage) + " stimuli per page");
    }
    if (n_conditions > 0 && def.slots_per_page > n_conditions) {
      violation("slots_per_page (" + std::to_string(def.slots_per_page) + ") exceeds the number of conditions (" +
                std::to_string(n_conditions) + ")");
    }
    const int n_protected = def.protected_count();
    const int check_slot = def.attention_checks_per_participant > 0 ? 1 : 0;
    if (n_protected + check_slot > def.slots_per_page) {
      violation("protected conditions (" + std::to_string(n_protected) + ") plus attention-check slot do not fit in " +
                std::to_string(def.slots_per_page) + " slots");
    }
  }

  if (def.rating_scale.min >= def.rating_scale.max) violation("rating_scale.min must be below rating_scale.max");
  if (def.attention_target_range.lo > def.attention_target_range.hi) {
    violation("attention_target_range is empty");
  } else if (!def.rating_scale.contains(def.attention_target_range.lo) ||
             !def.rating_scale.contains(def.attention_target_range.hi)) {
    violation("attention_target_range lies outside the rating scale");
  }
  for (std::size_t i = 0; i < def.anchor_labels.size(); ++i) {
    const auto& a = def.anchor_labels[i];
    if (!def.rating_scale.contains(a.position)) violation("anchor label '" + a.label + "' outside the rating scale");
    if (i > 0 && def.anchor_labels[i - 1].position >= a.position) {
      violation("anchor labels not in ascending scale order at '" + a.label + "'");
    }
  }

  // Catalog completeness: each (segment, condition) exactly once.
  std::set<std::string> segment_ids;
  for (const auto& s : def.catalog.segments) {
    if (s.empty()) {
      violation("segment with empty id");
    } else if (!segment_ids.insert(s).second) {
      violation("duplicate segment id '" + s + "'");
    }
  }
  std::map<std::pair<std::string, std::string>, int> seen;
  for (const auto& v : def.catalog.videos) {
    if (!segment_ids.contains(v.segment_id)) violation("video for unknown segment '" + v.segment_id + "'");
    if (!condition_ids.contains(v.condition_id)) violation("video for unknown condition '" + v.condition_id + "'");
    if (v.uri.empty()) violation("empty video uri for (" + v.segment_id + ", " + v.condition_id + ")");
    if (++seen[{v.segment_id, v.condition_id}] == 2) {
      violation("duplicate video for (" + v.segment_id + ", " + v.condition_id + ")");
    }
  }
  for (const auto& s : segment_ids) {
    for (const auto& c : condition_ids) {
      if (!seen.contains({s, c})) violation("missing video for (" + s + ", " + c + ")");
    }
  }
  if (def.pages_per_participant > 0 && static_cast<int>(segment_ids.size()) < def.pages_per_participant) {
    violation("insufficient segments: " + std::to_string(segment_ids.size()) + " segments for " +
              std::to_string(def.pages_per_participant) + " pages per participant");
  }

  std::set<std::string> question_ids;
  for (const auto& q : def.survey) {
    if (q.id.empty() || !question_ids.insert(q.id).second) {
      violation("survey question id empty or duplicated: '" + q.id + "'");
    }
  }
  return out;
}

const Slot* Page::check_slot() const {
  for (const auto& s : slots) {
    if (s.is_check()) return &s;
  }
  return nullptr;
}

namespace {

constexpr std::pair<EventKind, std::string_view> kEventNames[] = {
    {EventKind::kPlayClicked, "play_clicked"},         {EventKind::kPlaybackStarted, "playback_started"},
    {EventKind::kPlaybackStopped, "playback_stopped"}, {EventKind::kSliderMoved, "slider_moved"},
    {EventKind::kPageSubmitted, "page_submitted"},     {EventKind::kElementClicked, "element_clicked"},
};

std::string_view to_string(SurveyAnswerKind kind) {
  switch (kind) {
    case SurveyAnswerKind::kText:
      return "text";
    case SurveyAnswerKind::kInteger:
      return "integer";
    case SurveyAnswerKind::kChoice:
      return "choice";
  }
  return "text";
}

SurveyAnswerKind parse_answer_kind(const std::string& s) {
  if (s == "text") return SurveyAnswerKind::kText;
  if (s == "integer") return SurveyAnswerKind::kInteger;
  if (s == "choice") return SurveyAnswerKind::kChoice;
  throw FormatError("unknown survey question kind '" + s + "'");
}

template <typename T>
T decode_document(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text).get<T>();
  } catch (const Json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(EventKind kind) {
  for (const auto& [k, name] : kEventNames) {
    if (k == kind) return name;
  }
  return "element_clicked";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (const auto& [k, name] : kEventNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

std::string slot_element(int slider_index) { return "slot-" + std::to_string(slider_index); }

std::optional<int> InteractionEvent::slot_index() const {
  constexpr std::string_view prefix = "slot-";
  if (!target_element.starts_with(prefix)) return std::nullopt;
  int idx = 0;
  const char* first = target_element.data() + prefix.size();
  const char* last = target_element.data() + target_element.size();
  auto [ptr, ec] = std::from_chars(first, last, idx);
  if (ec != std::errc() || ptr != last || first == last || idx < 0) return std::nullopt;
  return idx;
}

void to_json(Json& j, const Condition& v) {
  j = Json{{"id", v.id}, {"display_name", v.display_name}, {"protected", v.is_protected}};
}
void from_json(const Json& j, Condition& v) {
  j.at("id").get_to(v.id);
  v.display_name = j.value("display_name", v.id);
  v.is_protected = j.value("protected", false);
}

void to_json(Json& j, const StimulusCatalog& v) {
  Json videos = Json::array();
  for (const auto& e : v.videos) {
    videos.push_back({{"segment", e.segment_id}, {"condition", e.condition_id}, {"uri", e.uri}});
  }
  j = Json{{"segments", v.segments}, {"videos", std::move(videos)}};
}
void from_json(const Json& j, StimulusCatalog& v) {
  j.at("segments").get_to(v.segments);
  v.videos.clear();
  for (const auto& e : j.at("videos")) {
    v.videos.push_back({e.at("segment").get<std::string>(), e.at("condition").get<std::string>(),
                        e.at("uri").get<std::string>()});
  }
}

void to_json(Json& j, const AnchorLabel& v) { j = Json{{"label", v.label}, {"position", v.position}}; }
void from_json(const Json& j, AnchorLabel& v) {
  j.at("label").get_to(v.label);
  j.at("position").get_to(v.position);
}

void to_json(Json& j, const SurveyQuestion& v) {
  j = Json{{"id", v.id}, {"prompt", v.prompt}, {"kind", to_string(v.kind)}};
  if (!v.options.empty()) j["options"] = v.options;
}
void from_json(const Json& j, SurveyQuestion& v) {
  j.at("id").get_to(v.id);
  v.prompt = j.value("prompt", "");
  v.kind = parse_answer_kind(j.value("kind", "text"));
  v.options = j.value("options", std::vector<std::string>{});
}

void to_json(Json& j, const StudyDefinition& v) {
  j = Json{{"study_id", v.study_id},
           {"question", v.question},
           {"conditions", v.conditions},
           {"catalog", v.catalog},
           {"pages_per_participant", v.pages_per_participant},
           {"attention_checks_per_participant", v.attention_checks_per_participant},
           {"slots_per_page", v.slots_per_page},
           {"rating_scale", {{"min", v.rating_scale.min}, {"max", v.rating_scale.max}}},
           {"anchor_labels", v.anchor_labels},
           {"attention_target_range", {v.attention_target_range.lo, v.attention_target_range.hi}},
           {"attention_video_template", v.attention_video_template},
           {"survey", v.survey},
           {"random_seed", v.random_seed}};
}
void from_json(const Json& j, StudyDefinition& v) {
  StudyDefinition d;
  j.at("study_id").get_to(d.study_id);
  d.question = j.value("question", "");
  j.at("conditions").get_to(d.conditions);
  j.at("catalog").get_to(d.catalog);
  d.pages_per_participant = j.value("pages_per_participant", d.pages_per_participant);
  d.attention_checks_per_participant = j.value("attention_checks_per_participant", d.attention_checks_per_participant);
  d.slots_per_page = j.value("slots_per_page", d.slots_per_page);
  if (j.contains("rating_scale")) {
    d.rating_scale.min = j["rating_scale"].at("min").get<int>();
    d.rating_scale.max = j["rating_scale"].at("max").get<int>();
  }
  if (j.contains("anchor_labels")) j["anchor_labels"].get_to(d.anchor_labels);
  if (j.contains("attention_target_range")) {
    const auto& r = j["attention_target_range"];
    if (!r.is_array() || r.size() != 2) throw FormatError("attention_target_range must be [lo, hi]");
    d.attention_target_range = {r[0].get<int>(), r[1].get<int>()};
  }
  d.attention_video_template = j.value("attention_video_template", d.attention_video_template);
  if (j.contains("survey")) j["survey"].get_to(d.survey);
  d.random_seed = j.value("random_seed", std::uint64_t{0});
  v = std::move(d);
}

void to_json(Json& j, const Slot& v) {
  j = Json{{"slider_index", v.slider_index},
           {"kind", v.is_check() ? "attention_check" : "condition"},
           {"video_uri", v.video_uri}};
  if (v.is_check()) {
    j["attention_target"] = v.attention_target.value_or(0);
  } else {
    j["condition_id"] = v.condition_id;
  }
}
void from_json(const Json& j, Slot& v) {
  j.at("slider_index").get_to(v.slider_index);
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "attention_check") {
    v.kind = SlotKind::kAttentionCheck;
    v.condition_id.clear();
    v.attention_target = j.at("attention_target").get<int>();
  } else if (kind == "condition") {
    v.kind = SlotKind::kCondition;
    j.at("condition_id").get_to(v.condition_id);
    v.attention_target.reset();
  } else {
    throw FormatError("unknown slot kind '" + kind + "'");
  }
  j.at("video_uri").get_to(v.video_uri);
}

void to_json(Json& j, const Page& v) {
  j = Json{{"page_index", v.page_index}, {"segment_id", v.segment_id}, {"slots", v.slots}};
}
void from_json(const Json& j, Page& v) {
  j.at("page_index").get_to(v.page_index);
  j.at("segment_id").get_to(v.segment_id);
  j.at("slots").get_to(v.slots);
}

void to_json(Json& j, const ParticipantConfig& v) {
  j = Json{{"participant_id", v.participant_id},
           {"study_id", v.study_id},
           {"design_seed", v.design_seed},
           {"question", v.question},
           {"rating_scale", {{"min", v.rating_scale.min}, {"max", v.rating_scale.max}}},
           {"anchor_labels", v.anchor_labels},
           {"pages", v.pages},
           {"survey", v.survey}};
}
void from_json(const Json& j, ParticipantConfig& v) {
  j.at("participant_id").get_to(v.participant_id);
  j.at("study_id").get_to(v.study_id);
  v.design_seed = j.value("design_seed", std::uint64_t{0});
  v.question = j.value("question", "");
  if (j.contains("rating_scale")) {
    v.rating_scale.min = j["rating_scale"].at("min").get<int>();
    v.rating_scale.max = j["rating_scale"].at("max").get<int>();
  }
  v.anchor_labels = j.value("anchor_labels", std::vector<AnchorLabel>{});
  j.at("pages").get_to(v.pages);
  v.survey = j.value("survey", std::vector<SurveyQuestion>{});
}

void to_json(Json& j, const RatingRecord& v) {
  j = Json{{"participant_id", v.participant_id},
           {"study_id", v.study_id},
           {"page_index", v.page_index},
           {"slider_index", v.slider_index},
           {"condition_id", v.condition_id},
           {"is_attention_check", v.is_attention_check},
           {"target", v.target ? Json(*v.target) : Json(nullptr)},
           {"segment_id", v.segment_id},
           {"value", v.value},
           {"submitted_at_ms", v.submitted_at_ms}};
}
void from_json(const Json& j, RatingRecord& v) {
  j.at("participant_id").get_to(v.participant_id);
  j.at("study_id").get_to(v.study_id);
  j.at("page_index").get_to(v.page_index);
  j.at("slider_index").get_to(v.slider_index);
  v.condition_id = j.value("condition_id", "");
  v.is_attention_check = j.value("is_attention_check", false);
  if (j.contains("target") && !j["target"].is_null()) {
    v.target = j["target"].get<int>();
  } else {
    v.target.reset();
  }
  v.segment_id = j.value("segment_id", "");
  j.at("value").get_to(v.value);
  v.submitted_at_ms = j.value("submitted_at_ms", std::int64_t{0});
}

void to_json(Json& j, const InteractionEvent& v) {
  j = Json{{"participant_id", v.participant_id},
           {"page_index", v.page_index},
           {"event_kind", to_string(v.kind)},
           {"target_element", v.target_element},
           {"value", v.value ? Json(*v.value) : Json(nullptr)},
           {"timestamp_ms", v.timestamp_ms}};
}
void from_json(const Json& j, InteractionEvent& v) {
  v.participant_id = j.value("participant_id", "");
  j.at("page_index").get_to(v.page_index);
  const auto kind = j.at("event_kind").get<std::string>();
  auto parsed = parse_event_kind(kind);
  if (!parsed) throw FormatError("unknown event_kind '" + kind + "'");
  v.kind = *parsed;
  v.target_element = j.value("target_element", "");
  if (j.contains("value") && !j["value"].is_null()) {
    v.value = j["value"].get<int>();
  } else {
    v.value.reset();
  }
  j.at("timestamp_ms").get_to(v.timestamp_ms);
}

std::string encode_config(const ParticipantConfig& config) { return Json(config).dump(2) + "\n"; }

ParticipantConfig decode_config(std::string_view text) {
  return decode_document<ParticipantConfig>(text, "participant config");
}

StudyDefinition decode_study(std::string_view text) { return decode_document<StudyDefinition>(text, "study"); }

std::string encode_study(const StudyDefinition& def) { return Json(def).dump(2) + "\n"; }

}  // namespace hemvip
