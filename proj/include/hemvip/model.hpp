#pragma once

// Domain types shared by the design generator, the evaluation service,
// the statistics engine and the simulator.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hemvip {

using Json = nlohmann::json;

/// Raised when a document does not decode into a well-formed domain value.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Condition {
  std::string id;
  std::string display_name;
  // Protected conditions are never displaced by an attention check and
  // appear on every page.
  bool is_protected = false;

  bool operator==(const Condition&) const = default;
};

struct VideoEntry {
  std::string segment_id;
  std::string condition_id;
  std::string uri;

  bool operator==(const VideoEntry&) const = default;
};

// Kept as a flat list so that duplicated (segment, condition) pairs in a
// definition file stay visible to validate_study.
struct StimulusCatalog {
  std::vector<std::string> segments;
  std::vector<VideoEntry> videos;

  /// nullptr if the pair is absent.
  const std::string* find_video(std::string_view segment_id,
                                std::string_view condition_id) const;

  bool operator==(const StimulusCatalog&) const = default;
};

struct RatingScale {
  int min = 0;
  int max = 100;

  bool contains(int v) const { return v >= min && v <= max; }
  bool operator==(const RatingScale&) const = default;
};

struct AnchorLabel {
  std::string label;
  int position = 0;

  bool operator==(const AnchorLabel&) const = default;
};

/// Inclusive integer interval.
struct IntRange {
  int lo = 0;
  int hi = 0;

  bool contains(int v) const { return v >= lo && v <= hi; }
  bool operator==(const IntRange&) const = default;
};

enum class SurveyAnswerKind { kText, kInteger, kChoice };

struct SurveyQuestion {
  std::string id;
  std::string prompt;
  SurveyAnswerKind kind = SurveyAnswerKind::kText;
  std::vector<std::string> options;  // kChoice only

  bool operator==(const SurveyQuestion&) const = default;
};

/// Bad/Poor/Fair/Good/Excellent at 10/30/50/70/90.
std::vector<AnchorLabel> default_anchor_labels();

/// Demographic questionnaire shown after the last page.
std::vector<SurveyQuestion> default_survey();

struct StudyDefinition {
  std::string study_id;
  std::string question;
  std::vector<Condition> conditions;
  StimulusCatalog catalog;
  int pages_per_participant = 10;
  int attention_checks_per_participant = 3;
  int slots_per_page = 8;
  RatingScale rating_scale;
  std::vector<AnchorLabel> anchor_labels = default_anchor_labels();
  IntRange attention_target_range{5, 95};
  // "{target}" is replaced by the requested value.
  std::string attention_video_template = "attention/{target}.mp4";
  std::vector<SurveyQuestion> survey = default_survey();
  std::uint64_t random_seed = 0;

  const Condition* find_condition(std::string_view id) const;
  int protected_count() const;

  bool operator==(const StudyDefinition&) const = default;
};

inline constexpr int kMaxStimuliPerPage = 12;

/// Every invariant violation of `def`, in a fixed order. Empty means valid.
std::vector<std::string> validate_study(const StudyDefinition& def);

enum class SlotKind { kCondition, kAttentionCheck };

struct Slot {
  int slider_index = 0;
  SlotKind kind = SlotKind::kCondition;
  std::string condition_id;  // empty for attention checks
  std::string video_uri;
  std::optional<int> attention_target;

  bool is_check() const { return kind == SlotKind::kAttentionCheck; }
  bool operator==(const Slot&) const = default;
};

struct Page {
  int page_index = 0;
  std::string segment_id;
  std::vector<Slot> slots;

  const Slot* check_slot() const;
  bool operator==(const Page&) const = default;
};

struct ParticipantConfig {
  std::string participant_id;
  std::string study_id;
  std::uint64_t design_seed = 0;
  std::string question;
  RatingScale rating_scale;
  std::vector<AnchorLabel> anchor_labels;
  std::vector<Page> pages;
  std::vector<SurveyQuestion> survey;

  bool operator==(const ParticipantConfig&) const = default;
};

struct RatingRecord {
  std::string participant_id;
  std::string study_id;
  int page_index = 0;
  int slider_index = 0;
  std::string condition_id;  // empty for attention checks
  bool is_attention_check = false;
  std::optional<int> target;
  std::string segment_id;
  int value = 0;
  std::int64_t submitted_at_ms = 0;  // Unix epoch, milliseconds

  bool operator==(const RatingRecord&) const = default;
};

enum class EventKind {
  kPlayClicked,
  kPlaybackStarted,
  kPlaybackStopped,
  kSliderMoved,
  kPageSubmitted,
  kElementClicked,
};

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

struct InteractionEvent {
  std::string participant_id;
  int page_index = 0;
  EventKind kind = EventKind::kElementClicked;
  std::string target_element;  // playback events use "slot-<slider_index>"
  std::optional<int> value;
  std::int64_t timestamp_ms = 0;  // since session start

  /// Slider index addressed by a "slot-<n>" target, if any.
  std::optional<int> slot_index() const;

  bool operator==(const InteractionEvent&) const = default;
  auto operator<=>(const InteractionEvent&) const = default;
};

std::string slot_element(int slider_index);

// JSON encoding. Field names are the ones documented in docs/schema.md.
void to_json(Json& j, const Condition& v);
void from_json(const Json& j, Condition& v);
void to_json(Json& j, const StimulusCatalog& v);
void from_json(const Json& j, StimulusCatalog& v);
void to_json(Json& j, const AnchorLabel& v);
void from_json(const Json& j, AnchorLabel& v);
void to_json(Json& j, const SurveyQuestion& v);
void from_json(const Json& j, SurveyQuestion& v);
void to_json(Json& j, const StudyDefinition& v);
void from_json(const Json& j, StudyDefinition& v);
void to_json(Json& j, const Slot& v);
void from_json(const Json& j, Slot& v);
void to_json(Json& j, const Page& v);
void from_json(const Json& j, Page& v);
void to_json(Json& j, const ParticipantConfig& v);
void from_json(const Json& j, ParticipantConfig& v);
void to_json(Json& j, const RatingRecord& v);
void from_json(const Json& j, RatingRecord& v);
void to_json(Json& j, const InteractionEvent& v);
void from_json(const Json& j, InteractionEvent& v);

/// Canonical document text for a participant config (2-space indent, trailing newline).
std::string encode_config(const ParticipantConfig& config);
ParticipantConfig decode_config(std::string_view text);

StudyDefinition decode_study(std::string_view text);
std::string encode_study(const StudyDefinition& def);

}  // namespace hemvip
