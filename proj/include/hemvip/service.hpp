#pragma once

// Evaluation service core: config delivery, page submission with attention
// checks and blocking, interaction logs, surveys, and rating export. The
// HTTP layer in http_server.hpp is a thin adapter over this class.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hemvip/model.hpp"
#include "hemvip/store.hpp"

namespace hemvip {

struct AttentionPolicy {
  int tolerance = 3;
  // Accept the teen/ty confusions 13<->30 ... 19<->90.
  bool accept_ambiguous = true;
};

/// Teen/ty partner of `value` (13<->30, ..., 19<->90); identity elsewhere.
int ambiguous_partner(int value);

/// True iff the response lies within the tolerance of the target or of its
/// ambiguous partner.
bool verify_attention(int target, int response, const AttentionPolicy& policy = {});

enum class ParticipantStatus { kActive, kCompleted, kBlocked };
std::string_view to_string(ParticipantStatus s);

struct ParticipantState {
  std::string participant_id;
  ParticipantStatus status = ParticipantStatus::kActive;
  int current_page = 0;
  int failed_checks = 0;
  std::optional<std::int64_t> session_started_at_ms;
};

enum class PageOutcome { kAccepted, kCheckFailed, kRejected };
std::string_view to_string(PageOutcome o);

struct SlotRating {
  int slider_index = 0;
  int value = 0;

  bool operator==(const SlotRating&) const = default;
};

struct SubmitResult {
  PageOutcome outcome = PageOutcome::kRejected;
  std::string reason;       // set when rejected
  bool replayed = false;    // identical resubmission of an already-stored page
  ParticipantState state;
};

struct SurveyResponse {
  std::string participant_id;
  std::map<std::string, Json> answers;  // question id -> string or integer
};

struct ServiceOptions {
  AttentionPolicy attention;
  // Number of failed attention checks that blocks a participant.
  int failures_before_block = 1;
  // Unix time in milliseconds; defaults to the system clock.
  std::function<std::int64_t()> clock;
};

struct ExportOptions {
  // Pages whose attention check failed are stored but left out by default.
  bool include_failed_pages = false;
  // Drop every row of participants with at least one failed check.
  bool drop_failed_participants = false;
};

class ServiceError : public std::runtime_error {
 public:
  enum class Code {
    kNotFound,      // unknown study or participant
    kBlocked,       // participant blocked after failed attention checks
    kInvalid,       // malformed request
    kPrecondition,  // operation not allowed in the participant's state
  };

  ServiceError(Code code, const std::string& what, std::string detail = {})
      : std::runtime_error(what), code_(code), detail_(std::move(detail)) {}

  Code code() const { return code_; }
  /// Extra machine-readable context, e.g. the offending survey question id.
  const std::string& detail() const { return detail_; }

 private:
  Code code_;
  std::string detail_;
};

/// Watch time in ms per (page_index, slider_index): each slot's
/// playback_started/playback_stopped spans, paired per slot.
std::map<std::pair<int, int>, std::int64_t> watch_times(const std::vector<InteractionEvent>& events);

class EvalService {
 public:
  explicit EvalService(std::shared_ptr<DocumentStore> store, ServiceOptions options = {});
  ~EvalService();

  EvalService(const EvalService&) = delete;
  EvalService& operator=(const EvalService&) = delete;

  /// Registers a participant config document verbatim. Throws FormatError
  /// on a malformed document, ServiceError(kInvalid) on a duplicate.
  void register_config(std::string document);
  /// Registers every *.json file in `dir`; returns the count.
  std::size_t register_config_dir(const std::filesystem::path& dir);

  /// Rebuilds participant state from the store. Call once after all configs
  /// are registered and before serving.
  void restore_from_store();

  bool has_study(std::string_view study_id) const;
  std::vector<std::string> participants(std::string_view study_id) const;

  /// The registered document, byte for byte. Marks the session start on the
  /// first call.
  std::string fetch_config(std::string_view study_id, std::string_view participant_id);

  SubmitResult submit_page(std::string_view study_id, std::string_view participant_id, int page_index,
                           const std::vector<SlotRating>& ratings);

  /// Returns the number of newly stored events; exact duplicates of stored
  /// events are skipped.
  std::size_t record_events(std::string_view study_id, std::string_view participant_id,
                            std::vector<InteractionEvent> events);

  /// Returns the stored version number (1 for the first submission).
  int submit_survey(std::string_view study_id, std::string_view participant_id, const SurveyResponse& response);

  std::vector<RatingRecord> export_ratings(std::string_view study_id, const ExportOptions& options = {}) const;

  ParticipantState state(std::string_view study_id, std::string_view participant_id) const;
  std::vector<InteractionEvent> events(std::string_view study_id, std::string_view participant_id) const;
  /// Every stored survey version, oldest first.
  std::vector<Json> survey_history(std::string_view study_id, std::string_view participant_id) const;

 private:
  struct Participant;
  struct StoredRow {
    RatingRecord record;
    PageOutcome page_outcome;
  };

  Participant& find(std::string_view study_id, std::string_view participant_id) const;
  std::int64_t now() const;
  SubmitResult apply_page(Participant& p, int page_index, const std::vector<SlotRating>& ratings,
                          std::int64_t submitted_at, bool persist);
  void apply_events(Participant& p, std::vector<InteractionEvent>& events, bool persist, std::size_t& added);

  std::shared_ptr<DocumentStore> store_;
  ServiceOptions options_;
  // Shared by per-participant operations, exclusive for export snapshots and registration.
  mutable std::shared_mutex global_;
  std::map<std::pair<std::string, std::string>, std::unique_ptr<Participant>> participants_;
  std::set<std::string, std::less<>> studies_;
  mutable std::mutex rows_mutex_;
  std::vector<StoredRow> rows_;
};

}  // namespace hemvip
