#pragma once

// Synthetic raters for exercising the pipeline end to end. The rater model
// is test scaffolding: Gaussian noise around per-condition latent means,
// rounded and clamped to the scale.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hemvip/model.hpp"
#include "hemvip/random.hpp"
#include "hemvip/service.hpp"

namespace hemvip {

struct RaterModel {
  std::map<std::string, double> latent_means;  // condition id -> [0, 100]
  double rater_bias_sd = 0.0;
  double noise_sd = 0.0;
  double attention_compliance = 1.0;
  std::uint64_t seed = 0;
};

/// Empty when the model is usable for `def`; otherwise the problems found.
std::vector<std::string> validate_model(const RaterModel& model, const StudyDefinition& def);

void to_json(Json& j, const RaterModel& m);
void from_json(const Json& j, RaterModel& m);

/// "P001", "P002", ... zero-padded to at least three digits.
std::vector<std::string> simulated_participant_ids(int n);

/// One synthetic participant. Draws are a function of (model.seed, index).
class SimulatedRater {
 public:
  SimulatedRater(const RaterModel& model, int participant_index);

  std::vector<SlotRating> rate(const Page& page, const RatingScale& scale, const AttentionPolicy& policy = {});

  /// Play, stop and slider events for one page, starting at `*clock_ms`
  /// (advanced past the page).
  std::vector<InteractionEvent> page_events(const Page& page, const std::vector<SlotRating>& ratings,
                                            std::int64_t* clock_ms);

  std::map<std::string, Json> survey_answers(const std::vector<SurveyQuestion>& survey);

 private:
  const RaterModel& model_;
  Rng rng_;
  double bias_;
};

/// Eight conditions (GT and Full protected), 50 segments, 10 pages with
/// 8 sliders and 3 attention checks per participant.
StudyDefinition demo_study(std::uint64_t seed = 42);

/// Latent means for demo_study: GT highest, NoPCA above Full, NoText and
/// NoAR below it.
RaterModel demo_rater_model(std::uint64_t seed = 7);

struct SimulationOptions {
  int failures_before_block = 1;
  // Fixed clock origin so exports are reproducible.
  std::int64_t start_time_ms = 1628553600000;  // 2021-08-10T00:00:00Z
  ExportOptions export_options;
};

struct SimulationResult {
  std::vector<ParticipantConfig> configs;
  std::vector<RatingRecord> export_rows;
  int completed = 0;
  int blocked = 0;
};

/// Generates configs and drives an in-process service through the same
/// fetch -> events -> ratings -> survey flow a browser would.
SimulationResult simulate_study(const StudyDefinition& def, const RaterModel& model, int n_participants,
                                const SimulationOptions& options = {});

struct DriveSummary {
  int participants = 0;
  int completed = 0;
  int blocked = 0;
  int pages_accepted = 0;
  int pages_check_failed = 0;
  int rating_rows_accepted = 0;  // rows on accepted pages
  int check_rows_accepted = 0;
  int events_sent = 0;
  std::vector<std::string> errors;
};

struct DriveOptions {
  int concurrency = 4;
  AttentionPolicy attention;
};

/// Runs the participant flow against a live service over HTTP.
DriveSummary drive_service(const std::string& base_url, const StudyDefinition& def, const RaterModel& model,
                           const std::vector<std::string>& participant_ids, const DriveOptions& options = {});

}  // namespace hemvip
