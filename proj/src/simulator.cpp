#include "hemvip/simulator.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "hemvip/design.hpp"

namespace hemvip {

std::vector<std::string> validate_model(const RaterModel& model, const StudyDefinition& def) {
  std::vector<std::string> out;
  if (!(model.rater_bias_sd >= 0.0)) out.push_back("rater_bias_sd must be non-negative");
  if (!(model.noise_sd >= 0.0)) out.push_back("noise_sd must be non-negative");
  if (!(model.attention_compliance >= 0.0 && model.attention_compliance <= 1.0)) {
    out.push_back("attention_compliance must lie in [0, 1]");
  }
  for (const auto& c : def.conditions) {
    const auto it = model.latent_means.find(c.id);
    if (it == model.latent_means.end()) {
      out.push_back("no latent mean for condition '" + c.id + "'");
    } else if (!(it->second >= def.rating_scale.min && it->second <= def.rating_scale.max)) {
      out.push_back("latent mean for '" + c.id + "' outside the rating scale");
    }
  }
  return out;
}

void to_json(Json& j, const RaterModel& m) {
  j = Json{{"latent_means", m.latent_means},
           {"rater_bias_sd", m.rater_bias_sd},
           {"noise_sd", m.noise_sd},
           {"attention_compliance", m.attention_compliance},
           {"seed", m.seed}};
}

void from_json(const Json& j, RaterModel& m) {
  j.at("latent_means").get_to(m.latent_means);
  m.rater_bias_sd = j.value("rater_bias_sd", 0.0);
  m.noise_sd = j.value("noise_sd", 0.0);
  m.attention_compliance = j.value("attention_compliance", 1.0);
  m.seed = j.value("seed", std::uint64_t{0});
}

std::vector<std::string> simulated_participant_ids(int n) {
  std::vector<std::string> ids;
  const int width = std::max(3, static_cast<int>(std::to_string(n).size()));
  for (int i = 1; i <= n; ++i) {
    std::string digits = std::to_string(i);
    ids.push_back("P" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(digits.size()))), '0') +
                  digits);
  }
  return ids;
}

SimulatedRater::SimulatedRater(const RaterModel& model, int participant_index)
    : model_(model), rng_(Rng::derive_seed(model.seed, static_cast<std::uint64_t>(participant_index))) {
  bias_ = rng_.normal(0.0, model_.rater_bias_sd);
}

std::vector<SlotRating> SimulatedRater::rate(const Page& page, const RatingScale& scale, const AttentionPolicy& policy) {
  std::vector<SlotRating> out;
  for (const auto& slot : page.slots) {
    int value = 0;
    if (slot.is_check()) {
      const int target = slot.attention_target.value_or(0);
      if (rng_.bernoulli(model_.attention_compliance)) {
        value = std::clamp(target + static_cast<int>(rng_.uniform_int(-3, 3)), scale.min, scale.max);
      } else {
        // Non-compliant raters never land on an accepted value by chance.
        std::vector<int> wrong;
        for (int v = scale.min; v <= scale.max; ++v) {
          if (!verify_attention(target, v, policy)) wrong.push_back(v);
        }
        value = wrong[static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(wrong.size()) - 1))];
      }
    } else {
      const auto it = model_.latent_means.find(slot.condition_id);
      if (it == model_.latent_means.end()) throw std::invalid_argument("no latent mean for '" + slot.condition_id + "'");
      const double raw = it->second + bias_ + rng_.normal(0.0, model_.noise_sd);
      value = std::clamp(static_cast<int>(std::lround(raw)), scale.min, scale.max);
    }
    out.push_back({slot.slider_index, value});
  }
  return out;
}

std::vector<InteractionEvent> SimulatedRater::page_events(const Page& page, const std::vector<SlotRating>& ratings,
                                                          std::int64_t* clock_ms) {
  std::vector<InteractionEvent> out;
  std::int64_t& t = *clock_ms;
  auto emit = [&](EventKind kind, std::string element, std::optional<int> value) {
    out.push_back({"", page.page_index, kind, std::move(element), value, t});
  };
  std::vector<int> order(page.slots.size());
  std::iota(order.begin(), order.end(), 0);
  rng_.shuffle(std::span<int>(order));
  for (const int s : order) {
    emit(EventKind::kPlayClicked, slot_element(s), std::nullopt);
    t += rng_.uniform_int(20, 200);
    emit(EventKind::kPlaybackStarted, slot_element(s), std::nullopt);
    t += rng_.uniform_int(4000, 10000);
    emit(EventKind::kPlaybackStopped, slot_element(s), std::nullopt);
    t += rng_.uniform_int(200, 2000);
  }
  for (const auto& r : ratings) {
    emit(EventKind::kSliderMoved, "slider-" + std::to_string(r.slider_index), r.value);
    t += rng_.uniform_int(300, 3000);
  }
  emit(EventKind::kPageSubmitted, "submit", std::nullopt);
  t += rng_.uniform_int(500, 1500);
  return out;
}

std::map<std::string, Json> SimulatedRater::survey_answers(const std::vector<SurveyQuestion>& survey) {
  std::map<std::string, Json> answers;
  for (const auto& q : survey) {
    switch (q.kind) {
      case SurveyAnswerKind::kInteger:
        answers[q.id] = rng_.uniform_int(18, 70);
        break;
      case SurveyAnswerKind::kChoice:
        if (!q.options.empty()) {
          answers[q.id] = q.options[static_cast<std::size_t>(
              rng_.uniform_int(0, static_cast<std::int64_t>(q.options.size()) - 1))];
        }
        break;
      case SurveyAnswerKind::kText:
        answers[q.id] = "";
        break;
    }
  }
  return answers;
}

StudyDefinition demo_study(std::uint64_t seed) {
  StudyDefinition def;
  def.study_id = "demo";
  def.question = "How human-like are the character's movements?";
  def.conditions = {{"GT", "Ground truth", true}, {"Full", "Full model", true},  {"NoAR", "NoAR", false},
                    {"NoPCA", "NoPCA", false},    {"NoFiLM", "NoFiLM", false},     {"NoAudio", "NoAudio", false},
                    {"NoText", "NoText", false},  {"NoVel", "NoVel", false}};
  for (int s = 1; s <= 50; ++s) {
    char seg[16];
    std::snprintf(seg, sizeof seg, "seg%02d", s);
    def.catalog.segments.emplace_back(seg);
    for (const auto& c : def.conditions) {
      def.catalog.videos.push_back({seg, c.id, "videos/" + c.id + "/" + seg + ".mp4"});
    }
  }
  def.pages_per_participant = 10;
  def.attention_checks_per_participant = 3;
  def.slots_per_page = 8;
  def.random_seed = seed;
  return def;
}

RaterModel demo_rater_model(std::uint64_t seed) {
  RaterModel m;
  m.latent_means = {{"GT", 70.0},     {"NoPCA", 62.0},  {"Full", 52.0}, {"NoFiLM", 50.0},
                    {"NoVel", 48.0},  {"NoAR", 44.0},   {"NoAudio", 47.0}, {"NoText", 40.0}};
  m.rater_bias_sd = 8.0;
  m.noise_sd = 15.0;
  m.attention_compliance = 0.97;
  m.seed = seed;
  return m;
}

SimulationResult simulate_study(const StudyDefinition& def, const RaterModel& model, int n_participants,
                                const SimulationOptions& options) {
  if (auto problems = validate_model(model, def); !problems.empty()) {
    throw std::invalid_argument("invalid rater model: " + problems.front());
  }
  SimulationResult result;
  const auto ids = simulated_participant_ids(n_participants);
  result.configs = generate_batch(def, ids);

  std::int64_t server_clock = options.start_time_ms;
  ServiceOptions service_options;
  service_options.failures_before_block = options.failures_before_block;
  service_options.clock = [&server_clock] { return server_clock; };
  EvalService service(std::make_shared<MemoryStore>(), service_options);
  for (const auto& cfg : result.configs) service.register_config(encode_config(cfg));

  for (int i = 0; i < n_participants; ++i) {
    const auto& id = ids[static_cast<std::size_t>(i)];
    const auto config = decode_config(service.fetch_config(def.study_id, id));
    SimulatedRater rater(model, i);
    std::int64_t session_ms = 0;
    ParticipantState state = service.state(def.study_id, id);
    for (const auto& page : config.pages) {
      const auto ratings = rater.rate(page, config.rating_scale, service_options.attention);
      service.record_events(def.study_id, id, rater.page_events(page, ratings, &session_ms));
      server_clock = options.start_time_ms + session_ms;
      state = service.submit_page(def.study_id, id, page.page_index, ratings).state;
      if (state.status != ParticipantStatus::kActive) break;
    }
    if (state.status == ParticipantStatus::kCompleted) {
      SurveyResponse survey{id, rater.survey_answers(config.survey)};
      service.submit_survey(def.study_id, id, survey);
      ++result.completed;
    } else if (state.status == ParticipantStatus::kBlocked) {
      ++result.blocked;
    }
  }
  result.export_rows = service.export_ratings(def.study_id, options.export_options);
  return result;
}

namespace {

DriveSummary drive_one(const std::string& base_url, const StudyDefinition& def, const RaterModel& model,
                       const std::string& id, int index, const DriveOptions& options) {
  DriveSummary s;
  s.participants = 1;
  httplib::Client client(base_url);
  client.set_read_timeout(30, 0);
  const std::string prefix = "/api/studies/" + def.study_id + "/participants/" + id;

  auto fail = [&](const std::string& what, const httplib::Result& res) {
    s.errors.push_back(id + ": " + what + " failed" +
                       (res ? " with HTTP " + std::to_string(res->status) + " " + res->body
                            : " (" + httplib::to_string(res.error()) + ")"));
    return s;
  };

  auto res = client.Get(prefix + "/config");
  if (!res || res->status != 200) return fail("fetch config", res);
  const auto config = decode_config(res->body);

  SimulatedRater rater(model, index);
  std::int64_t session_ms = 0;
  std::string status = "active";
  for (const auto& page : config.pages) {
    const auto ratings = rater.rate(page, config.rating_scale, options.attention);
    const auto events = rater.page_events(page, ratings, &session_ms);
    res = client.Post(prefix + "/events", Json{{"events", events}}.dump(), "application/json");
    if (!res || res->status != 200) return fail("post events", res);
    s.events_sent += static_cast<int>(events.size());

    Json body = Json::array();
    for (const auto& r : ratings) body.push_back({{"slider_index", r.slider_index}, {"value", r.value}});
    res = client.Post(prefix + "/pages/" + std::to_string(page.page_index) + "/ratings",
                      Json{{"ratings", body}}.dump(), "application/json");
    if (!res || res->status != 200) return fail("submit page " + std::to_string(page.page_index), res);
    const auto reply = Json::parse(res->body);
    if (reply.at("outcome") == "accepted") {
      ++s.pages_accepted;
      s.rating_rows_accepted += static_cast<int>(page.slots.size());
      s.check_rows_accepted += page.check_slot() ? 1 : 0;
    } else {
      ++s.pages_check_failed;
    }
    status = reply.at("status").get<std::string>();
    if (status != "active") break;
  }
  if (status == "completed") {
    res = client.Post(prefix + "/survey", Json{{"answers", rater.survey_answers(config.survey)}}.dump(),
                      "application/json");
    if (!res || res->status != 200) return fail("submit survey", res);
    ++s.completed;
  } else if (status == "blocked") {
    ++s.blocked;
  }
  return s;
}

}  // namespace

DriveSummary drive_service(const std::string& base_url, const StudyDefinition& def, const RaterModel& model,
                           const std::vector<std::string>& participant_ids, const DriveOptions& options) {
  DriveSummary total;
  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < participant_ids.size(); i = next++) {
      DriveSummary one;
      try {
        one = drive_one(base_url, def, model, participant_ids[i], static_cast<int>(i), options);
      } catch (const std::exception& e) {
        one.participants = 1;
        one.errors.push_back(participant_ids[i] + ": " + e.what());
      }
      std::lock_guard lock(mutex);
      total.participants += one.participants;
      total.completed += one.completed;
      total.blocked += one.blocked;
      total.pages_accepted += one.pages_accepted;
      total.pages_check_failed += one.pages_check_failed;
      total.rating_rows_accepted += one.rating_rows_accepted;
      total.check_rows_accepted += one.check_rows_accepted;
      total.events_sent += one.events_sent;
      total.errors.insert(total.errors.end(), one.errors.begin(), one.errors.end());
    }
  };
  const int n_threads = std::max(1, std::min<int>(options.concurrency, static_cast<int>(participant_ids.size())));
  std::vector<std::thread> threads;
  for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return total;
}

}  // namespace hemvip
