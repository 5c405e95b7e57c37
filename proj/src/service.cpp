#include "hemvip/service.hpp"

#include "hemvip/dataset.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <tuple>

namespace hemvip {

int ambiguous_partner(int value) {
  if (value >= 13 && value <= 19) return (value - 10) * 10;
  if (value >= 30 && value <= 90 && value % 10 == 0) return 10 + value / 10;
  return value;
}

bool verify_attention(int target, int response, const AttentionPolicy& policy) {
  if (std::abs(response - target) <= policy.tolerance) return true;
  return policy.accept_ambiguous && std::abs(response - ambiguous_partner(target)) <= policy.tolerance;
}

std::string_view to_string(ParticipantStatus s) {
  switch (s) {
    case ParticipantStatus::kActive:
      return "active";
    case ParticipantStatus::kCompleted:
      return "completed";
    case ParticipantStatus::kBlocked:
      return "blocked";
  }
  return "active";
}

std::string_view to_string(PageOutcome o) {
  switch (o) {
    case PageOutcome::kAccepted:
      return "accepted";
    case PageOutcome::kCheckFailed:
      return "check_failed";
    case PageOutcome::kRejected:
      return "rejected";
  }
  return "rejected";
}

namespace {

PageOutcome parse_outcome(const std::string& s) {
  if (s == "accepted") return PageOutcome::kAccepted;
  if (s == "check_failed") return PageOutcome::kCheckFailed;
  throw FormatError("unexpected stored page outcome '" + s + "'");
}

Json ratings_json(const std::vector<SlotRating>& ratings) {
  Json arr = Json::array();
  for (const auto& r : ratings) arr.push_back({{"slider_index", r.slider_index}, {"value", r.value}});
  return arr;
}

std::vector<SlotRating> ratings_from_json(const Json& arr) {
  std::vector<SlotRating> out;
  for (const auto& r : arr) out.push_back({r.at("slider_index").get<int>(), r.at("value").get<int>()});
  return out;
}

std::vector<SlotRating> sorted_by_slider(std::vector<SlotRating> r) {
  std::sort(r.begin(), r.end(), [](const SlotRating& a, const SlotRating& b) { return a.slider_index < b.slider_index; });
  return r;
}

}  // namespace

std::map<std::pair<int, int>, std::int64_t> watch_times(const std::vector<InteractionEvent>& events) {
  std::map<std::pair<int, int>, std::int64_t> total;
  std::map<std::pair<int, int>, std::int64_t> open;
  for (const auto& e : events) {
    const auto slot = e.slot_index();
    if (!slot) continue;
    const std::pair key{e.page_index, *slot};
    if (e.kind == EventKind::kPlaybackStarted) {
      // Restarting a playing slot closes the running span first.
      if (auto it = open.find(key); it != open.end()) total[key] += e.timestamp_ms - it->second;
      open[key] = e.timestamp_ms;
      total.try_emplace(key, 0);
    } else if (e.kind == EventKind::kPlaybackStopped) {
      if (auto it = open.find(key); it != open.end()) {
        total[key] += e.timestamp_ms - it->second;
        open.erase(it);
      }
    }
  }
  return total;
}

struct EvalService::Participant {
  std::string raw_config;
  ParticipantConfig config;
  std::mutex mutex;
  ParticipantState state;
  std::map<int, std::pair<std::vector<SlotRating>, PageOutcome>> submitted;
  std::vector<InteractionEvent> events;
  std::set<InteractionEvent> event_keys;
  std::int64_t last_event_ms = std::numeric_limits<std::int64_t>::min();
  std::vector<Json> surveys;
};

EvalService::EvalService(std::shared_ptr<DocumentStore> store, ServiceOptions options)
    : store_(std::move(store)), options_(std::move(options)) {
  if (!store_) throw std::invalid_argument("EvalService requires a document store");
  if (options_.failures_before_block < 1) throw std::invalid_argument("failures_before_block must be at least 1");
}

EvalService::~EvalService() = default;

std::int64_t EvalService::now() const {
  if (options_.clock) return options_.clock();
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

void EvalService::register_config(std::string document) {
  auto config = decode_config(document);
  std::unique_lock lock(global_);
  auto key = std::make_pair(config.study_id, config.participant_id);
  if (participants_.contains(key)) {
    throw ServiceError(ServiceError::Code::kInvalid,
                       "duplicate config for participant '" + config.participant_id + "' in study '" + config.study_id + "'");
  }
  auto p = std::make_unique<Participant>();
  p->raw_config = std::move(document);
  p->state.participant_id = config.participant_id;
  if (config.pages.empty()) p->state.status = ParticipantStatus::kCompleted;
  p->config = std::move(config);
  studies_.insert(key.first);
  participants_.emplace(std::move(key), std::move(p));
}

std::size_t EvalService::register_config_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::size_t n = 0;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    // Balance reports and other documents without pages are not participant configs.
    const auto doc = Json::parse(text.str(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("pages") || !doc.contains("participant_id")) continue;
    register_config(text.str());
    ++n;
  }
  return n;
}

void EvalService::restore_from_store() {
  std::unique_lock lock(global_);
  auto lookup = [&](const Json& doc) -> Participant* {
    const auto it = participants_.find({doc.at("study_id").get<std::string>(), doc.at("participant_id").get<std::string>()});
    return it == participants_.end() ? nullptr : it->second.get();
  };
  for (const auto& doc : store_->read_all("sessions")) {
    if (auto* p = lookup(doc); p && !p->state.session_started_at_ms) {
      p->state.session_started_at_ms = doc.at("started_at_ms").get<std::int64_t>();
    }
  }
  for (const auto& doc : store_->read_all("pages")) {
    auto* p = lookup(doc);
    if (!p) continue;
    const auto expected = parse_outcome(doc.at("outcome").get<std::string>());
    const auto r = apply_page(*p, doc.at("page_index").get<int>(), ratings_from_json(doc.at("ratings")),
                              doc.at("submitted_at_ms").get<std::int64_t>(), false);
    if (r.outcome != expected) {
      throw FormatError("stored page for '" + p->state.participant_id + "' replays as " + std::string(to_string(r.outcome)));
    }
  }
  std::map<Participant*, std::vector<InteractionEvent>> pending;
  for (const auto& doc : store_->read_all("events")) {
    if (auto* p = lookup(doc)) pending[p].push_back(doc.get<InteractionEvent>());
  }
  for (auto& [p, evs] : pending) {
    std::size_t added = 0;
    apply_events(*p, evs, false, added);
  }
  for (const auto& doc : store_->read_all("surveys")) {
    if (auto* p = lookup(doc)) p->surveys.push_back(doc);
  }
}

bool EvalService::has_study(std::string_view study_id) const {
  std::shared_lock lock(global_);
  return studies_.contains(study_id);
}

std::vector<std::string> EvalService::participants(std::string_view study_id) const {
  std::shared_lock lock(global_);
  std::vector<std::string> out;
  for (const auto& [key, p] : participants_) {
    if (key.first == study_id) out.push_back(key.second);
  }
  return out;
}

EvalService::Participant& EvalService::find(std::string_view study_id, std::string_view participant_id) const {
  const auto it = participants_.find({std::string(study_id), std::string(participant_id)});
  if (it == participants_.end()) {
    throw ServiceError(ServiceError::Code::kNotFound,
                       "unknown participant '" + std::string(participant_id) + "' in study '" + std::string(study_id) + "'");
  }
  return *it->second;
}

std::string EvalService::fetch_config(std::string_view study_id, std::string_view participant_id) {
  std::shared_lock global(global_);
  auto& p = find(study_id, participant_id);
  std::lock_guard lock(p.mutex);
  if (p.state.status == ParticipantStatus::kBlocked) {
    throw ServiceError(ServiceError::Code::kBlocked, "participant is blocked");
  }
  if (!p.state.session_started_at_ms) {
    const auto t = now();
    store_->append("sessions", {{"study_id", p.config.study_id},
                                {"participant_id", p.config.participant_id},
                                {"started_at_ms", t}});
    p.state.session_started_at_ms = t;
  }
  return p.raw_config;
}

SubmitResult EvalService::submit_page(std::string_view study_id, std::string_view participant_id, int page_index,
                                      const std::vector<SlotRating>& ratings) {
  std::shared_lock global(global_);
  auto& p = find(study_id, participant_id);
  std::lock_guard lock(p.mutex);
  if (p.state.status == ParticipantStatus::kBlocked) {
    throw ServiceError(ServiceError::Code::kBlocked, "participant is blocked");
  }
  return apply_page(p, page_index, ratings, now(), true);
}

SubmitResult EvalService::apply_page(Participant& p, int page_index, const std::vector<SlotRating>& ratings,
                                     std::int64_t submitted_at, bool persist) {
  SubmitResult result;
  auto reject = [&](std::string reason) {
    result.outcome = PageOutcome::kRejected;
    result.reason = std::move(reason);
    result.state = p.state;
    return result;
  };

  const auto normalized = sorted_by_slider(ratings);
  if (const auto it = p.submitted.find(page_index); it != p.submitted.end()) {
    if (it->second.first != normalized) return reject("conflicting resubmission of page " + std::to_string(page_index));
    result.outcome = it->second.second;
    result.replayed = true;
    result.state = p.state;
    return result;
  }
  const int n_pages = static_cast<int>(p.config.pages.size());
  if (p.state.status != ParticipantStatus::kActive || page_index >= n_pages) {
    return reject("no further pages accepted for page index " + std::to_string(page_index));
  }
  if (page_index != p.state.current_page) {
    return reject("out-of-order page " + std::to_string(page_index) + "; expected " +
                  std::to_string(p.state.current_page));
  }

  const auto& page = p.config.pages[static_cast<std::size_t>(page_index)];
  if (normalized.size() != page.slots.size()) {
    return reject("expected " + std::to_string(page.slots.size()) + " ratings, got " + std::to_string(normalized.size()));
  }
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    if (normalized[i].slider_index != static_cast<int>(i)) {
      return reject("ratings must cover sliders 0.." + std::to_string(page.slots.size() - 1) + " exactly once");
    }
    if (!p.config.rating_scale.contains(normalized[i].value)) {
      return reject("value " + std::to_string(normalized[i].value) + " outside the rating scale");
    }
  }

  PageOutcome outcome = PageOutcome::kAccepted;
  for (const auto& slot : page.slots) {
    if (slot.is_check() &&
        !verify_attention(slot.attention_target.value_or(0), normalized[static_cast<std::size_t>(slot.slider_index)].value,
                          options_.attention)) {
      outcome = PageOutcome::kCheckFailed;
    }
  }

  std::vector<StoredRow> rows;
  for (const auto& slot : page.slots) {
    RatingRecord r;
    r.participant_id = p.config.participant_id;
    r.study_id = p.config.study_id;
    r.page_index = page_index;
    r.slider_index = slot.slider_index;
    r.condition_id = slot.condition_id;
    r.is_attention_check = slot.is_check();
    r.target = slot.attention_target;
    r.segment_id = page.segment_id;
    r.value = normalized[static_cast<std::size_t>(slot.slider_index)].value;
    r.submitted_at_ms = submitted_at;
    rows.push_back({std::move(r), outcome});
  }

  if (persist) {
    store_->append("pages", {{"study_id", p.config.study_id},
                             {"participant_id", p.config.participant_id},
                             {"page_index", page_index},
                             {"outcome", to_string(outcome)},
                             {"ratings", ratings_json(normalized)},
                             {"submitted_at_ms", submitted_at}});
    for (const auto& row : rows) {
      Json doc = row.record;
      doc["page_outcome"] = to_string(outcome);
      store_->append("ratings", doc);
    }
  }
  {
    std::lock_guard rows_lock(rows_mutex_);
    rows_.insert(rows_.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
  }

  p.submitted.emplace(page_index, std::make_pair(normalized, outcome));
  ++p.state.current_page;
  if (outcome == PageOutcome::kCheckFailed) ++p.state.failed_checks;
  if (p.state.failed_checks >= options_.failures_before_block) {
    p.state.status = ParticipantStatus::kBlocked;
  } else if (p.state.current_page == n_pages) {
    p.state.status = ParticipantStatus::kCompleted;
  }
  result.outcome = outcome;
  result.state = p.state;
  return result;
}

std::size_t EvalService::record_events(std::string_view study_id, std::string_view participant_id,
                                       std::vector<InteractionEvent> events) {
  std::shared_lock global(global_);
  auto& p = find(study_id, participant_id);
  std::lock_guard lock(p.mutex);
  for (auto& e : events) {
    if (e.participant_id.empty()) e.participant_id = p.config.participant_id;
    if (e.participant_id != p.config.participant_id) {
      throw ServiceError(ServiceError::Code::kInvalid, "event for another participant: '" + e.participant_id + "'");
    }
  }
  std::size_t added = 0;
  apply_events(p, events, true, added);
  return added;
}

void EvalService::apply_events(Participant& p, std::vector<InteractionEvent>& events, bool persist, std::size_t& added) {
  // Validate the whole batch before storing any of it.
  std::int64_t last = p.last_event_ms;
  std::set<InteractionEvent> batch_keys;
  for (const auto& e : events) {
    if (p.event_keys.contains(e) || batch_keys.contains(e)) continue;
    if (e.timestamp_ms < last) {
      throw ServiceError(ServiceError::Code::kInvalid, "event timestamps must be non-decreasing within a session");
    }
    last = e.timestamp_ms;
    batch_keys.insert(e);
  }
  for (const auto& e : events) {
    if (!p.event_keys.insert(e).second) continue;
    if (persist) {
      Json doc = e;
      doc["study_id"] = p.config.study_id;
      store_->append("events", doc);
    }
    p.events.push_back(e);
    p.last_event_ms = e.timestamp_ms;
    ++added;
  }
}

int EvalService::submit_survey(std::string_view study_id, std::string_view participant_id,
                               const SurveyResponse& response) {
  std::shared_lock global(global_);
  auto& p = find(study_id, participant_id);
  std::lock_guard lock(p.mutex);
  if (p.state.status != ParticipantStatus::kCompleted) {
    throw ServiceError(ServiceError::Code::kPrecondition, "survey requires all pages to be completed");
  }
  for (const auto& [qid, answer] : response.answers) {
    const auto q = std::find_if(p.config.survey.begin(), p.config.survey.end(),
                                [&](const SurveyQuestion& sq) { return sq.id == qid; });
    if (q == p.config.survey.end()) {
      throw ServiceError(ServiceError::Code::kInvalid, "undeclared survey question '" + qid + "'", qid);
    }
    bool ok = false;
    switch (q->kind) {
      case SurveyAnswerKind::kInteger:
        ok = answer.is_number_integer();
        break;
      case SurveyAnswerKind::kText:
        ok = answer.is_string();
        break;
      case SurveyAnswerKind::kChoice:
        ok = answer.is_string() &&
             std::find(q->options.begin(), q->options.end(), answer.get<std::string>()) != q->options.end();
        break;
    }
    if (!ok) throw ServiceError(ServiceError::Code::kInvalid, "invalid answer for survey question '" + qid + "'", qid);
  }
  const int version = static_cast<int>(p.surveys.size()) + 1;
  Json doc{{"study_id", p.config.study_id},
           {"participant_id", p.config.participant_id},
           {"version", version},
           {"answers", response.answers},
           {"submitted_at_ms", now()}};
  store_->append("surveys", doc);
  p.surveys.push_back(std::move(doc));
  return version;
}

std::vector<RatingRecord> EvalService::export_ratings(std::string_view study_id, const ExportOptions& options) const {
  std::unique_lock global(global_);
  if (!studies_.contains(study_id)) {
    throw ServiceError(ServiceError::Code::kNotFound, "unknown study '" + std::string(study_id) + "'");
  }
  std::set<std::string> excluded;
  if (options.drop_failed_participants) {
    for (const auto& [key, p] : participants_) {
      if (key.first == study_id && p->state.failed_checks > 0) excluded.insert(key.second);
    }
  }
  std::vector<RatingRecord> out;
  for (const auto& row : rows_) {
    if (row.record.study_id != study_id || excluded.contains(row.record.participant_id)) continue;
    if (row.page_outcome == PageOutcome::kCheckFailed && !options.include_failed_pages) continue;
    out.push_back(row.record);
  }
  sort_export_order(out);
  return out;
}

ParticipantState EvalService::state(std::string_view study_id, std::string_view participant_id) const {
  std::shared_lock global(global_);
  auto& p = find(study_id, participant_id);
  std::lock_guard lock(p.mutex);
  return p.state;
}

std::vector<InteractionEvent> EvalService::events(std::string_view study_id, std::string_view participant_id) const {
  std::shared_lock global(global_);
  auto& p = find(study_id, participant_id);
  std::lock_guard lock(p.mutex);
  return p.events;
}

std::vector<Json> EvalService::survey_history(std::string_view study_id, std::string_view participant_id) const {
  std::shared_lock global(global_);
  auto& p = find(study_id, participant_id);
  std::lock_guard lock(p.mutex);
  return p.surveys;
}

}  // namespace hemvip
