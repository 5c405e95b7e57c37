#include "hemvip/http_server.hpp"

#include <gtest/gtest.h>

#include <algorithm>

#include "hemvip/dataset.hpp"
#include "hemvip/design.hpp"
#include "support/fixtures.hpp"
#include "support/live_server.hpp"

namespace hemvip {
namespace {

const std::string kBase = "/api/studies/study/participants/";

class HttpFlow : public ::testing::Test {
 protected:
  void SetUp() override {
    std::vector<std::string> ids{"P0", "P1", "P2"};
    configs_ = generate_batch(testing::standard_study(21), ids);
    for (const auto& c : configs_) service_.register_config(encode_config(c));
    server_ = std::make_unique<testing::LiveServer>(service_);
    ASSERT_GT(server_->port(), 0);
  }

  std::string page_body(int participant, int page, std::optional<int> check_value = {}) const {
    Json list = Json::array();
    for (const auto& s : configs_[static_cast<std::size_t>(participant)].pages[static_cast<std::size_t>(page)].slots) {
      list.push_back({{"slider_index", s.slider_index}, {"value", s.is_check() ? check_value.value_or(*s.attention_target) : 55}});
    }
    return Json{{"ratings", list}}.dump();
  }

  httplib::Result post_page(int participant, int page, std::optional<int> check_value = {}) {
    auto cli = server_->client();
    return cli.Post(kBase + "P" + std::to_string(participant) + "/pages/" + std::to_string(page) + "/ratings",
                    page_body(participant, page, check_value), "application/json");
  }

  EvalService service_{std::make_shared<MemoryStore>()};
  std::vector<ParticipantConfig> configs_;
  std::unique_ptr<testing::LiveServer> server_;
};

TEST_F(HttpFlow, HealthAndConfig) {
  auto cli = server_->client();
  auto health = cli.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(Json::parse(health->body)["status"], "ok");

  auto cfg = cli.Get(kBase + "P1/config");
  ASSERT_TRUE(cfg);
  EXPECT_EQ(cfg->status, 200);
  EXPECT_EQ(cfg->body, encode_config(configs_[1]));

  auto missing = cli.Get(kBase + "nobody/config");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(Json::parse(missing->body)["error"], "not_found");
}

TEST_F(HttpFlow, SubmitAdvancesAndRejectsOutOfOrder) {
  auto skipped = post_page(0, 2);
  ASSERT_TRUE(skipped);
  EXPECT_EQ(skipped->status, 409);
  EXPECT_EQ(Json::parse(skipped->body)["outcome"], "rejected");

  auto ok = post_page(0, 0);
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->status, 200);
  const auto body = Json::parse(ok->body);
  EXPECT_EQ(body["outcome"], "accepted");
  EXPECT_EQ(body["current_page"], 1);
  EXPECT_EQ(body["replayed"], false);

  auto again = post_page(0, 0);
  EXPECT_EQ(Json::parse(again->body)["replayed"], true);

  auto cli = server_->client();
  auto malformed = cli.Post(kBase + "P0/pages/1/ratings", "{not json", "application/json");
  ASSERT_TRUE(malformed);
  EXPECT_EQ(malformed->status, 400);
}

TEST_F(HttpFlow, BlockedParticipantCannotFetchOrSubmit) {
  int page = 0;
  for (; page < 10; ++page) {
    const bool check = configs_[2].pages[static_cast<std::size_t>(page)].check_slot() != nullptr;
    auto r = post_page(2, page, check ? std::optional<int>(0) : std::nullopt);
    ASSERT_TRUE(r);
    if (check) {
      EXPECT_EQ(Json::parse(r->body)["outcome"], "check_failed");
      EXPECT_EQ(Json::parse(r->body)["status"], "blocked");
      break;
    }
  }
  auto cli = server_->client();
  auto fetch = cli.Get(kBase + "P2/config");
  EXPECT_EQ(fetch->status, 403);
  auto next = post_page(2, page + 1);
  EXPECT_EQ(next->status, 403);
  EXPECT_EQ(Json::parse(next->body)["error"], "blocked");
}

TEST_F(HttpFlow, ExportMatchesAcceptedSubmissions) {
  auto cli = server_->client();
  auto empty = cli.Get("/api/studies/study/export?format=csv");
  ASSERT_TRUE(empty);
  EXPECT_EQ(empty->body, std::string(kExportHeader) + "\n");

  for (int page = 0; page < 10; ++page) ASSERT_EQ(post_page(0, page)->status, 200);
  for (int page = 0; page < 3; ++page) ASSERT_EQ(post_page(1, page)->status, 200);
  auto csv = cli.Get("/api/studies/study/export?format=csv");
  ASSERT_TRUE(csv);
  EXPECT_EQ(csv->status, 200);
  const auto rows = parse_ratings_csv(csv->body);
  EXPECT_EQ(rows.size(), 13u * 8);
  EXPECT_EQ(std::count_if(rows.begin(), rows.end(), [](const RatingRecord& r) { return r.is_attention_check; }),
            3 + std::count_if(configs_[1].pages.begin(), configs_[1].pages.begin() + 3,
                              [](const Page& p) { return p.check_slot() != nullptr; }));

  auto json = cli.Get("/api/studies/study/export?format=json");
  EXPECT_EQ(Json::parse(json->body).size(), 104u);
  EXPECT_EQ(cli.Get("/api/studies/nope/export")->status, 404);
  EXPECT_EQ(cli.Get("/api/studies/study/export?format=xml")->status, 400);
}

TEST_F(HttpFlow, EventsAndSurvey) {
  auto cli = server_->client();
  const Json events{{"events",
                     {{{"participant_id", "P0"}, {"page_index", 0}, {"event_kind", "playback_started"},
                       {"target_element", "slot-3"}, {"timestamp_ms", 100}},
                      {{"participant_id", "P0"}, {"page_index", 0}, {"event_kind", "playback_stopped"},
                       {"target_element", "slot-3"}, {"timestamp_ms", 4300}}}}};
  auto r = cli.Post(kBase + "P0/events", events.dump(), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(Json::parse(r->body)["accepted"], 2);
  EXPECT_EQ(Json::parse(cli.Post(kBase + "P0/events", events.dump(), "application/json")->body)["accepted"], 0);
  EXPECT_EQ(watch_times(service_.events("study", "P0")).at({0, 3}), 4200);

  const std::string survey = Json{{"answers", {{"age", 29}, {"comments", "ok"}}}}.dump();
  EXPECT_EQ(cli.Post(kBase + "P0/survey", survey, "application/json")->status, 409);
  for (int page = 0; page < 10; ++page) ASSERT_EQ(post_page(0, page)->status, 200);
  auto stored = cli.Post(kBase + "P0/survey", survey, "application/json");
  EXPECT_EQ(stored->status, 200);
  EXPECT_EQ(Json::parse(stored->body)["version"], 1);

  auto bad = cli.Post(kBase + "P0/survey", Json{{"answers", {{"favourite_colour", "red"}}}}.dump(), "application/json");
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(Json::parse(bad->body)["detail"], "favourite_colour");
}

}  // namespace
}  // namespace hemvip
