#include "hemvip/http_server.hpp"

#include <httplib.h>

#include "hemvip/dataset.hpp"

namespace hemvip {
namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

int status_for(ServiceError::Code code) {
  switch (code) {
    case ServiceError::Code::kNotFound:
      return 404;
    case ServiceError::Code::kBlocked:
      return 403;
    case ServiceError::Code::kInvalid:
      return 400;
    case ServiceError::Code::kPrecondition:
      return 409;
  }
  return 500;
}

std::string_view error_name(ServiceError::Code code) {
  switch (code) {
    case ServiceError::Code::kNotFound:
      return "not_found";
    case ServiceError::Code::kBlocked:
      return "blocked";
    case ServiceError::Code::kInvalid:
      return "invalid_request";
    case ServiceError::Code::kPrecondition:
      return "precondition_failed";
  }
  return "internal";
}

Json state_json(const ParticipantState& s) {
  return Json{{"status", to_string(s.status)}, {"current_page", s.current_page}, {"failed_checks", s.failed_checks}};
}

bool flag(const httplib::Request& req, const char* name) {
  return req.has_param(name) && (req.get_param_value(name) == "true" || req.get_param_value(name) == "1");
}

// Maps service and decoding errors onto JSON error responses.
template <typename F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const ServiceError& e) {
    Json err{{"error", error_name(e.code())}, {"message", e.what()}};
    if (!e.detail().empty()) err["detail"] = e.detail();
    send_json(res, status_for(e.code()), err);
  } catch (const FormatError& e) {
    send_json(res, 400, {{"error", "invalid_request"}, {"message", e.what()}});
  } catch (const Json::exception& e) {
    send_json(res, 400, {{"error", "invalid_request"}, {"message", e.what()}});
  }
}

}  // namespace

struct HttpServer::Impl {
  explicit Impl(EvalService& svc) : service(svc) {}
  EvalService& service;
  httplib::Server server;
};

HttpServer::HttpServer(EvalService& service, HttpOptions options)
    : impl_(std::make_unique<Impl>(service)) {
  auto& svc = impl_->service;
  auto& srv = impl_->server;
  const std::string participant = R"(/api/studies/([^/]+)/participants/([^/]+))";

  srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"status", "ok"}}); });

  srv.Get(participant + "/config", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      res.status = 200;
      res.set_content(svc.fetch_config(req.matches[1].str(), req.matches[2].str()), kJson);
    });
  });

  srv.Post(participant + R"(/pages/(\d+)/ratings)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = Json::parse(req.body);
      const auto& list = body.is_array() ? body : body.at("ratings");
      std::vector<SlotRating> ratings;
      for (const auto& r : list) ratings.push_back({r.at("slider_index").get<int>(), r.at("value").get<int>()});
      const auto result = svc.submit_page(req.matches[1].str(), req.matches[2].str(), std::stoi(req.matches[3].str()),
                                          ratings);
      Json out{{"outcome", to_string(result.outcome)}, {"replayed", result.replayed}};
      out.update(state_json(result.state));
      if (result.outcome == PageOutcome::kRejected) {
        out["reason"] = result.reason;
        send_json(res, 409, out);
      } else {
        send_json(res, 200, out);
      }
    });
  });

  srv.Post(participant + "/events", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = Json::parse(req.body);
      const auto& list = body.is_array() ? body : body.at("events");
      auto events = list.get<std::vector<InteractionEvent>>();
      const auto accepted = svc.record_events(req.matches[1].str(), req.matches[2].str(), std::move(events));
      send_json(res, 200, {{"accepted", accepted}});
    });
  });

  srv.Post(participant + "/survey", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = Json::parse(req.body);
      SurveyResponse response;
      response.participant_id = req.matches[2].str();
      for (const auto& [k, v] : body.at("answers").items()) response.answers[k] = v;
      const int version = svc.submit_survey(req.matches[1].str(), req.matches[2].str(), response);
      send_json(res, 200, {{"status", "stored"}, {"version", version}});
    });
  });

  srv.Get(R"(/api/studies/([^/]+)/export)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      ExportOptions opts;
      opts.include_failed_pages = flag(req, "include_failed");
      opts.drop_failed_participants = flag(req, "drop_failed_participants");
      const auto rows = svc.export_ratings(req.matches[1].str(), opts);
      const std::string format = req.has_param("format") ? req.get_param_value("format") : "csv";
      if (format == "csv") {
        res.status = 200;
        res.set_content(ratings_csv(rows), "text/csv");
      } else if (format == "json") {
        send_json(res, 200, Json(rows));
      } else {
        send_json(res, 400, {{"error", "invalid_request"}, {"message", "unsupported format '" + format + "'"}});
      }
    });
  });

  if (options.media_dir) srv.set_mount_point("/media", options.media_dir->string());
  if (options.static_dir) srv.set_mount_point("/", options.static_dir->string());
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace hemvip
