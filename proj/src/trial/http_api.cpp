#include "provisim/trial/http_api.hpp"

#include <fstream>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <sstream>

namespace provisim::trial {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownPlan:
    case ErrorCode::kUnknownSession:
      return 404;
    case ErrorCode::kSessionFinished:
    case ErrorCode::kSessionUnfinished:
    case ErrorCode::kPreviousUnanswered:
    case ErrorCode::kNotPresented:
    case ErrorCode::kOutOfOrder:
    case ErrorCode::kDuplicateSubmission:
      return 409;
    case ErrorCode::kIo:
    case ErrorCode::kUnwritable:
      return 500;
    default:
      return 422;
  }
}

namespace {

void send_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(2), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  ordered_json body;
  body["error"] = code;
  body["message"] = message;
  send_json(res, status, body);
}

// Runs a handler, mapping exceptions to JSON error bodies.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "bad_request", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body);
  if (!body.is_object()) throw Error(ErrorCode::kInvalidArgument, "request body must be a JSON object");
  return body;
}

ordered_json descriptor_json(const ScreenDescriptor& d) {
  ordered_json j;
  j["finished"] = false;
  j["session"] = d.session_id;
  j["screen_index"] = d.index;
  j["total"] = d.total;
  j["phase"] = d.phase;
  j["task"] = std::string(to_string(d.task));
  j["target_emotion"] =
      d.target_emotion ? ordered_json(std::string(to_string(*d.target_emotion))) : ordered_json(nullptr);
  j["question"] = d.question;
  j["images"] = d.image_urls;
  j["time_limit_ms"] = d.time_limit_ms;
  j["presented_at"] = to_iso8601(d.presented_at);
  return j;
}

ordered_json progress_json(const TrialSession& s) {
  ordered_json j;
  j["session"] = s.id();
  j["participant"] = s.participant();
  j["plan_id"] = s.plan_id();
  j["state"] = std::string(to_string(s.state()));
  j["answered"] = s.cursor();
  j["total"] = s.screens().size();
  return j;
}

}  // namespace

void register_routes(httplib::Server& server, TrialService& service,
                     std::filesystem::path plan_base_dir) {
  TrialService* svc = &service;

  server.Post("/plans", guarded([svc, plan_base_dir](const httplib::Request& req, httplib::Response& res) {
    const TrialPlan plan = svc->create_plan_from_json(req.body, plan_base_dir);
    send_json(res, 201, ordered_json::parse(plan_to_json(plan)));
  }));

  server.Get("/plans/:id", guarded([svc](const httplib::Request& req, httplib::Response& res) {
    const auto plan = svc->plan(req.path_params.at("id"));
    if (!plan) throw Error(ErrorCode::kUnknownPlan, "unknown plan \"" + req.path_params.at("id") + "\"");
    send_json(res, 200, ordered_json::parse(plan_to_json(*plan)));
  }));

  server.Get("/plans/:id/summary", guarded([svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, ordered_json::parse(summary_to_json(svc->group_summary(req.path_params.at("id")))));
  }));

  server.Post("/sessions", guarded([svc](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    std::optional<std::uint64_t> seed;
    if (body.contains("seed") && !body["seed"].is_null()) seed = body["seed"].get<std::uint64_t>();
    const TrialSession s = svc->create_session(body.at("plan_id").get<std::string>(),
                                               body.at("participant").get<std::string>(), seed);
    send_json(res, 201, progress_json(s));
  }));

  server.Get("/sessions/:id", guarded([svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, progress_json(svc->session(req.path_params.at("id"))));
  }));

  server.Get("/sessions/:id/next", guarded([svc](const httplib::Request& req, httplib::Response& res) {
    const bool resume = req.has_param("resume") && req.get_param_value("resume") == "true";
    const auto d = svc->next_screen(req.path_params.at("id"), resume);
    if (!d) {
      ordered_json j;
      j["finished"] = true;
      j["session"] = req.path_params.at("id");
      send_json(res, 200, j);
      return;
    }
    send_json(res, 200, descriptor_json(*d));
  }));

  server.Post("/sessions/:id/responses", guarded([svc](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    std::optional<int> choice;
    if (body.contains("choice") && !body["choice"].is_null()) choice = body["choice"].get<int>();
    const ResponseAck ack = svc->submit_response(
        req.path_params.at("id"), body.at("screen_index").get<std::size_t>(), choice,
        body.value("timeout", false), body.at("client_elapsed_ms").get<double>());
    ordered_json j;
    j["screen_index"] = ack.index;
    j["finished"] = ack.finished;
    send_json(res, 200, j);
  }));

  server.Get("/sessions/:id/summary", guarded([svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, ordered_json::parse(summary_to_json(svc->summary(req.path_params.at("id")))));
  }));

  server.Get("/export.csv", guarded([svc](const httplib::Request&, httplib::Response& res) {
    res.set_content(svc->export_csv(), "text/csv");
  }));

  server.Get("/export_summary.csv", guarded([svc](const httplib::Request&, httplib::Response& res) {
    res.set_content(svc->export_summary_csv(), "text/csv");
  }));

  server.Get(R"(/stimuli/([0-9a-f]{64})\.png)",
             guarded([svc](const httplib::Request& req, httplib::Response& res) {
               const auto path = svc->stimulus_file(req.matches[1]);
               if (!path) {
                 send_error(res, 404, "not_found", "no such stimulus");
                 return;
               }
               std::ifstream in(*path, std::ios::binary);
               std::ostringstream buffer;
               buffer << in.rdbuf();
               res.set_content(buffer.str(), "image/png");
             }));
}

}  // namespace provisim::trial
