#include <doctest.h>

// Eigen-based headers go before httplib: <resolv.h> defines a `_res` macro.
#include "oracle.hpp"
#include "provisim/digest.hpp"
#include "provisim/trial/csv.hpp"
#include "provisim/trial/http_api.hpp"
#include "synthetic_faces.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>
#include <thread>

using namespace provisim;
using namespace provisim::trial;
namespace fs = std::filesystem;
using nlohmann::json;
using std::chrono::milliseconds;

namespace {

// Service plus a live server on a loopback port, torn down in order.
struct LiveServer {
  TrialService service;
  httplib::Server server;
  std::thread thread;
  int port = 0;

  LiveServer(const fs::path& data, std::shared_ptr<Clock> clock, const fs::path& plan_base)
      : service(data, std::move(clock)) {
    register_routes(server, service, plan_base);
    port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~LiveServer() {
    server.stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60, 0);
    return c;
  }
};

json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return json::parse(r->body);
}

httplib::Result post(httplib::Client& c, const std::string& path, const json& body) {
  return c.Post(path, body.dump(), "application/json");
}

// Participant script: sees only what the API returns. Image URLs are mapped
// back to stimuli through the plan's rendered table, as an experimenter with
// the manifest could.
struct ScriptedParticipant {
  TrialPlan plan;
  std::map<std::pair<std::string, std::string>, std::string> by_hash;  // (phase, hash) -> stimulus

  explicit ScriptedParticipant(TrialPlan p) : plan(std::move(p)) {
    for (const auto& [key, hash] : plan.rendered) by_hash[{plan.phases[key.first].name, hash}] = key.second;
  }

  int answer(const json& screen) const {
    std::array<std::string, kChoicesPerScreen> ids;
    for (int i = 0; i < kChoicesPerScreen; ++i) {
      const std::string url = screen["images"][i];
      const std::string hash = url.substr(std::string("/stimuli/").size(), 64);
      ids[i] = by_hash.at({screen["phase"], hash});
    }
    std::optional<Emotion> target;
    if (!screen["target_emotion"].is_null()) target = parse_emotion(screen["target_emotion"].get<std::string>());
    const auto choice = testing::oracle_choice(plan, *parse_question_type(screen["task"].get<std::string>()),
                                               target, ids);
    REQUIRE(choice.has_value());
    return *choice;
  }
};

double scripted_delay_ms(std::size_t i) { return 250.0 + static_cast<double>((i * 137) % 1900); }

}  // namespace

TEST_CASE("status mapping") {
  CHECK(http_status(ErrorCode::kUnknownSession) == 404);
  CHECK(http_status(ErrorCode::kUnknownPlan) == 404);
  CHECK(http_status(ErrorCode::kPreviousUnanswered) == 409);
  CHECK(http_status(ErrorCode::kDuplicateSubmission) == 409);
  CHECK(http_status(ErrorCode::kInvalidResponse) == 422);
  CHECK(http_status(ErrorCode::kInsufficientStimuli) == 422);
  CHECK(http_status(ErrorCode::kIo) == 500);
}

TEST_CASE("scripted participant runs a full session over HTTP") {
  const fs::path faces = testing::scratch_dir("http-faces");
  const fs::path data = testing::scratch_dir("http-data");
  const auto stimuli = testing::write_face_corpus(faces, 6, 40);
  auto clock = std::make_shared<ManualClock>(TimePoint(milliseconds(1'750'000'000'000)));
  std::string plan_id, session_id;

  {
    LiveServer live(data, clock, faces);
    auto c = live.client();

    // plan creation, relative paths against the server's plan base
    json request = json::parse(testing::plan_request_json(
        stimuli, {{"phase1", "paper-trial-phase1"}, {"phase2", "paper-trial-phase2"}}, "."));
    auto r = post(c, "/plans", request);
    REQUIRE(r);
    REQUIRE(r->status == 201);
    const json plan_doc = json::parse(r->body);
    plan_id = plan_doc["id"];
    CHECK(post(c, "/plans", request)->status == 201);
    CHECK(body_of(post(c, "/plans", request))["id"] == plan_id);

    // rejected plans
    json bad = request;
    bad["phases"][0]["preset"] = "prima-9000";
    r = post(c, "/plans", bad);
    CHECK(r->status == 422);
    CHECK(body_of(r)["error"] == "invalid_config");
    CHECK(c.Post("/plans", "{", "application/json")->status == 422);
    json missing = request;
    missing["stimuli"][0]["image"] = "nope.png";
    CHECK(post(c, "/plans", missing)->status == 422);

    CHECK(c.Get("/plans/p-000000000000")->status == 404);
    CHECK(body_of(c.Get("/plans/" + plan_id))["stimuli"].size() == stimuli.size());

    // sessions
    CHECK(post(c, "/sessions", {{"plan_id", "p-nope"}, {"participant", "x"}})->status == 404);
    CHECK(post(c, "/sessions", {{"participant", "x"}})->status == 400);
    CHECK(c.Post("/sessions", "[1,2]", "application/json")->status == 422);
    r = post(c, "/sessions", {{"plan_id", plan_id}, {"participant", "p-01"}, {"seed", 2024}});
    REQUIRE(r->status == 201);
    session_id = body_of(r)["session"];
    CHECK(body_of(c.Get("/sessions/" + session_id))["state"] == "created");
    CHECK(c.Get("/sessions/s999999")->status == 404);
    CHECK(c.Get("/sessions/" + session_id + "/summary")->status == 409);

    const ScriptedParticipant participant(plan_from_json(c.Get("/plans/" + plan_id)->body));
    // answering before anything was shown
    r = post(c, "/sessions/" + session_id + "/responses",
             {{"screen_index", 0}, {"choice", 1}, {"timeout", false}, {"client_elapsed_ms", 10}});
    CHECK(r->status == 409);
    CHECK(body_of(r)["error"] == "not_presented");

    // first half of the session
    for (std::size_t i = 0; i < 60; ++i) {
      const json screen = body_of(c.Get("/sessions/" + session_id + "/next"));
      REQUIRE(screen["finished"] == false);
      CHECK(screen["screen_index"] == i);
      CHECK(screen["total"] == 144);
      CHECK(screen["images"].size() == 4);
      if (i == 0) {
        // stimuli are served and match their address
        const std::string url = screen["images"][0];
        auto img = c.Get(url);
        REQUIRE(img->status == 200);
        CHECK(img->get_header_value("Content-Type") == "image/png");
        CHECK(url.find(sha256_hex(img->body)) != std::string::npos);
        CHECK(c.Get("/stimuli/" + std::string(64, '0') + ".png")->status == 404);
        CHECK(c.Get("/stimuli/..%2F..%2Fetc%2Fpasswd")->status == 404);
        // a second next without answering is a conflict; resume re-serves it
        r = c.Get("/sessions/" + session_id + "/next");
        CHECK(r->status == 409);
        CHECK(body_of(r)["error"] == "previous_unanswered");
        const json again = body_of(c.Get("/sessions/" + session_id + "/next?resume=true"));
        CHECK(again == screen);
        // malformed answers
        CHECK(post(c, "/sessions/" + session_id + "/responses",
                   {{"screen_index", 0}, {"choice", 7}, {"timeout", false}, {"client_elapsed_ms", 10}})
                  ->status == 422);
        CHECK(post(c, "/sessions/" + session_id + "/responses",
                   {{"screen_index", 3}, {"choice", 1}, {"timeout", false}, {"client_elapsed_ms", 10}})
                  ->status == 409);
        CHECK(post(c, "/sessions/" + session_id + "/responses",
                   {{"screen_index", 0}, {"choice", 1}, {"timeout", false}, {"client_elapsed_ms", 99999}})
                  ->status == 422);
      }
      const double delay = scripted_delay_ms(i);
      clock->advance(milliseconds(static_cast<long>(delay)));
      r = post(c, "/sessions/" + session_id + "/responses",
               {{"screen_index", i}, {"choice", participant.answer(screen)}, {"timeout", false},
                {"client_elapsed_ms", delay}});
      REQUIRE(r->status == 200);
      CHECK(body_of(r)["finished"] == false);
    }
    r = post(c, "/sessions/" + session_id + "/responses",
             {{"screen_index", 59}, {"choice", 0}, {"timeout", false}, {"client_elapsed_ms", 10}});
    CHECK(body_of(r)["error"] == "duplicate_submission");
    // leave screen 60 presented when the server goes away
    CHECK(body_of(c.Get("/sessions/" + session_id + "/next"))["screen_index"] == 60);
    CHECK(parse_csv(c.Get("/export.csv")->body).size() == 1);  // nothing finished yet
  }

  // restart over the same data directory
  {
    LiveServer live(data, clock, faces);
    auto c = live.client();
    const ScriptedParticipant participant(plan_from_json(c.Get("/plans/" + plan_id)->body));
    CHECK(body_of(c.Get("/sessions/" + session_id))["answered"] == 60);
    CHECK(c.Get("/sessions/" + session_id + "/next")->status == 409);
    for (std::size_t i = 60; i < 144; ++i) {
      const json screen = body_of(c.Get("/sessions/" + session_id + "/next?resume=true"));
      REQUIRE(screen["screen_index"] == i);
      const double delay = scripted_delay_ms(i);
      clock->advance(milliseconds(static_cast<long>(delay)));
      auto r = post(c, "/sessions/" + session_id + "/responses",
                    {{"screen_index", i}, {"choice", participant.answer(screen)}, {"timeout", false},
                     {"client_elapsed_ms", delay}});
      REQUIRE(r->status == 200);
      CHECK(body_of(r)["finished"] == (i == 143));
    }
    const json done = body_of(c.Get("/sessions/" + session_id + "/next"));
    CHECK(done["finished"] == true);
    auto r = post(c, "/sessions/" + session_id + "/responses",
                  {{"screen_index", 144}, {"choice", 0}, {"timeout", false}, {"client_elapsed_ms", 10}});
    CHECK(r->status == 409);

    const json summary = body_of(c.Get("/sessions/" + session_id + "/summary"));
    CHECK(summary["phases"].size() == 2);
    CHECK(c.Get("/plans/" + plan_id + "/summary")->status == 200);

    // exported rows: perfect accuracy and server-side RT equal to the script
    auto csv = c.Get("/export.csv");
    REQUIRE(csv->status == 200);
    const auto rows = parse_csv(csv->body);
    REQUIRE(rows.size() == 145);
    const auto& header = rows[0];
    auto col = [&](const char* name) {
      return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    };
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(rows[i][col("is_correct")] == "1");
      CHECK(std::abs(std::stod(rows[i][col("server_elapsed_ms")]) - scripted_delay_ms(i - 1)) <= 1.0);
      CHECK(std::abs(std::stod(rows[i][col("rt_ms")]) - scripted_delay_ms(i - 1)) <= 1.0);
      CHECK(rows[i][col("timing_suspect")] == "0");
    }
    auto summary_csv = c.Get("/export_summary.csv");
    REQUIRE(summary_csv->status == 200);
    CHECK(validate_summary_csv(summary_csv->body) > 0);
  }
  fs::remove_all(faces);
  fs::remove_all(data);
}
