#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

#include "oracle.hpp"
#include "provisim/digest.hpp"
#include "provisim/trial/csv.hpp"
#include "provisim/trial/service.hpp"
#include "synthetic_faces.hpp"

using namespace provisim;
using namespace provisim::trial;
namespace fs = std::filesystem;
using std::chrono::milliseconds;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected provisim::Error");
  return ErrorCode::kIo;
}

// In-memory manifest: `persons` people alternating gender, one photo per emotion.
TrialPlan memory_plan(int persons, int phases = 2) {
  TrialPlan plan;
  plan.id = "p-test";
  for (int p = 0; p < phases; ++p) plan.phases.push_back({"phase" + std::to_string(p + 1), "baseline"});
  for (int person = 0; person < persons; ++person) {
    for (Emotion e : kEmotions) {
      Stimulus s;
      s.person = "p" + std::to_string(person);
      s.gender = person % 2 ? "male" : "female";
      s.emotion = e;
      s.id = s.person + "_" + std::string(to_string(e));
      s.image = s.id + ".png";
      plan.stimuli.push_back(s);
    }
  }
  return plan;
}

TimePoint t0() { return TimePoint(milliseconds(1'700'000'000'000)); }

TrialSession make_session(const TrialPlan& plan, std::uint64_t seed) {
  return TrialSession("s000001", "alice", plan.id, seed, {"phase1", "phase2"}, plan.time_limit_ms(),
                      generate_screens(plan, seed));
}

}  // namespace

TEST_CASE("names parse back") {
  for (QuestionType t : kQuestionTypes) CHECK(parse_question_type(to_string(t)) == t);
  for (Emotion e : kEmotions) CHECK(parse_emotion(to_string(e)) == e);
  CHECK_FALSE(parse_emotion("bored").has_value());
  CHECK(question_text(QuestionType::kEmotion, Emotion::kHappy) == "Which face looks happy?");
  CHECK(to_iso8601(t0()) == "2023-11-14T22:13:20.000Z");
  CHECK(parse_iso8601(to_iso8601(t0() + milliseconds(7))) == t0() + milliseconds(7));
  CHECK_THROWS_AS(parse_iso8601("yesterday"), Error);
}

TEST_CASE("plan validation") {
  CHECK_NOTHROW(validate(memory_plan(6)));
  std::vector<std::function<void(TrialPlan&)>> breakers = {
      [](TrialPlan& p) { p.phases.clear(); },
      [](TrialPlan& p) { p.phases[1].name = p.phases[0].name; },
      [](TrialPlan& p) { p.phases[0].name.clear(); },
      [](TrialPlan& p) { p.phases[0].preset = "nope"; },
      [](TrialPlan& p) { p.question_types.clear(); },
      [](TrialPlan& p) { p.question_types.push_back(QuestionType::kGender); },
      [](TrialPlan& p) { p.repetitions_per_type = 0; },
      [](TrialPlan& p) { p.repetitions_per_type = 12; },
      [](TrialPlan& p) { p.time_limit_s = 0; },
      [](TrialPlan& p) { p.stimuli[1].id = p.stimuli[0].id; },
      [](TrialPlan& p) { p.stimuli[0].gender.clear(); },
  };
  for (std::size_t i = 0; i < breakers.size(); ++i) {
    CAPTURE(i);
    TrialPlan p = memory_plan(6);
    breakers[i](p);
    CHECK(code_of([&] { validate(p); }) == ErrorCode::kInvalidConfig);
  }
  // 12 repetitions are fine without the emotion task
  TrialPlan p = memory_plan(6);
  p.question_types = {QuestionType::kGender};
  p.repetitions_per_type = 12;
  CHECK_NOTHROW(validate(p));
}

TEST_CASE("plan JSON round trip") {
  TrialPlan p = memory_plan(3);
  p.rendered[{0, "p0_happy"}] = std::string(64, 'a');
  const TrialPlan back = plan_from_json(plan_to_json(p));
  CHECK(back.id == p.id);
  CHECK(back.phases == p.phases);
  CHECK(back.stimuli == p.stimuli);
  CHECK(back.rendered == p.rendered);
  CHECK(code_of([] { parse_plan_request("{\"phases\": 3}", "."); }) == ErrorCode::kInvalidConfig);
  const TrialPlan req = parse_plan_request(
      R"({"phases":[{"name":"a","preset":"baseline"}],"base_dir":"faces",
          "stimuli":[{"id":"x","image":"x.png","person":"p","gender":"f","emotion":"sad"}]})",
      "/data");
  CHECK(req.stimuli[0].image == fs::path("/data/faces/x.png"));
  CHECK(req.stimuli[0].landmarks.empty());
  CHECK(req.repetitions_per_type == 24);
}

TEST_CASE("screen generation follows the protocol") {
  const TrialPlan plan = memory_plan(6);
  const std::vector<Screen> screens = generate_screens(plan, 42);
  REQUIRE(screens.size() == 144);
  for (std::size_t phase = 0; phase < 2; ++phase) {
    std::map<QuestionType, int> per_task;
    std::map<Emotion, int> per_emotion;
    for (std::size_t i = phase * 72; i < (phase + 1) * 72; ++i) {
      const Screen& s = screens[i];
      CHECK(s.phase == phase);
      ++per_task[s.task];
      CHECK(s.target_emotion.has_value() == (s.task == QuestionType::kEmotion));
      if (s.target_emotion) ++per_emotion[*s.target_emotion];
      CHECK(s.correct_index >= 0);
      CHECK(s.correct_index < kChoicesPerScreen);
      CHECK(std::set<std::string>(s.stimuli.begin(), s.stimuli.end()).size() == 4);
      // the stored answer is the one a perfect observer would give
      CHECK(testing::oracle_choice(plan, s.task, s.target_emotion, s.stimuli) == s.correct_index);
    }
    for (QuestionType t : kQuestionTypes) CHECK(per_task[t] == 24);
    for (Emotion e : kEmotions) CHECK(per_emotion[e] == 3);
  }
  CHECK(generate_screens(plan, 42) == screens);
  CHECK_FALSE(generate_screens(plan, 43) == screens);
  // question types are interleaved, not blocked
  int switches = 0;
  for (std::size_t i = 1; i < 72; ++i) switches += screens[i].task != screens[i - 1].task;
  CHECK(switches > 20);
  // correct slot is spread over all four positions
  std::set<int> slots;
  for (const Screen& s : screens) slots.insert(s.correct_index);
  CHECK(slots.size() == 4);
}

TEST_CASE("insufficient manifests are reported") {
  CHECK(code_of([] { generate_screens(memory_plan(4), 1); }) == ErrorCode::kInsufficientStimuli);  // 2 per gender
  TrialPlan one_gender = memory_plan(6);
  for (Stimulus& s : one_gender.stimuli) s.gender = "female";
  CHECK(code_of([&] { generate_screens(one_gender, 1); }) == ErrorCode::kInsufficientStimuli);
  TrialPlan no_fear = memory_plan(6);
  std::erase_if(no_fear.stimuli, [](const Stimulus& s) { return s.emotion == Emotion::kFearful; });
  CHECK(code_of([&] { generate_screens(no_fear, 1); }) == ErrorCode::kInsufficientStimuli);
  no_fear.question_types = {QuestionType::kOddOneOut, QuestionType::kGender};
  CHECK(generate_screens(no_fear, 1).size() == 96);
}

TEST_CASE("uniform_below is in range, unbiased and stable") {
  std::mt19937_64 rng(7);
  CHECK_THROWS_AS(uniform_below(rng, 0), Error);
  std::array<int, 3> counts{};
  const int draws = 30000;
  for (int i = 0; i < draws; ++i) {
    const auto v = uniform_below(rng, 3);
    REQUIRE(v < 3);
    ++counts[v];
  }
  double chi2 = 0;
  for (int c : counts) chi2 += (c - draws / 3.0) * (c - draws / 3.0) / (draws / 3.0);
  CHECK(chi2 < 13.8);  // p = 0.001 with 2 dof
  // independent of the standard library's distributions: equals the first raw draw mod n
  std::mt19937_64 a(1), b(1);
  CHECK(uniform_below(a, 10) == b() % 10);
  std::vector<int> items{0, 1, 2, 3, 4, 5, 6, 7};
  seeded_shuffle(items, rng);
  CHECK(std::set<int>(items.begin(), items.end()).size() == 8);
}

TEST_CASE("session state machine") {
  const TrialPlan plan = memory_plan(6);
  TrialSession s = make_session(plan, 3);
  CHECK(s.state() == SessionState::kCreated);
  CHECK(code_of([&] { s.respond(0, 1, false, 100, t0()); }) == ErrorCode::kNotPresented);
  CHECK(s.present(t0()) == 0);
  CHECK(s.state() == SessionState::kRunning);
  CHECK(code_of([&] { s.present(t0()); }) == ErrorCode::kPreviousUnanswered);
  CHECK(code_of([&] { s.respond(1, 1, false, 100, t0()); }) == ErrorCode::kOutOfOrder);
  CHECK(code_of([&] { s.respond(0, 4, false, 100, t0()); }) == ErrorCode::kInvalidResponse);
  CHECK(code_of([&] { s.respond(0, -1, false, 100, t0()); }) == ErrorCode::kInvalidResponse);
  CHECK(code_of([&] { s.respond(0, 1, true, 100, t0()); }) == ErrorCode::kInvalidResponse);
  CHECK(code_of([&] { s.respond(0, std::nullopt, false, 100, t0()); }) == ErrorCode::kInvalidResponse);
  CHECK(code_of([&] { s.respond(0, 1, false, -3, t0()); }) == ErrorCode::kInvalidResponse);
  CHECK(code_of([&] { s.respond(0, 1, false, 20501, t0()); }) == ErrorCode::kElapsedExceedsLimit);
  const TrialSession before = s;
  CHECK(s == before);  // failed calls leave no trace

  s.respond(0, s.screens()[0].correct_index, false, 640, t0() + milliseconds(650));
  CHECK(s.records()[0].correct);
  CHECK(s.records()[0].server_elapsed_ms() == 650.0);
  CHECK_FALSE(s.records()[0].timing_suspect());
  CHECK(code_of([&] { s.respond(0, 1, false, 100, t0()); }) == ErrorCode::kDuplicateSubmission);

  s.present(t0() + milliseconds(1000));
  s.respond(1, std::nullopt, true, 20000, t0() + milliseconds(21000));
  CHECK_FALSE(s.records()[1].correct);
  CHECK(s.records()[1].timeout);

  // client claims far more time than the server saw: flagged, not rejected
  s.present(t0() + milliseconds(30000));
  s.respond(2, 0, false, 5000, t0() + milliseconds(30100));
  CHECK(s.records()[2].timing_suspect());

  for (std::size_t i = 3; i < s.screens().size(); ++i) {
    s.present(t0());
    s.respond(i, 0, false, 10, t0());
  }
  CHECK(s.finished());
  CHECK(code_of([&] { s.present(t0()); }) == ErrorCode::kSessionFinished);
  CHECK(code_of([&] { s.respond(s.screens().size(), 0, false, 10, t0()); }) == ErrorCode::kOutOfOrder);
}

TEST_CASE("summary tallies match a direct count") {
  const TrialPlan plan = memory_plan(6);
  TrialSession s = make_session(plan, 11);
  CHECK(code_of([&] { summarize(s); }) == ErrorCode::kSessionUnfinished);
  // answer right on even screens, wrong on odd ones, time out on every tenth
  for (std::size_t i = 0; i < s.screens().size(); ++i) {
    s.present(t0());
    const int right = s.screens()[i].correct_index;
    if (i % 10 == 9) {
      s.respond(i, std::nullopt, true, 20000, t0());
    } else {
      s.respond(i, i % 2 ? (right + 1) % 4 : right, false, double(100 + i), t0());
    }
  }
  const SessionSummary sum = summarize(s);
  REQUIRE(sum.phases.size() == 2);
  for (std::size_t phase = 0; phase < 2; ++phase) {
    std::map<QuestionType, std::array<double, 4>> expect;  // presented, correct, answered, rt
    for (std::size_t i = phase * 72; i < (phase + 1) * 72; ++i) {
      auto& e = expect[s.screens()[i].task];
      e[0] += 1;
      if (i % 10 == 9) continue;
      e[2] += 1;
      e[3] += 100 + i;
      if (i % 2 == 0) e[1] += 1;
    }
    for (QuestionType t : kQuestionTypes) {
      const Tally& tally = sum.phases[phase].tasks.at(t);
      CHECK(tally.presented == expect[t][0]);
      CHECK(tally.correct == expect[t][1]);
      CHECK(tally.answered == expect[t][2]);
      CHECK(tally.mean_rt_ms() == doctest::Approx(expect[t][3] / expect[t][2]));
    }
    CHECK(sum.phases[phase].overall.presented == 72);
    int emotion_total = 0;
    for (const auto& [e, t] : sum.phases[phase].emotions) emotion_total += t.presented;
    CHECK(emotion_total == 24);
  }
  CHECK(std::isnan(Tally{}.mean_rt_ms()));
}

TEST_CASE("group summary averages sessions and pairs phases by participant") {
  const TrialPlan plan = memory_plan(6);
  std::vector<TrialSession> sessions;
  // participant 0 always right; participant 1 right only in phase 2
  for (int who = 0; who < 2; ++who) {
    TrialSession s("s00000" + std::to_string(who + 1), "u" + std::to_string(who), plan.id, 5,
                   {"phase1", "phase2"}, 20000, generate_screens(plan, 5));
    for (std::size_t i = 0; i < s.screens().size(); ++i) {
      s.present(t0());
      const int right = s.screens()[i].correct_index;
      const bool good = who == 0 || s.screens()[i].phase == 1;
      s.respond(i, good ? right : (right + 1) % 4, false, good ? 500.0 : 900.0, t0());
    }
    sessions.push_back(std::move(s));
  }
  const GroupSummary g = summarize(sessions);
  CHECK(g.sessions == 2);
  const MeanStat& m1 = g.tasks.at("phase1").at(QuestionType::kGender);
  CHECK(m1.n == 2);
  CHECK(m1.accuracy == doctest::Approx(0.5));
  CHECK(m1.mean_rt_ms == doctest::Approx(700));
  CHECK(g.tasks.at("phase2").at(QuestionType::kGender).accuracy == doctest::Approx(1.0));
  const PairedDifference& d = g.paired.at(QuestionType::kEmotion);
  CHECK(d.participants == 2);
  CHECK(d.mean_accuracy_diff == doctest::Approx(0.5));
  CHECK(d.accuracy_up == 1);
  CHECK(d.accuracy_same == 1);
  CHECK(d.mean_rt_diff_ms == doctest::Approx(-200));
  CHECK(d.rt_faster == 1);
}

TEST_CASE("store replays logs and tolerates only a torn tail") {
  const fs::path dir = testing::scratch_dir("store");
  const TrialStore store(dir);
  const TrialPlan plan = memory_plan(6);
  TrialSession s = make_session(plan, 8);
  store.append_created(s, t0());
  for (std::size_t i = 0; i < 5; ++i) {
    s.present(t0() + milliseconds(i * 1000));
    store.append_presented(s.id(), i, t0() + milliseconds(i * 1000));
    const std::optional<int> choice = i == 2 ? std::nullopt : std::optional<int>(int(i % 4));
    s.respond(i, choice, i == 2, 300.0 + i, t0() + milliseconds(i * 1000 + 400));
    store.append_response(s.id(), i, choice, i == 2, 300.0 + i, t0() + milliseconds(i * 1000 + 400));
  }
  s.present(t0() + milliseconds(9000));
  store.append_presented(s.id(), 5, t0() + milliseconds(9000));

  const fs::path log = store.session_log(s.id());
  CHECK(TrialStore::replay(log) == s);
  { std::ofstream(log, std::ios::app) << R"({"event":"response","ind)"; }
  CHECK(TrialStore::replay(log) == s);

  // damage in the middle is not silently skipped
  std::ifstream in(log);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  lines[3] = "{garbage";
  const fs::path broken = dir / "broken.log";
  {
    std::ofstream out(broken);
    for (const auto& l : lines) out << l << "\n";
  }
  CHECK(code_of([&] { TrialStore::replay(broken); }) == ErrorCode::kCorruptData);
  std::ofstream(dir / "empty.log") << "";
  CHECK(code_of([&] { TrialStore::replay(dir / "empty.log"); }) == ErrorCode::kCorruptData);
  fs::remove_all(dir);
}

TEST_CASE("CSV helpers") {
  const auto rows = parse_csv("a,\"b,c\",\"say \"\"hi\"\"\"\r\n1,,3\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"a", "b,c", "say \"hi\""});
  CHECK(rows[1] == std::vector<std::string>{"1", "", "3"});

  const std::string header(kSummaryHeader);
  CHECK(validate_summary_csv(header + "\n") == 0);
  CHECK(validate_summary_csv(header + "\nreference,,,,phase1,emotion,happy,24,18,0.75,1200\n") == 1);
  for (const char* bad : {
           "reference,,,,phase1,emotion,happy,24,18,1.75,1200",
           "reference,,,,phase1,emotion,happy,24,30,0.75,1200",
           "reference,,,,phase1,gender,happy,24,18,0.75,1200",
           "reference,,,,phase1,hearing,,24,18,0.75,1200",
           "reference,,,,,all,,24,18,0.75,1200",
           "lab,,,,phase1,all,,24,18,0.75,1200",
           "reference,,,,phase1,all,,24,18,0.75",
           "reference,,,,phase1,all,,-1,0,0.75,",
       }) {
    CAPTURE(bad);
    CHECK(code_of([&] { validate_summary_csv(header + "\n" + bad + "\n"); }) == ErrorCode::kCorruptData);
  }
  CHECK(code_of([] { validate_summary_csv("scope,plan\n"); }) == ErrorCode::kCorruptData);
}

TEST_CASE("service end to end: render, run, restart, export") {
  const fs::path faces = testing::scratch_dir("faces");
  const fs::path data = testing::scratch_dir("data");
  const auto stimuli = testing::write_face_corpus(faces, 6, 48);
  auto clock = std::make_shared<ManualClock>(t0());
  std::string plan_id, session_id;
  {
    TrialService svc(data, clock);
    const std::string request =
        testing::plan_request_json(stimuli, {{"phase1", "paper-trial-phase1"}, {"phase2", "paper-trial-phase2"}}, faces);
    const TrialPlan plan = svc.create_plan_from_json(request, "/");
    plan_id = plan.id;
    CHECK(plan.id.rfind("p-", 0) == 0);
    CHECK(plan.rendered.size() == 2 * stimuli.size());
    for (const auto& [key, hash] : plan.rendered) {
      const auto file = svc.stimulus_file(hash);
      REQUIRE(file.has_value());
      CHECK(sha256_file_hex(*file) == hash);
    }
    CHECK(svc.create_plan_from_json(request, "/").id == plan_id);  // idempotent
    CHECK_FALSE(svc.stimulus_file("../etc/passwd").has_value());
    CHECK(code_of([&] { svc.create_session("p-missing", "bob"); }) == ErrorCode::kUnknownPlan);
    CHECK(code_of([&] { svc.create_session(plan_id, ""); }) == ErrorCode::kInvalidArgument);

    const TrialSession s = svc.create_session(plan_id, "bob", 99);
    session_id = s.id();
    CHECK(session_id == "s000001");
    for (std::size_t i = 0; i < 10; ++i) {
      const auto d = svc.next_screen(session_id);
      REQUIRE(d.has_value());
      CHECK(d->index == i);
      CHECK(d->total == 144);
      for (const std::string& url : d->image_urls) CHECK(url.rfind("/stimuli/", 0) == 0);
      clock->advance(milliseconds(700));
      svc.submit_response(session_id, i, 0, false, 690);
    }
    const auto shown = svc.next_screen(session_id);
    CHECK(code_of([&] { svc.next_screen(session_id); }) == ErrorCode::kPreviousUnanswered);
    clock->advance(milliseconds(5));
    CHECK(svc.next_screen(session_id, true)->presented_at == shown->presented_at);
    CHECK(parse_csv(svc.export_csv()).size() == 1);  // unfinished sessions are left out
  }
  {
    // a fresh process over the same data directory picks up where it stopped
    TrialService svc(data, clock);
    REQUIRE(svc.plan(plan_id).has_value());
    const TrialSession s = svc.session(session_id);
    CHECK(s.cursor() == 10);
    CHECK(s.records()[10].presented_at.has_value());
    CHECK(svc.next_screen(session_id, true)->index == 10);
    const TrialPlan plan = *svc.plan(plan_id);
    for (std::size_t i = 10; i < 144; ++i) {
      if (i > 10) svc.next_screen(session_id);
      const Screen& screen = s.screens()[i];
      svc.submit_response(session_id, i, testing::oracle_choice(plan, screen.task, screen.target_emotion, screen.stimuli),
                          false, 400);
    }
    CHECK_FALSE(svc.next_screen(session_id).has_value());
    CHECK(svc.create_session(plan_id, "carol", 1).id() == "s000002");
    const std::string results = svc.export_csv();
    const auto rows = parse_csv(results);
    REQUIRE(rows.size() == 145);
    CHECK(rows[0].size() == 18);
    const std::string summary = svc.export_summary_csv();
    CHECK(validate_summary_csv(summary) > 0);
    const GroupSummary g = svc.group_summary(plan_id);
    CHECK(g.sessions == 1);
    CHECK(g.tasks.at("phase2").at(QuestionType::kEmotion).accuracy == 1.0);
  }
  fs::remove_all(faces);
  fs::remove_all(data);
}
