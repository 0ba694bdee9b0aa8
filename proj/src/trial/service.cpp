#include "provisim/trial/service.hpp"

#include <atomic>
#include <random>
#include <thread>

#include "provisim/digest.hpp"
#include "provisim/error.hpp"
#include "provisim/image_io.hpp"
#include "provisim/landmarks.hpp"
#include "provisim/pipeline.hpp"
#include "provisim/trial/csv.hpp"

namespace provisim::trial {

namespace fs = std::filesystem;

std::string stimulus_url(const std::string& hash) { return "/stimuli/" + hash + ".png"; }

namespace {

std::uint64_t session_number(const std::string& id) {
  if (id.size() < 2 || id[0] != 's') return 0;
  std::uint64_t n = 0;
  for (std::size_t i = 1; i < id.size(); ++i) {
    if (id[i] < '0' || id[i] > '9') return 0;
    n = n * 10 + static_cast<std::uint64_t>(id[i] - '0');
  }
  return n;
}

std::string format_session_id(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(n));
  return buf;
}

bool is_hex_hash(const std::string& s) {
  if (s.size() != 64) return false;
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

}  // namespace

TrialService::TrialService(fs::path data_dir, std::shared_ptr<Clock> clock)
    : store_(std::move(data_dir)), clock_(std::move(clock)) {
  for (TrialPlan& p : store_.load_plans()) plans_.emplace(p.id, std::move(p));
  for (TrialSession& s : store_.load_sessions()) {
    next_session_ = std::max(next_session_, session_number(s.id()) + 1);
    const std::string id = s.id();
    sessions_.emplace(id, std::make_shared<Entry>(std::move(s)));
  }
}

std::string TrialService::render_stimulus(const Stimulus& stimulus,
                                          const std::string& preset_name) const {
  static std::atomic<std::uint64_t> counter{0};
  const PipelineConfig cfg = preset(preset_name);
  const ColorImage input = load_image(stimulus.image);
  const fs::path tmp = store_.stimuli_dir() /
                       ("tmp-" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) +
                        "-" + std::to_string(counter++) + ".png");
  if (cfg.stages.empty()) {
    save_color_png(input, tmp);
  } else if (cfg.needs_landmarks()) {
    if (stimulus.landmarks.empty()) {
      throw Error(ErrorCode::kMissingLandmarks,
                  "stimulus " + stimulus.id + " has no landmarks but preset " + preset_name + " needs them");
    }
    const LandmarkSet lm = load_landmarks(stimulus.landmarks);
    save_image(simulate(input, cfg, &lm), tmp);
  } else {
    save_image(simulate(input, cfg), tmp);
  }
  const std::string hash = sha256_file_hex(tmp);
  const fs::path target = store_.stimuli_dir() / (hash + ".png");
  if (fs::exists(target)) {
    fs::remove(tmp);
  } else {
    fs::rename(tmp, target);
  }
  return hash;
}

TrialPlan TrialService::create_plan(TrialPlan plan) {
  validate(plan);
  plan.id.clear();
  plan.rendered.clear();
  for (const PhaseSpec& phase : plan.phases) preset(phase.preset);  // fail before rendering
  for (std::size_t p = 0; p < plan.phases.size(); ++p) {
    for (const Stimulus& s : plan.stimuli) {
      plan.rendered[{p, s.id}] = render_stimulus(s, plan.phases[p].preset);
    }
  }
  plan.id = "p-" + sha256_hex(plan_to_json(plan)).substr(0, 12);

  std::unique_lock lock(plans_mutex_);
  if (auto it = plans_.find(plan.id); it != plans_.end()) return it->second;
  store_.save_plan(plan);
  plans_.emplace(plan.id, plan);
  return plan;
}

TrialPlan TrialService::create_plan_from_json(std::string_view request, const fs::path& base_dir) {
  return create_plan(parse_plan_request(request, base_dir));
}

std::optional<TrialPlan> TrialService::plan(const std::string& plan_id) const {
  std::shared_lock lock(plans_mutex_);
  if (auto it = plans_.find(plan_id); it != plans_.end()) return it->second;
  return std::nullopt;
}

TrialSession TrialService::create_session(const std::string& plan_id, const std::string& participant,
                                          std::optional<std::uint64_t> seed) {
  const std::optional<TrialPlan> p = plan(plan_id);
  if (!p) throw Error(ErrorCode::kUnknownPlan, "unknown plan \"" + plan_id + "\"");
  if (participant.empty()) throw Error(ErrorCode::kInvalidArgument, "participant id is required");
  if (!seed) {
    std::random_device rd;
    seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  std::vector<Screen> screens = generate_screens(*p, *seed);
  std::vector<std::string> phase_names;
  for (const PhaseSpec& phase : p->phases) phase_names.push_back(phase.name);

  std::unique_lock lock(sessions_mutex_);
  TrialSession session(format_session_id(next_session_), participant, plan_id, *seed,
                       std::move(phase_names), p->time_limit_ms(), std::move(screens));
  store_.append_created(session, clock_->now());
  ++next_session_;
  sessions_.emplace(session.id(), std::make_shared<Entry>(session));
  return session;
}

std::shared_ptr<TrialService::Entry> TrialService::entry(const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw Error(ErrorCode::kUnknownSession, "unknown session \"" + session_id + "\"");
  }
  return it->second;
}

ScreenDescriptor TrialService::describe(const TrialSession& s, std::size_t index) const {
  const std::optional<TrialPlan> p = plan(s.plan_id());
  if (!p) throw Error(ErrorCode::kUnknownPlan, "session refers to missing plan " + s.plan_id());
  const Screen& screen = s.screens().at(index);
  ScreenDescriptor d;
  d.session_id = s.id();
  d.index = index;
  d.total = s.screens().size();
  d.phase = s.phase_names().at(screen.phase);
  d.task = screen.task;
  d.target_emotion = screen.target_emotion;
  d.question = question_text(screen.task, screen.target_emotion);
  for (std::size_t i = 0; i < screen.stimuli.size(); ++i) {
    d.image_urls[i] = stimulus_url(p->rendered.at({screen.phase, screen.stimuli[i]}));
  }
  d.time_limit_ms = s.time_limit_ms();
  d.presented_at = *s.records().at(index).presented_at;
  return d;
}

std::optional<ScreenDescriptor> TrialService::next_screen(const std::string& session_id, bool resume) {
  const auto e = entry(session_id);
  std::lock_guard lock(e->mutex);
  TrialSession& s = e->session;
  if (s.finished()) return std::nullopt;
  if (resume && s.records()[s.cursor()].presented_at) return describe(s, s.cursor());
  if (s.records()[s.cursor()].presented_at) {
    throw Error(ErrorCode::kPreviousUnanswered,
                "screen " + std::to_string(s.cursor()) + " was presented and is still unanswered");
  }
  const TimePoint now = clock_->now();
  store_.append_presented(s.id(), s.cursor(), now);
  const std::size_t index = s.present(now);
  return describe(s, index);
}

ResponseAck TrialService::submit_response(const std::string& session_id, std::size_t screen_index,
                                          std::optional<int> choice, bool timeout,
                                          double client_elapsed_ms) {
  const auto e = entry(session_id);
  std::lock_guard lock(e->mutex);
  TrialSession& s = e->session;
  s.check_response(screen_index, choice, timeout, client_elapsed_ms);
  const TimePoint now = clock_->now();
  store_.append_response(s.id(), screen_index, choice, timeout, client_elapsed_ms, now);
  s.respond(screen_index, choice, timeout, client_elapsed_ms, now);
  return {screen_index, s.finished()};
}

TrialSession TrialService::session(const std::string& session_id) const {
  const auto e = entry(session_id);
  std::lock_guard lock(e->mutex);
  return e->session;
}

std::vector<TrialSession> TrialService::sessions() const {
  std::vector<std::shared_ptr<Entry>> entries;
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [id, e] : sessions_) entries.push_back(e);
  }
  std::vector<TrialSession> out;
  for (const auto& e : entries) {
    std::lock_guard lock(e->mutex);
    out.push_back(e->session);
  }
  return out;
}

SessionSummary TrialService::summary(const std::string& session_id) const {
  return summarize(session(session_id));
}

GroupSummary TrialService::group_summary(const std::string& plan_id) const {
  if (!plan(plan_id)) throw Error(ErrorCode::kUnknownPlan, "unknown plan \"" + plan_id + "\"");
  std::vector<TrialSession> selected;
  for (TrialSession& s : finished_sessions()) {
    if (s.plan_id() == plan_id) selected.push_back(std::move(s));
  }
  return summarize(selected);
}

std::vector<TrialSession> TrialService::finished_sessions() const {
  std::vector<TrialSession> out;
  for (TrialSession& s : sessions()) {
    if (s.finished()) out.push_back(std::move(s));
  }
  return out;
}

std::string TrialService::export_csv() const { return results_csv(finished_sessions()); }

std::string TrialService::export_summary_csv() const { return summary_csv(finished_sessions()); }

std::optional<fs::path> TrialService::stimulus_file(const std::string& hash) const {
  if (!is_hex_hash(hash)) return std::nullopt;
  const fs::path path = store_.stimuli_dir() / (hash + ".png");
  if (!fs::is_regular_file(path)) return std::nullopt;
  return path;
}

}  // namespace provisim::trial
