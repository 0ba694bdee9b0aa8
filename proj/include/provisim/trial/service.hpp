#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "provisim/trial/clock.hpp"
#include "provisim/trial/plan.hpp"
#include "provisim/trial/session.hpp"
#include "provisim/trial/store.hpp"
#include "provisim/trial/summary.hpp"

namespace provisim::trial {

/// What a participant's client needs to show one screen. Stimulus identities
/// are not exposed, only content-addressed image URLs.
struct ScreenDescriptor {
  std::string session_id;
  std::size_t index = 0;
  std::size_t total = 0;
  std::string phase;
  QuestionType task = QuestionType::kOddOneOut;
  std::optional<Emotion> target_emotion;
  std::string question;
  std::array<std::string, kChoicesPerScreen> image_urls;
  double time_limit_ms = 0.0;
  TimePoint presented_at;
};

struct ResponseAck {
  std::size_t index = 0;
  bool finished = false;
};

/// Session lifecycle over a data directory. Thread-safe: sessions are
/// independent, calls on one session are serialised. Every state change is
/// appended to the session log before it is applied or acknowledged.
class TrialService {
 public:
  explicit TrialService(std::filesystem::path data_dir,
                        std::shared_ptr<Clock> clock = std::make_shared<SystemClock>());

  const TrialStore& store() const { return store_; }

  /// Validates, pre-renders every stimulus for every phase and persists the
  /// plan. The id is derived from the plan content, so posting the same plan
  /// twice returns the stored one.
  TrialPlan create_plan(TrialPlan plan);
  TrialPlan create_plan_from_json(std::string_view request, const std::filesystem::path& base_dir);
  std::optional<TrialPlan> plan(const std::string& plan_id) const;

  /// Generates the screen sequence up front. A missing seed draws one from
  /// the OS; it is logged either way.
  TrialSession create_session(const std::string& plan_id, const std::string& participant,
                              std::optional<std::uint64_t> seed = std::nullopt);

  /// Presents the next screen; nullopt once the session is finished. With
  /// `resume`, an already presented but unanswered screen is returned again
  /// (original presentation time kept) instead of failing.
  std::optional<ScreenDescriptor> next_screen(const std::string& session_id, bool resume = false);

  ResponseAck submit_response(const std::string& session_id, std::size_t screen_index,
                              std::optional<int> choice, bool timeout, double client_elapsed_ms);

  TrialSession session(const std::string& session_id) const;
  std::vector<TrialSession> sessions() const;  // sorted by id
  SessionSummary summary(const std::string& session_id) const;
  GroupSummary group_summary(const std::string& plan_id) const;

  /// Finished sessions only.
  std::string export_csv() const;
  std::string export_summary_csv() const;

  /// Rendered stimulus path for a content hash, if it exists.
  std::optional<std::filesystem::path> stimulus_file(const std::string& hash) const;

 private:
  struct Entry {
    std::mutex mutex;
    TrialSession session;
    explicit Entry(TrialSession s) : session(std::move(s)) {}
  };

  std::shared_ptr<Entry> entry(const std::string& session_id) const;
  std::string render_stimulus(const Stimulus& stimulus, const std::string& preset_name) const;
  ScreenDescriptor describe(const TrialSession& s, std::size_t index) const;
  std::vector<TrialSession> finished_sessions() const;

  TrialStore store_;
  std::shared_ptr<Clock> clock_;

  mutable std::shared_mutex plans_mutex_;
  std::map<std::string, TrialPlan> plans_;

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t next_session_ = 1;
};

/// "/stimuli/<hash>.png"
std::string stimulus_url(const std::string& hash);

}  // namespace provisim::trial
