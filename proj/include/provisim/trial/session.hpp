#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "provisim/trial/clock.hpp"
#include "provisim/trial/plan.hpp"

namespace provisim::trial {

/// One pre-generated question screen.
struct Screen {
  std::size_t phase = 0;
  QuestionType task = QuestionType::kOddOneOut;
  std::optional<Emotion> target_emotion;  // emotion task only
  std::array<std::string, kChoicesPerScreen> stimuli;
  int correct_index = 0;

  friend bool operator==(const Screen&, const Screen&) = default;
};

struct ScreenRecord {
  std::optional<TimePoint> presented_at;
  std::optional<TimePoint> responded_at;
  std::optional<int> chosen;  // empty on timeout
  bool timeout = false;
  double client_elapsed_ms = 0.0;
  bool correct = false;

  bool answered() const { return responded_at.has_value(); }
  /// Wall time between presentation and receipt on the server.
  double server_elapsed_ms() const;
  /// Client claims more time than the server saw pass, beyond tolerance.
  bool timing_suspect() const;

  friend bool operator==(const ScreenRecord&, const ScreenRecord&) = default;
};

enum class SessionState { kCreated, kRunning, kFinished };

std::string_view to_string(SessionState s);

/// A participant's run through a plan. Mutated only through present() and
/// respond(), which enforce strict in-order progress; replaying the same calls
/// reproduces the same state.
class TrialSession {
 public:
  TrialSession(std::string id, std::string participant, std::string plan_id, std::uint64_t seed,
               std::vector<std::string> phase_names, double time_limit_ms,
               std::vector<Screen> screens);

  const std::string& id() const { return id_; }
  const std::string& participant() const { return participant_; }
  const std::string& plan_id() const { return plan_id_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::string>& phase_names() const { return phase_names_; }
  double time_limit_ms() const { return time_limit_ms_; }
  const std::vector<Screen>& screens() const { return screens_; }
  const std::vector<ScreenRecord>& records() const { return records_; }
  std::size_t cursor() const { return cursor_; }
  SessionState state() const { return state_; }
  bool finished() const { return state_ == SessionState::kFinished; }

  /// Marks the screen at the cursor as shown. Throws kSessionFinished or
  /// kPreviousUnanswered.
  std::size_t present(TimePoint now);

  /// Records the answer for `screen_index`. `choice` must be empty exactly
  /// when `timeout` is set.
  void respond(std::size_t screen_index, std::optional<int> choice, bool timeout,
               double client_elapsed_ms, TimePoint now);

  /// Validation half of respond(); throws without touching state.
  void check_response(std::size_t screen_index, std::optional<int> choice, bool timeout,
                      double client_elapsed_ms) const;

  friend bool operator==(const TrialSession&, const TrialSession&) = default;

 private:
  std::string id_;
  std::string participant_;
  std::string plan_id_;
  std::uint64_t seed_;
  std::vector<std::string> phase_names_;
  double time_limit_ms_;
  std::vector<Screen> screens_;
  std::vector<ScreenRecord> records_;
  std::size_t cursor_ = 0;
  SessionState state_ = SessionState::kCreated;
};

/// Portable uniform integer in [0, n): unbiased rejection on a 64-bit engine,
/// so sequences do not depend on the standard library's distributions.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n);

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_below(rng, i)]);
  }
}

/// Screen list for every phase in order. Within a phase, question types are
/// interleaved at random and each emotion is the target exactly
/// repetitions / 8 times. Throws kInsufficientStimuli when the manifest
/// cannot fill a screen.
std::vector<Screen> generate_screens(const TrialPlan& plan, std::uint64_t seed);

}  // namespace provisim::trial
