#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace provisim::trial {

enum class QuestionType { kOddOneOut, kGender, kEmotion };

inline constexpr std::array<QuestionType, 3> kQuestionTypes = {
    QuestionType::kOddOneOut, QuestionType::kGender, QuestionType::kEmotion};

enum class Emotion { kHappy, kSad, kSurprised, kDisgusted, kAngry, kConfused, kFearful, kNeutral };

inline constexpr std::array<Emotion, 8> kEmotions = {
    Emotion::kHappy, Emotion::kSad,      Emotion::kSurprised, Emotion::kDisgusted,
    Emotion::kAngry, Emotion::kConfused, Emotion::kFearful,   Emotion::kNeutral};

std::string_view to_string(QuestionType t);
std::string_view to_string(Emotion e);
std::optional<QuestionType> parse_question_type(std::string_view s);
std::optional<Emotion> parse_emotion(std::string_view s);

/// Participant-facing question, e.g. "Which face looks happy?".
std::string question_text(QuestionType t, std::optional<Emotion> target);

/// One face photograph in the stimulus manifest.
struct Stimulus {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path landmarks;  // empty when the face has none
  std::string person;
  std::string gender;
  Emotion emotion = Emotion::kNeutral;

  friend bool operator==(const Stimulus&, const Stimulus&) = default;
};

struct PhaseSpec {
  std::string name;
  std::string preset;  // pipeline preset used to pre-render this phase

  friend bool operator==(const PhaseSpec&, const PhaseSpec&) = default;
};

inline constexpr int kChoicesPerScreen = 4;
inline constexpr double kTimingToleranceMs = 500.0;

struct TrialPlan {
  std::string id;
  std::string name;
  std::vector<PhaseSpec> phases;
  std::vector<QuestionType> question_types{kQuestionTypes.begin(), kQuestionTypes.end()};
  int repetitions_per_type = 24;
  double time_limit_s = 20.0;
  std::vector<Stimulus> stimuli;
  /// Content hash of the pre-rendered PNG, keyed by (phase index, stimulus id).
  std::map<std::pair<std::size_t, std::string>, std::string> rendered;

  std::size_t screen_count() const {
    return phases.size() * question_types.size() * static_cast<std::size_t>(repetitions_per_type);
  }
  const Stimulus* find_stimulus(std::string_view id) const;
  double time_limit_ms() const { return time_limit_s * 1000.0; }
};

/// Schema-level checks (throws kInvalidConfig). Stimulus sufficiency is
/// checked when screens are generated.
void validate(const TrialPlan& plan);

/// Plan request as posted by an operator. Relative stimulus paths resolve
/// against `base_dir` (request field, default: `default_base`).
TrialPlan parse_plan_request(std::string_view json_text, const std::filesystem::path& default_base);

std::string plan_to_json(const TrialPlan& plan);
TrialPlan plan_from_json(std::string_view json_text);

}  // namespace provisim::trial
