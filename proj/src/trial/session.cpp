#include "provisim/trial/session.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "provisim/error.hpp"

namespace provisim::trial {

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::kCreated: return "created";
    case SessionState::kRunning: return "running";
    case SessionState::kFinished: return "finished";
  }
  return "";
}

double ScreenRecord::server_elapsed_ms() const {
  if (!presented_at || !responded_at) return 0.0;
  return static_cast<double>((*responded_at - *presented_at).count());
}

bool ScreenRecord::timing_suspect() const {
  return answered() && client_elapsed_ms > server_elapsed_ms() + kTimingToleranceMs;
}

TrialSession::TrialSession(std::string id, std::string participant, std::string plan_id,
                           std::uint64_t seed, std::vector<std::string> phase_names,
                           double time_limit_ms, std::vector<Screen> screens)
    : id_(std::move(id)),
      participant_(std::move(participant)),
      plan_id_(std::move(plan_id)),
      seed_(seed),
      phase_names_(std::move(phase_names)),
      time_limit_ms_(time_limit_ms),
      screens_(std::move(screens)),
      records_(screens_.size()) {
  if (screens_.empty()) state_ = SessionState::kFinished;
}

std::size_t TrialSession::present(TimePoint now) {
  if (finished()) {
    throw Error(ErrorCode::kSessionFinished, "session " + id_ + " is finished");
  }
  ScreenRecord& rec = records_[cursor_];
  if (rec.presented_at) {
    throw Error(ErrorCode::kPreviousUnanswered,
                "screen " + std::to_string(cursor_) + " was presented and is still unanswered");
  }
  rec.presented_at = now;
  state_ = SessionState::kRunning;
  return cursor_;
}

void TrialSession::check_response(std::size_t screen_index, std::optional<int> choice, bool timeout,
                                  double client_elapsed_ms) const {
  if (screen_index < cursor_) {
    throw Error(ErrorCode::kDuplicateSubmission,
                "screen " + std::to_string(screen_index) + " was already answered");
  }
  if (finished() || screen_index > cursor_) {
    throw Error(ErrorCode::kOutOfOrder, "expected a response for screen " + std::to_string(cursor_) +
                                            ", got " + std::to_string(screen_index));
  }
  if (!records_[cursor_].presented_at) {
    throw Error(ErrorCode::kNotPresented,
                "screen " + std::to_string(screen_index) + " has not been presented");
  }
  if (timeout == choice.has_value()) {
    throw Error(ErrorCode::kInvalidResponse, "a response carries either a choice or a timeout flag");
  }
  if (choice && (*choice < 0 || *choice >= kChoicesPerScreen)) {
    throw Error(ErrorCode::kInvalidResponse, "choice must be in [0, " +
                                                 std::to_string(kChoicesPerScreen) + ")");
  }
  if (!std::isfinite(client_elapsed_ms) || client_elapsed_ms < 0) {
    throw Error(ErrorCode::kInvalidResponse, "client elapsed time must be a non-negative number");
  }
  if (!timeout && client_elapsed_ms > time_limit_ms_ + kTimingToleranceMs) {
    throw Error(ErrorCode::kElapsedExceedsLimit,
                "elapsed " + std::to_string(client_elapsed_ms) + " ms exceeds the time limit");
  }
}

void TrialSession::respond(std::size_t screen_index, std::optional<int> choice, bool timeout,
                           double client_elapsed_ms, TimePoint now) {
  check_response(screen_index, choice, timeout, client_elapsed_ms);
  ScreenRecord& rec = records_[cursor_];
  rec.responded_at = now;
  rec.chosen = choice;
  rec.timeout = timeout;
  rec.client_elapsed_ms = client_elapsed_ms;
  rec.correct = !timeout && *choice == screens_[cursor_].correct_index;
  ++cursor_;
  if (cursor_ == screens_.size()) state_ = SessionState::kFinished;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "uniform_below(0)");
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = kMax - (kMax % n + 1) % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x > limit);
  return x % n;
}

namespace {

using IndexList = std::vector<std::size_t>;

template <typename T>
const T& pick(const std::vector<T>& items, std::mt19937_64& rng) {
  return items[uniform_below(rng, items.size())];
}

template <typename T>
std::vector<T> pick_distinct(std::vector<T> items, std::size_t k, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(items[i], items[i + uniform_below(rng, items.size() - i)]);
  }
  items.resize(k);
  return items;
}

Error insufficient(const std::string& what) {
  return Error(ErrorCode::kInsufficientStimuli, "insufficient stimuli: " + what);
}

struct Manifest {
  const TrialPlan& plan;
  std::map<std::string, IndexList> by_person;
  std::map<std::string, std::map<std::string, IndexList>> by_gender;  // gender -> person -> stimuli
  std::array<IndexList, kEmotions.size()> by_emotion;

  explicit Manifest(const TrialPlan& p) : plan(p) {
    for (std::size_t i = 0; i < p.stimuli.size(); ++i) {
      const Stimulus& s = p.stimuli[i];
      by_person[s.person].push_back(i);
      by_gender[s.gender][s.person].push_back(i);
      by_emotion[static_cast<std::size_t>(s.emotion)].push_back(i);
    }
  }

  std::vector<std::string> persons() const {
    std::vector<std::string> out;
    for (const auto& [person, list] : by_person) out.push_back(person);
    return out;
  }
};

Screen arrange(std::size_t phase, QuestionType task, std::optional<Emotion> target,
               std::size_t correct, std::vector<std::size_t> distractors, const TrialPlan& plan,
               std::mt19937_64& rng) {
  Screen screen;
  screen.phase = phase;
  screen.task = task;
  screen.target_emotion = target;
  screen.correct_index = static_cast<int>(uniform_below(rng, kChoicesPerScreen));
  seeded_shuffle(distractors, rng);
  std::size_t next = 0;
  for (int slot = 0; slot < kChoicesPerScreen; ++slot) {
    const std::size_t stim = slot == screen.correct_index ? correct : distractors[next++];
    screen.stimuli[static_cast<std::size_t>(slot)] = plan.stimuli[stim].id;
  }
  return screen;
}

Screen odd_one_out_screen(const Manifest& m, std::size_t phase, std::mt19937_64& rng) {
  std::vector<std::string> majority;
  for (const auto& [person, list] : m.by_person) {
    if (list.size() >= 3) majority.push_back(person);
  }
  const std::vector<std::string> persons = m.persons();
  if (majority.empty() || persons.size() < 2) {
    throw insufficient("odd-one-out needs a person with 3 photos and at least 2 people");
  }
  const std::string& same = pick(majority, rng);
  const IndexList trio = pick_distinct(m.by_person.at(same), 3, rng);
  std::vector<std::string> others;
  for (const std::string& p : persons) {
    if (p != same) others.push_back(p);
  }
  const std::size_t odd = pick(m.by_person.at(pick(others, rng)), rng);
  return arrange(phase, QuestionType::kOddOneOut, std::nullopt, odd, trio, m.plan, rng);
}

Screen gender_screen(const Manifest& m, std::size_t phase, std::mt19937_64& rng) {
  std::vector<std::string> genders, majority;
  for (const auto& [gender, people] : m.by_gender) {
    genders.push_back(gender);
    if (people.size() >= 3) majority.push_back(gender);
  }
  if (majority.empty() || genders.size() < 2) {
    throw insufficient("gender task needs two genders, one with at least 3 people");
  }
  const std::string& main = pick(majority, rng);
  std::vector<std::string> people;
  for (const auto& [person, list] : m.by_gender.at(main)) people.push_back(person);
  IndexList trio;
  for (const std::string& person : pick_distinct(people, 3, rng)) {
    trio.push_back(pick(m.by_gender.at(main).at(person), rng));
  }
  std::vector<std::string> other_genders;
  for (const std::string& g : genders) {
    if (g != main) other_genders.push_back(g);
  }
  const auto& other_people = m.by_gender.at(pick(other_genders, rng));
  std::vector<std::string> names;
  for (const auto& [person, list] : other_people) names.push_back(person);
  const std::size_t odd = pick(other_people.at(pick(names, rng)), rng);
  return arrange(phase, QuestionType::kGender, std::nullopt, odd, trio, m.plan, rng);
}

Screen emotion_screen(const Manifest& m, std::size_t phase, Emotion target, std::mt19937_64& rng) {
  const std::size_t correct = pick(m.by_emotion[static_cast<std::size_t>(target)], rng);
  std::vector<Emotion> others;
  for (Emotion e : kEmotions) {
    if (e != target) others.push_back(e);
  }
  IndexList distractors;
  for (Emotion e : pick_distinct(others, kChoicesPerScreen - 1, rng)) {
    distractors.push_back(pick(m.by_emotion[static_cast<std::size_t>(e)], rng));
  }
  return arrange(phase, QuestionType::kEmotion, target, correct, distractors, m.plan, rng);
}

}  // namespace

std::vector<Screen> generate_screens(const TrialPlan& plan, std::uint64_t seed) {
  validate(plan);
  const Manifest manifest(plan);
  for (QuestionType t : plan.question_types) {
    if (t != QuestionType::kEmotion) continue;
    for (Emotion e : kEmotions) {
      if (manifest.by_emotion[static_cast<std::size_t>(e)].empty()) {
        throw insufficient("no stimulus shows \"" + std::string(to_string(e)) + "\"");
      }
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<Screen> screens;
  screens.reserve(plan.screen_count());
  for (std::size_t phase = 0; phase < plan.phases.size(); ++phase) {
    std::vector<Screen> block;
    for (QuestionType t : plan.question_types) {
      if (t == QuestionType::kEmotion) {
        std::vector<Emotion> targets;
        const int per_emotion = plan.repetitions_per_type / static_cast<int>(kEmotions.size());
        for (Emotion e : kEmotions) targets.insert(targets.end(), per_emotion, e);
        seeded_shuffle(targets, rng);
        for (Emotion e : targets) block.push_back(emotion_screen(manifest, phase, e, rng));
      } else {
        for (int r = 0; r < plan.repetitions_per_type; ++r) {
          block.push_back(t == QuestionType::kGender ? gender_screen(manifest, phase, rng)
                                                     : odd_one_out_screen(manifest, phase, rng));
        }
      }
    }
    seeded_shuffle(block, rng);
    screens.insert(screens.end(), block.begin(), block.end());
  }
  return screens;
}

}  // namespace provisim::trial
