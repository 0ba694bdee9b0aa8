#include "provisim/trial/plan.hpp"

#include <nlohmann/json.hpp>
#include <set>

#include "provisim/error.hpp"
#include "provisim/pipeline.hpp"

namespace provisim::trial {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(QuestionType t) {
  switch (t) {
    case QuestionType::kOddOneOut: return "odd_one_out";
    case QuestionType::kGender: return "gender";
    case QuestionType::kEmotion: return "emotion";
  }
  return "";
}

std::string_view to_string(Emotion e) {
  switch (e) {
    case Emotion::kHappy: return "happy";
    case Emotion::kSad: return "sad";
    case Emotion::kSurprised: return "surprised";
    case Emotion::kDisgusted: return "disgusted";
    case Emotion::kAngry: return "angry";
    case Emotion::kConfused: return "confused";
    case Emotion::kFearful: return "fearful";
    case Emotion::kNeutral: return "neutral";
  }
  return "";
}

std::optional<QuestionType> parse_question_type(std::string_view s) {
  for (QuestionType t : kQuestionTypes) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::optional<Emotion> parse_emotion(std::string_view s) {
  for (Emotion e : kEmotions) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

std::string question_text(QuestionType t, std::optional<Emotion> target) {
  switch (t) {
    case QuestionType::kOddOneOut: return "Which person is the odd one out?";
    case QuestionType::kGender: return "Which person is a different gender?";
    case QuestionType::kEmotion:
      return "Which face looks " + std::string(target ? to_string(*target) : "different") + "?";
  }
  return "";
}

const Stimulus* TrialPlan::find_stimulus(std::string_view id) const {
  for (const Stimulus& s : stimuli) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

namespace {

Error plan_error(const std::string& what) { return Error(ErrorCode::kInvalidConfig, "plan: " + what); }

}  // namespace

void validate(const TrialPlan& plan) {
  if (plan.phases.empty()) throw plan_error("needs at least one phase");
  std::set<std::string> phase_names;
  for (const PhaseSpec& p : plan.phases) {
    if (p.name.empty()) throw plan_error("phase names must be non-empty");
    if (!phase_names.insert(p.name).second) throw plan_error("duplicate phase \"" + p.name + "\"");
    try {
      preset(p.preset);
    } catch (const Error&) {
      throw plan_error("phase \"" + p.name + "\" uses unknown preset \"" + p.preset + "\"");
    }
  }
  if (plan.question_types.empty()) throw plan_error("needs at least one question type");
  std::set<QuestionType> types(plan.question_types.begin(), plan.question_types.end());
  if (types.size() != plan.question_types.size()) throw plan_error("duplicate question type");
  if (plan.repetitions_per_type < 1) throw plan_error("repetitions_per_type must be positive");
  if (types.count(QuestionType::kEmotion) &&
      plan.repetitions_per_type % static_cast<int>(kEmotions.size()) != 0) {
    throw plan_error("repetitions_per_type must be a multiple of " +
                     std::to_string(kEmotions.size()) + " for the emotion task");
  }
  if (!(plan.time_limit_s > 0)) throw plan_error("time_limit_s must be positive");
  std::set<std::string> ids;
  for (const Stimulus& s : plan.stimuli) {
    if (s.id.empty() || s.person.empty() || s.gender.empty()) {
      throw plan_error("stimuli need id, person and gender");
    }
    if (!ids.insert(s.id).second) throw plan_error("duplicate stimulus id \"" + s.id + "\"");
  }
}

namespace {

template <typename Json>
Stimulus stimulus_from_json(const Json& j, const std::filesystem::path& base) {
  Stimulus s;
  s.id = j.at("id").template get<std::string>();
  std::filesystem::path image = j.at("image").template get<std::string>();
  s.image = image.is_relative() ? base / image : image;
  if (j.contains("landmarks") && !j["landmarks"].is_null()) {
    std::filesystem::path lm = j["landmarks"].template get<std::string>();
    s.landmarks = lm.is_relative() ? base / lm : lm;
  }
  s.person = j.at("person").template get<std::string>();
  s.gender = j.at("gender").template get<std::string>();
  const std::string emotion = j.at("emotion").template get<std::string>();
  const auto e = parse_emotion(emotion);
  if (!e) throw plan_error("unknown emotion \"" + emotion + "\"");
  s.emotion = *e;
  return s;
}

template <typename Json>
void fill_common(TrialPlan& plan, const Json& doc, const std::filesystem::path& base) {
  plan.name = doc.value("name", std::string());
  for (const auto& p : doc.at("phases")) {
    plan.phases.push_back({p.at("name").template get<std::string>(),
                           p.at("preset").template get<std::string>()});
  }
  if (doc.contains("question_types")) {
    plan.question_types.clear();
    for (const auto& t : doc["question_types"]) {
      const std::string name = t.template get<std::string>();
      const auto qt = parse_question_type(name);
      if (!qt) throw plan_error("unknown question type \"" + name + "\"");
      plan.question_types.push_back(*qt);
    }
  }
  plan.repetitions_per_type = doc.value("repetitions_per_type", 24);
  plan.time_limit_s = doc.value("time_limit_s", 20.0);
  for (const auto& s : doc.at("stimuli")) plan.stimuli.push_back(stimulus_from_json(s, base));
}

}  // namespace

TrialPlan parse_plan_request(std::string_view json_text, const std::filesystem::path& default_base) {
  TrialPlan plan;
  try {
    const json doc = json::parse(json_text);
    std::filesystem::path base = default_base;
    if (doc.contains("base_dir")) {
      const std::filesystem::path requested = doc["base_dir"].get<std::string>();
      base = requested.is_relative() ? default_base / requested : requested;
    }
    fill_common(plan, doc, base);
  } catch (const json::exception& e) {
    throw plan_error(e.what());
  }
  validate(plan);
  return plan;
}

std::string plan_to_json(const TrialPlan& plan) {
  ordered_json doc;
  doc["id"] = plan.id;
  doc["name"] = plan.name;
  doc["phases"] = ordered_json::array();
  for (const PhaseSpec& p : plan.phases) doc["phases"].push_back({{"name", p.name}, {"preset", p.preset}});
  doc["question_types"] = ordered_json::array();
  for (QuestionType t : plan.question_types) doc["question_types"].push_back(std::string(to_string(t)));
  doc["repetitions_per_type"] = plan.repetitions_per_type;
  doc["choices_per_screen"] = kChoicesPerScreen;
  doc["time_limit_s"] = plan.time_limit_s;
  doc["emotion_labels"] = ordered_json::array();
  for (Emotion e : kEmotions) doc["emotion_labels"].push_back(std::string(to_string(e)));
  doc["stimuli"] = ordered_json::array();
  for (const Stimulus& s : plan.stimuli) {
    ordered_json j;
    j["id"] = s.id;
    j["image"] = s.image.string();
    j["landmarks"] = s.landmarks.empty() ? ordered_json(nullptr) : ordered_json(s.landmarks.string());
    j["person"] = s.person;
    j["gender"] = s.gender;
    j["emotion"] = std::string(to_string(s.emotion));
    doc["stimuli"].push_back(std::move(j));
  }
  doc["rendered"] = ordered_json::array();
  for (const auto& [key, hash] : plan.rendered) {
    doc["rendered"].push_back({{"phase", key.first}, {"stimulus", key.second}, {"hash", hash}});
  }
  return doc.dump(2);
}

TrialPlan plan_from_json(std::string_view json_text) {
  TrialPlan plan;
  try {
    const ordered_json doc = ordered_json::parse(json_text);
    plan.id = doc.at("id").get<std::string>();
    fill_common(plan, doc, std::filesystem::path());
    for (const auto& r : doc.at("rendered")) {
      plan.rendered[{r.at("phase").get<std::size_t>(), r.at("stimulus").get<std::string>()}] =
          r.at("hash").get<std::string>();
    }
  } catch (const ordered_json::exception& e) {
    throw plan_error(e.what());
  }
  validate(plan);
  return plan;
}

}  // namespace provisim::trial
