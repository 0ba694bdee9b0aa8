#pragma once

// A participant who can see identities perfectly. Answers are worked out from
// stimulus metadata only, never from the stored correct index.

#include <array>
#include <optional>
#include <string>

#include "provisim/trial/plan.hpp"

namespace provisim::testing {

/// Slot of the face that differs (person, gender) or shows `target`; nullopt
/// when no single slot qualifies.
std::optional<int> oracle_choice(const trial::TrialPlan& plan, trial::QuestionType task,
                                 std::optional<trial::Emotion> target,
                                 const std::array<std::string, trial::kChoicesPerScreen>& stimulus_ids);

}  // namespace provisim::testing
