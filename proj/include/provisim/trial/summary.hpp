#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "provisim/trial/session.hpp"

namespace provisim::trial {

/// Counts for one slice of screens. Response time is averaged over answered
/// (non-timeout) screens only.
struct Tally {
  int presented = 0;
  int correct = 0;
  int timeouts = 0;
  int answered = 0;
  double rt_sum_ms = 0.0;

  double accuracy() const { return presented ? static_cast<double>(correct) / presented : 0.0; }
  /// NaN when nothing was answered.
  double mean_rt_ms() const;
  void add(const ScreenRecord& record);
};

struct PhaseSummary {
  std::string phase;
  Tally overall;
  std::map<QuestionType, Tally> tasks;
  std::map<Emotion, Tally> emotions;  // emotion task, keyed by target emotion
};

struct SessionSummary {
  std::string session_id;
  std::string participant;
  std::vector<PhaseSummary> phases;
};

/// Throws kSessionUnfinished unless the session is finished.
SessionSummary summarize(const TrialSession& session);

/// Mean over sessions, each session weighted equally.
struct MeanStat {
  int n = 0;
  double accuracy = 0.0;
  double mean_rt_ms = 0.0;  // over sessions with a defined RT
  int rt_n = 0;
};

/// Last phase minus first phase, per participant (a participant's sessions
/// are averaged first).
struct PairedDifference {
  int participants = 0;
  double mean_accuracy_diff = 0.0;
  int accuracy_up = 0, accuracy_down = 0, accuracy_same = 0;
  double mean_rt_diff_ms = 0.0;
  int rt_pairs = 0;
  int rt_faster = 0, rt_slower = 0, rt_same = 0;
};

struct GroupSummary {
  int sessions = 0;
  std::vector<std::string> phases;
  std::map<std::string, std::map<QuestionType, MeanStat>> tasks;              // phase -> task
  std::map<std::string, std::map<Emotion, MeanStat>> emotions;                // phase -> emotion
  std::map<QuestionType, PairedDifference> paired;                            // needs >= 2 phases
};

/// All sessions must be finished and share the same phase names.
GroupSummary summarize(const std::vector<TrialSession>& sessions);

std::string summary_to_json(const SessionSummary& s);
std::string summary_to_json(const GroupSummary& g);

}  // namespace provisim::trial
