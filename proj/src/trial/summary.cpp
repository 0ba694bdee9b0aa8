#include "provisim/trial/summary.hpp"

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "provisim/error.hpp"

namespace provisim::trial {

using ordered_json = nlohmann::ordered_json;

double Tally::mean_rt_ms() const {
  return answered ? rt_sum_ms / answered : std::numeric_limits<double>::quiet_NaN();
}

void Tally::add(const ScreenRecord& record) {
  ++presented;
  if (record.correct) ++correct;
  if (record.timeout) {
    ++timeouts;
  } else {
    ++answered;
    rt_sum_ms += record.client_elapsed_ms;
  }
}

SessionSummary summarize(const TrialSession& session) {
  if (!session.finished()) {
    throw Error(ErrorCode::kSessionUnfinished, "session " + session.id() + " is not finished");
  }
  SessionSummary out;
  out.session_id = session.id();
  out.participant = session.participant();
  for (const std::string& name : session.phase_names()) out.phases.push_back({name, {}, {}, {}});
  for (std::size_t i = 0; i < session.screens().size(); ++i) {
    const Screen& screen = session.screens()[i];
    const ScreenRecord& record = session.records()[i];
    PhaseSummary& phase = out.phases.at(screen.phase);
    phase.overall.add(record);
    phase.tasks[screen.task].add(record);
    if (screen.target_emotion) phase.emotions[*screen.target_emotion].add(record);
  }
  return out;
}

namespace {

// Running mean of per-session values.
struct Accumulator {
  int n = 0;
  double accuracy_sum = 0.0;
  int rt_n = 0;
  double rt_sum = 0.0;

  void add(const Tally& t) {
    ++n;
    accuracy_sum += t.accuracy();
    if (t.answered) {
      ++rt_n;
      rt_sum += t.mean_rt_ms();
    }
  }
  MeanStat finish() const {
    MeanStat s;
    s.n = n;
    s.accuracy = n ? accuracy_sum / n : 0.0;
    s.rt_n = rt_n;
    s.mean_rt_ms = rt_n ? rt_sum / rt_n : std::numeric_limits<double>::quiet_NaN();
    return s;
  }
};

int sign(double v) { return (v > 0) - (v < 0); }

}  // namespace

GroupSummary summarize(const std::vector<TrialSession>& sessions) {
  GroupSummary g;
  g.sessions = static_cast<int>(sessions.size());
  if (sessions.empty()) return g;
  g.phases = sessions.front().phase_names();

  std::vector<SessionSummary> per_session;
  for (const TrialSession& s : sessions) {
    if (s.phase_names() != g.phases) {
      throw Error(ErrorCode::kInvalidArgument, "sessions come from plans with different phases");
    }
    per_session.push_back(summarize(s));
  }

  std::map<std::string, std::map<QuestionType, Accumulator>> task_acc;
  std::map<std::string, std::map<Emotion, Accumulator>> emotion_acc;
  // participant -> task -> phase index -> accumulator
  std::map<std::string, std::map<QuestionType, std::map<std::size_t, Accumulator>>> by_participant;
  for (const SessionSummary& s : per_session) {
    for (std::size_t p = 0; p < s.phases.size(); ++p) {
      const PhaseSummary& phase = s.phases[p];
      for (const auto& [task, tally] : phase.tasks) {
        task_acc[phase.phase][task].add(tally);
        by_participant[s.participant][task][p].add(tally);
      }
      for (const auto& [emotion, tally] : phase.emotions) emotion_acc[phase.phase][emotion].add(tally);
    }
  }
  for (const auto& [phase, tasks] : task_acc) {
    for (const auto& [task, acc] : tasks) g.tasks[phase][task] = acc.finish();
  }
  for (const auto& [phase, emotions] : emotion_acc) {
    for (const auto& [emotion, acc] : emotions) g.emotions[phase][emotion] = acc.finish();
  }

  if (g.phases.size() >= 2) {
    const std::size_t first = 0;
    const std::size_t last = g.phases.size() - 1;
    for (const auto& [participant, tasks] : by_participant) {
      for (const auto& [task, phases] : tasks) {
        if (!phases.count(first) || !phases.count(last)) continue;
        const MeanStat a = phases.at(first).finish();
        const MeanStat b = phases.at(last).finish();
        PairedDifference& d = g.paired[task];
        ++d.participants;
        const double acc_diff = b.accuracy - a.accuracy;
        d.mean_accuracy_diff += acc_diff;
        switch (sign(acc_diff)) {
          case 1: ++d.accuracy_up; break;
          case -1: ++d.accuracy_down; break;
          default: ++d.accuracy_same; break;
        }
        if (a.rt_n && b.rt_n) {
          const double rt_diff = b.mean_rt_ms - a.mean_rt_ms;
          ++d.rt_pairs;
          d.mean_rt_diff_ms += rt_diff;
          switch (sign(rt_diff)) {
            case -1: ++d.rt_faster; break;
            case 1: ++d.rt_slower; break;
            default: ++d.rt_same; break;
          }
        }
      }
    }
    for (auto& [task, d] : g.paired) {
      if (d.participants) d.mean_accuracy_diff /= d.participants;
      d.mean_rt_diff_ms = d.rt_pairs ? d.mean_rt_diff_ms / d.rt_pairs
                                     : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return g;
}

namespace {

ordered_json number_or_null(double v) { return std::isnan(v) ? ordered_json(nullptr) : ordered_json(v); }

ordered_json tally_json(const Tally& t) {
  ordered_json j;
  j["count"] = t.presented;
  j["correct"] = t.correct;
  j["accuracy"] = t.accuracy();
  j["timeouts"] = t.timeouts;
  j["mean_rt_ms"] = number_or_null(t.mean_rt_ms());
  return j;
}

ordered_json mean_json(const MeanStat& m) {
  ordered_json j;
  j["sessions"] = m.n;
  j["accuracy"] = m.accuracy;
  j["mean_rt_ms"] = number_or_null(m.mean_rt_ms);
  return j;
}

}  // namespace

std::string summary_to_json(const SessionSummary& s) {
  ordered_json doc;
  doc["session"] = s.session_id;
  doc["participant"] = s.participant;
  doc["phases"] = ordered_json::array();
  for (const PhaseSummary& p : s.phases) {
    ordered_json j;
    j["phase"] = p.phase;
    j["overall"] = tally_json(p.overall);
    j["tasks"] = ordered_json::object();
    for (const auto& [task, tally] : p.tasks) j["tasks"][std::string(to_string(task))] = tally_json(tally);
    j["emotions"] = ordered_json::object();
    for (const auto& [emotion, tally] : p.emotions) {
      j["emotions"][std::string(to_string(emotion))] = tally_json(tally);
    }
    doc["phases"].push_back(std::move(j));
  }
  return doc.dump(2);
}

std::string summary_to_json(const GroupSummary& g) {
  ordered_json doc;
  doc["sessions"] = g.sessions;
  doc["phases"] = ordered_json::array();
  for (const std::string& phase : g.phases) {
    ordered_json j;
    j["phase"] = phase;
    j["tasks"] = ordered_json::object();
    if (g.tasks.count(phase)) {
      for (const auto& [task, m] : g.tasks.at(phase)) j["tasks"][std::string(to_string(task))] = mean_json(m);
    }
    j["emotions"] = ordered_json::object();
    if (g.emotions.count(phase)) {
      for (const auto& [emotion, m] : g.emotions.at(phase)) {
        j["emotions"][std::string(to_string(emotion))] = mean_json(m);
      }
    }
    doc["phases"].push_back(std::move(j));
  }
  doc["paired"] = ordered_json::object();
  for (const auto& [task, d] : g.paired) {
    ordered_json j;
    j["participants"] = d.participants;
    j["mean_accuracy_diff"] = d.mean_accuracy_diff;
    j["accuracy_up"] = d.accuracy_up;
    j["accuracy_down"] = d.accuracy_down;
    j["accuracy_same"] = d.accuracy_same;
    j["mean_rt_diff_ms"] = number_or_null(d.mean_rt_diff_ms);
    j["rt_faster"] = d.rt_faster;
    j["rt_slower"] = d.rt_slower;
    j["rt_same"] = d.rt_same;
    doc["paired"][std::string(to_string(task))] = std::move(j);
  }
  return doc.dump(2);
}

}  // namespace provisim::trial
