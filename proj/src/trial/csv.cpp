#include "provisim/trial/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "provisim/error.hpp"
#include "provisim/trial/summary.hpp"

namespace provisim::trial {

namespace {

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void append_row(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += escape(fields[i]);
  }
  out += '\n';
}

void require_finished(const std::vector<TrialSession>& sessions) {
  for (const TrialSession& s : sessions) {
    if (!s.finished()) {
      throw Error(ErrorCode::kSessionUnfinished, "session " + s.id() + " is not finished");
    }
  }
}

}  // namespace

std::string results_csv(const std::vector<TrialSession>& sessions) {
  require_finished(sessions);
  std::string out(kResultsHeader);
  out += '\n';
  for (const TrialSession& s : sessions) {
    for (std::size_t i = 0; i < s.screens().size(); ++i) {
      const Screen& screen = s.screens()[i];
      const ScreenRecord& rec = s.records()[i];
      append_row(out, {
                          s.id(),
                          s.participant(),
                          s.phase_names().at(screen.phase),
                          std::string(to_string(screen.task)),
                          screen.target_emotion ? std::string(to_string(*screen.target_emotion)) : "",
                          screen.stimuli[0],
                          screen.stimuli[1],
                          screen.stimuli[2],
                          screen.stimuli[3],
                          std::to_string(screen.correct_index),
                          rec.chosen ? std::to_string(*rec.chosen) : "",
                          rec.correct ? "1" : "0",
                          rec.timeout ? "1" : "0",
                          fixed(rec.client_elapsed_ms, 3),
                          rec.presented_at ? to_iso8601(*rec.presented_at) : "",
                          rec.responded_at ? to_iso8601(*rec.responded_at) : "",
                          fixed(rec.server_elapsed_ms(), 3),
                          rec.timing_suspect() ? "1" : "0",
                      });
    }
  }
  return out;
}

std::string summary_csv(const std::vector<TrialSession>& sessions) {
  require_finished(sessions);
  std::string out(kSummaryHeader);
  out += '\n';
  auto tally_row = [&out](const std::string& plan_id, const SessionSummary& s,
                          const std::string& phase, const std::string& task,
                          const std::string& emotion, const Tally& t) {
    append_row(out, {"session", plan_id, s.session_id, s.participant, phase, task, emotion,
                     std::to_string(t.presented), std::to_string(t.correct), fixed(t.accuracy(), 6),
                     fixed(t.mean_rt_ms(), 3)});
  };
  for (const TrialSession& session : sessions) {
    const SessionSummary s = summarize(session);
    for (const PhaseSummary& p : s.phases) {
      tally_row(session.plan_id(), s, p.phase, "all", "", p.overall);
      for (const auto& [task, t] : p.tasks) {
        tally_row(session.plan_id(), s, p.phase, std::string(to_string(task)), "", t);
      }
      for (const auto& [emotion, t] : p.emotions) {
        tally_row(session.plan_id(), s, p.phase, "emotion", std::string(to_string(emotion)), t);
      }
    }
  }
  std::map<std::string, std::vector<TrialSession>> by_plan;
  for (const TrialSession& session : sessions) by_plan[session.plan_id()].push_back(session);
  for (const auto& [plan_id, group] : by_plan) {
    const GroupSummary g = summarize(group);
    for (const std::string& phase : g.phases) {
      if (g.tasks.count(phase)) {
        for (const auto& [task, m] : g.tasks.at(phase)) {
          append_row(out, {"group", plan_id, "", "", phase, std::string(to_string(task)), "",
                           std::to_string(m.n), "", fixed(m.accuracy, 6), fixed(m.mean_rt_ms, 3)});
        }
      }
      if (g.emotions.count(phase)) {
        for (const auto& [emotion, m] : g.emotions.at(phase)) {
          append_row(out, {"group", plan_id, "", "", phase, "emotion", std::string(to_string(emotion)),
                           std::to_string(m.n), "", fixed(m.accuracy, 6), fixed(m.mean_rt_ms, 3)});
        }
      }
    }
  }
  return out;
}

void export_results(const std::vector<TrialSession>& sessions, const std::filesystem::path& path) {
  const std::string results = results_csv(sessions);
  const std::string summary = summary_csv(sessions);
  auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot open " + p.string());
    out << text;
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + p.string());
  };
  write(path, results);
  write(path.parent_path() / (path.stem().string() + "_summary.csv"), summary);
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool row_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    row_started = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      row_started = false;
    } else {
      field += c;
    }
  }
  if (quoted) throw Error(ErrorCode::kCorruptData, "CSV: unterminated quoted field");
  if (row_started) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::size_t validate_summary_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  auto fail = [](std::size_t line, const std::string& what) {
    return Error(ErrorCode::kCorruptData, "summary CSV line " + std::to_string(line) + ": " + what);
  };
  if (rows.empty()) throw fail(1, "missing header");
  const auto header = parse_csv(kSummaryHeader).front();
  if (rows.front() != header) throw fail(1, "header does not match the summary schema");

  auto optional_number = [](const std::string& s, double& out) {
    if (s.empty()) return true;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
  };

  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::size_t line = i + 1;
    if (r.size() != header.size()) throw fail(line, "expected " + std::to_string(header.size()) + " fields");
    if (r[0] != "session" && r[0] != "group" && r[0] != "reference") throw fail(line, "unknown scope");
    if (r[4].empty()) throw fail(line, "phase is required");
    if (r[5] != "all" && !parse_question_type(r[5])) throw fail(line, "unknown task \"" + r[5] + "\"");
    if (!r[6].empty()) {
      if (r[5] != "emotion") throw fail(line, "emotion given for a non-emotion task");
      if (!parse_emotion(r[6])) throw fail(line, "unknown emotion \"" + r[6] + "\"");
    }
    double count = 0, correct = 0, accuracy = 0, rt = 0;
    if (!optional_number(r[7], count) || count < 0) throw fail(line, "bad count");
    if (!optional_number(r[8], correct) || correct < 0) throw fail(line, "bad correct");
    if (!optional_number(r[9], accuracy) || accuracy < 0 || accuracy > 1) throw fail(line, "bad accuracy");
    if (!optional_number(r[10], rt) || rt < 0) throw fail(line, "bad mean_rt_ms");
    if (!r[7].empty() && !r[8].empty() && correct > count) throw fail(line, "correct exceeds count");
  }
  return rows.size() - 1;
}

}  // namespace provisim::trial
