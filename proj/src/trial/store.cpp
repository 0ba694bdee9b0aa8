#include "provisim/trial/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "provisim/error.hpp"

namespace provisim::trial {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

namespace {

Error io_error(const std::string& what) {
  return Error(ErrorCode::kIo, what + ": " + std::strerror(errno));
}

void write_all(int fd, const std::string& data, const fs::path& path) {
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw io_error("write " + path.string());
    }
    done += static_cast<std::size_t>(n);
  }
}

void durable_write(const fs::path& path, const std::string& data, int flags) {
  const int fd = ::open(path.c_str(), flags, 0644);
  if (fd < 0) throw io_error("open " + path.string());
  try {
    write_all(fd, data, path);
    if (::fsync(fd) != 0) throw io_error("fsync " + path.string());
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kUnreadable, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

ordered_json screen_to_json(const Screen& s) {
  ordered_json j;
  j["phase"] = s.phase;
  j["task"] = std::string(to_string(s.task));
  j["target_emotion"] =
      s.target_emotion ? ordered_json(std::string(to_string(*s.target_emotion))) : ordered_json(nullptr);
  j["stimuli"] = s.stimuli;
  j["correct_index"] = s.correct_index;
  return j;
}

Screen screen_from_json(const json& j) {
  Screen s;
  s.phase = j.at("phase").get<std::size_t>();
  const auto task = parse_question_type(j.at("task").get<std::string>());
  if (!task) throw Error(ErrorCode::kCorruptData, "unknown task in session log");
  s.task = *task;
  if (!j.at("target_emotion").is_null()) {
    s.target_emotion = parse_emotion(j["target_emotion"].get<std::string>());
    if (!s.target_emotion) throw Error(ErrorCode::kCorruptData, "unknown emotion in session log");
  }
  s.stimuli = j.at("stimuli").get<std::array<std::string, kChoicesPerScreen>>();
  s.correct_index = j.at("correct_index").get<int>();
  return s;
}

}  // namespace

TrialStore::TrialStore(fs::path root) : root_(std::move(root)) {
  for (const char* sub : {"plans", "sessions", "stimuli"}) {
    std::error_code ec;
    fs::create_directories(root_ / sub, ec);
    if (ec) {
      throw Error(ErrorCode::kIo, "cannot create " + (root_ / sub).string() + ": " + ec.message());
    }
  }
}

fs::path TrialStore::session_log(const std::string& session_id) const {
  return root_ / "sessions" / (session_id + ".log");
}

void TrialStore::save_plan(const TrialPlan& plan) const {
  const fs::path target = root_ / "plans" / (plan.id + ".json");
  const fs::path tmp = target.string() + ".tmp";
  durable_write(tmp, plan_to_json(plan), O_WRONLY | O_CREAT | O_TRUNC);
  fs::rename(tmp, target);
}

std::vector<TrialPlan> TrialStore::load_plans() const {
  std::vector<TrialPlan> plans;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(root_ / "plans")) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) plans.push_back(plan_from_json(read_text(f)));
  return plans;
}

void TrialStore::append_line(const std::string& session_id, const std::string& line) const {
  durable_write(session_log(session_id), line + "\n", O_WRONLY | O_CREAT | O_APPEND);
}

void TrialStore::append_created(const TrialSession& session, TimePoint at) const {
  ordered_json s;
  s["id"] = session.id();
  s["participant"] = session.participant();
  s["plan_id"] = session.plan_id();
  s["seed"] = session.seed();
  s["phase_names"] = session.phase_names();
  s["time_limit_ms"] = session.time_limit_ms();
  s["screens"] = ordered_json::array();
  for (const Screen& screen : session.screens()) s["screens"].push_back(screen_to_json(screen));
  ordered_json event;
  event["event"] = "created";
  event["at"] = to_iso8601(at);
  event["session"] = std::move(s);
  append_line(session.id(), event.dump());
}

void TrialStore::append_presented(const std::string& session_id, std::size_t index,
                                  TimePoint at) const {
  ordered_json event;
  event["event"] = "presented";
  event["index"] = index;
  event["at"] = to_iso8601(at);
  append_line(session_id, event.dump());
}

void TrialStore::append_response(const std::string& session_id, std::size_t index,
                                 std::optional<int> choice, bool timeout, double client_elapsed_ms,
                                 TimePoint at) const {
  ordered_json event;
  event["event"] = "response";
  event["index"] = index;
  event["choice"] = choice ? ordered_json(*choice) : ordered_json(nullptr);
  event["timeout"] = timeout;
  event["client_elapsed_ms"] = client_elapsed_ms;
  event["at"] = to_iso8601(at);
  append_line(session_id, event.dump());
}

TrialSession TrialStore::replay(const fs::path& log) {
  std::istringstream in(read_text(log));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  std::optional<TrialSession> session;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    json event;
    try {
      event = json::parse(lines[i]);
    } catch (const json::parse_error&) {
      if (i + 1 == lines.size() && session) break;  // torn tail
      throw Error(ErrorCode::kCorruptData, log.string() + ": unreadable line " + std::to_string(i + 1));
    }
    try {
      const std::string kind = event.at("event").get<std::string>();
      const TimePoint at = parse_iso8601(event.at("at").get<std::string>());
      if (kind == "created") {
        if (session) throw Error(ErrorCode::kCorruptData, log.string() + ": duplicate created event");
        const json& s = event.at("session");
        std::vector<Screen> screens;
        for (const json& screen : s.at("screens")) screens.push_back(screen_from_json(screen));
        session.emplace(s.at("id").get<std::string>(), s.at("participant").get<std::string>(),
                        s.at("plan_id").get<std::string>(), s.at("seed").get<std::uint64_t>(),
                        s.at("phase_names").get<std::vector<std::string>>(),
                        s.at("time_limit_ms").get<double>(), std::move(screens));
      } else if (!session) {
        throw Error(ErrorCode::kCorruptData, log.string() + ": log does not start with created");
      } else if (kind == "presented") {
        const std::size_t index = event.at("index").get<std::size_t>();
        if (session->present(at) != index) {
          throw Error(ErrorCode::kCorruptData, log.string() + ": presentation out of sequence");
        }
      } else if (kind == "response") {
        std::optional<int> choice;
        if (!event.at("choice").is_null()) choice = event["choice"].get<int>();
        session->respond(event.at("index").get<std::size_t>(), choice, event.at("timeout").get<bool>(),
                         event.at("client_elapsed_ms").get<double>(), at);
      } else {
        throw Error(ErrorCode::kCorruptData, log.string() + ": unknown event \"" + kind + "\"");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kCorruptData, log.string() + ": " + e.what());
    }
  }
  if (!session) throw Error(ErrorCode::kCorruptData, log.string() + ": empty session log");
  return *session;
}

std::vector<TrialSession> TrialStore::load_sessions() const {
  std::vector<fs::path> logs;
  for (const auto& entry : fs::directory_iterator(root_ / "sessions")) {
    if (entry.path().extension() == ".log") logs.push_back(entry.path());
  }
  std::sort(logs.begin(), logs.end());
  std::vector<TrialSession> sessions;
  for (const fs::path& log : logs) sessions.push_back(replay(log));
  return sessions;
}

}  // namespace provisim::trial
