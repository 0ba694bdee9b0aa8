#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "provisim/trial/plan.hpp"
#include "provisim/trial/session.hpp"

namespace provisim::trial {

/// On-disk layout under a data directory:
///
///   plans/<plan id>.json        plan with its rendered-stimulus map
///   sessions/<session id>.log   append-only JSON lines, one event per line
///   stimuli/<sha256>.png        pre-rendered stimuli, content addressed
///
/// The session log is the source of truth. Every append is flushed and
/// fsync'ed before returning.
class TrialStore {
 public:
  explicit TrialStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path stimuli_dir() const { return root_ / "stimuli"; }
  std::filesystem::path session_log(const std::string& session_id) const;

  void save_plan(const TrialPlan& plan) const;
  std::vector<TrialPlan> load_plans() const;

  void append_created(const TrialSession& session, TimePoint at) const;
  void append_presented(const std::string& session_id, std::size_t index, TimePoint at) const;
  void append_response(const std::string& session_id, std::size_t index, std::optional<int> choice,
                       bool timeout, double client_elapsed_ms, TimePoint at) const;

  /// Rebuilds a session by re-applying its log. A torn final line (partial
  /// write) is ignored; corruption anywhere else throws kCorruptData.
  static TrialSession replay(const std::filesystem::path& log);
  std::vector<TrialSession> load_sessions() const;

 private:
  void append_line(const std::string& session_id, const std::string& line) const;

  std::filesystem::path root_;
};

}  // namespace provisim::trial
