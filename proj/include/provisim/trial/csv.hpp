#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "provisim/trial/session.hpp"

namespace provisim::trial {

inline constexpr std::string_view kResultsHeader =
    "session,participant,phase,task,emotion,stimulus_0,stimulus_1,stimulus_2,stimulus_3,"
    "correct_index,chosen_index,is_correct,is_timeout,rt_ms,presented_at,responded_at,"
    "server_elapsed_ms,timing_suspect";

inline constexpr std::string_view kSummaryHeader =
    "scope,plan,session,participant,phase,task,emotion,count,correct,accuracy,mean_rt_ms";

/// One row per answered screen, sessions in the given order. Unfinished
/// sessions are rejected (kSessionUnfinished).
std::string results_csv(const std::vector<TrialSession>& sessions);

/// Per-session rows (scope "session") followed by cross-session means per
/// plan (scope "group").
std::string summary_csv(const std::vector<TrialSession>& sessions);

/// Writes `results_csv` to `path` and `summary_csv` next to it as
/// `<stem>_summary.csv`.
void export_results(const std::vector<TrialSession>& sessions, const std::filesystem::path& path);

/// RFC 4180 field splitting (quoted fields, doubled quotes).
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Checks a document against the summary schema; returns the number of data
/// rows. Throws kCorruptData describing the first violation.
std::size_t validate_summary_csv(std::string_view text);

}  // namespace provisim::trial
