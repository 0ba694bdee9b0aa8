#pragma once

#include <filesystem>

#include "provisim/error.hpp"
#include "provisim/trial/service.hpp"

namespace httplib {
class Server;
}

namespace provisim::trial {

/// HTTP status for a service error: 404 for unknown ids, 409 for state
/// conflicts, 422 for requests that parse but are not acceptable.
int http_status(ErrorCode code);

/// Installs the JSON API on `server`. Relative stimulus paths in posted plans
/// resolve against `plan_base_dir`. `service` must outlive the server.
///
///   POST /plans                        create (or fetch) a plan
///   GET  /plans/{id}                   plan document
///   GET  /plans/{id}/summary           group summary of finished sessions
///   POST /sessions                     {plan_id, participant, seed?}
///   GET  /sessions/{id}                progress
///   GET  /sessions/{id}/next           present next screen (?resume=true)
///   POST /sessions/{id}/responses      {screen_index, choice, timeout, client_elapsed_ms}
///   GET  /sessions/{id}/summary        per-session summary
///   GET  /export.csv                   per-screen results
///   GET  /export_summary.csv           summary rows
///   GET  /stimuli/{sha256}.png         rendered stimulus
///
/// Errors come back as {"error": <code>, "message": <text>}.
void register_routes(httplib::Server& server, TrialService& service,
                     std::filesystem::path plan_base_dir);

}  // namespace provisim::trial
