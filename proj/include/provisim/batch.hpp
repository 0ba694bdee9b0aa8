#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "provisim/pipeline.hpp"

namespace provisim {

/// One line of a batch run report.
struct RunRecord {
  std::filesystem::path input;
  std::filesystem::path output;  // empty on failure
  std::vector<StageTiming> timings;
  std::string config_hash;
  std::optional<ErrorCode> error_code;
  std::string error_message;

  bool ok() const { return !error_code.has_value(); }
};

struct BatchOptions {
  unsigned jobs = 1;
  /// Output container, ".png" or ".pgm".
  std::string output_extension = ".png";
};

/// Sidecar landmark file expected next to `image` when the config enhances
/// features: `<stem>.landmarks.json`.
std::filesystem::path landmark_sidecar(const std::filesystem::path& image);

/// Processes every .png/.pgm file directly inside `input_dir` (sorted by
/// name) into `output_dir/<stem><ext>`. Failures are recorded per file and do
/// not stop the run. Records come back in input order.
std::vector<RunRecord> run_batch(const std::filesystem::path& input_dir, const PipelineConfig& cfg,
                                 const std::filesystem::path& output_dir,
                                 const BatchOptions& options = {});

std::string report_to_json(const std::vector<RunRecord>& report);

}  // namespace provisim
