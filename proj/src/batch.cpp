#include "provisim/batch.hpp"

#include <algorithm>
#include <atomic>
#include <nlohmann/json.hpp>
#include <thread>

#include "provisim/image_io.hpp"

namespace provisim {

namespace fs = std::filesystem;

namespace {

bool is_supported_image(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".pgm";
}

RunRecord process_one(const fs::path& input, const PipelineConfig& cfg, const std::string& hash,
                      const fs::path& output_dir, const std::string& extension) {
  RunRecord record;
  record.input = input;
  record.config_hash = hash;
  try {
    const ColorImage img = load_image(input);
    std::optional<LandmarkSet> landmarks;
    if (cfg.needs_landmarks()) {
      const fs::path sidecar = landmark_sidecar(input);
      if (!fs::exists(sidecar)) {
        throw Error(ErrorCode::kMissingLandmarks, "no landmark file " + sidecar.string());
      }
      landmarks = load_landmarks(sidecar);
    }
    const Image out = simulate(img, cfg, landmarks ? &*landmarks : nullptr, &record.timings);
    const fs::path target = output_dir / (input.stem().string() + extension);
    save_image(out, target);
    record.output = target;
  } catch (const Error& e) {
    record.error_code = e.code();
    record.error_message = e.what();
    record.timings.clear();
  } catch (const std::exception& e) {
    record.error_code = ErrorCode::kIo;
    record.error_message = e.what();
    record.timings.clear();
  }
  return record;
}

}  // namespace

fs::path landmark_sidecar(const fs::path& image) {
  return image.parent_path() / (image.stem().string() + ".landmarks.json");
}

std::vector<RunRecord> run_batch(const fs::path& input_dir, const PipelineConfig& cfg,
                                 const fs::path& output_dir, const BatchOptions& options) {
  validate(cfg);
  if (options.output_extension != ".png" && options.output_extension != ".pgm") {
    throw Error(ErrorCode::kInvalidArgument, "batch output extension must be .png or .pgm");
  }
  std::error_code ec;
  if (!fs::is_directory(input_dir, ec)) {
    throw Error(ErrorCode::kUnreadable, "input directory " + input_dir.string() + " not found");
  }
  fs::create_directories(output_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kUnwritable, "cannot create " + output_dir.string() + ": " + ec.message());
  }

  std::vector<fs::path> inputs;
  for (const fs::directory_entry& entry : fs::directory_iterator(input_dir)) {
    if (entry.is_regular_file() && is_supported_image(entry.path())) inputs.push_back(entry.path());
  }
  std::sort(inputs.begin(), inputs.end());

  const std::string hash = config_hash(cfg);
  std::vector<RunRecord> report(inputs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < inputs.size(); i = next++) {
      report[i] = process_one(inputs[i], cfg, hash, output_dir, options.output_extension);
    }
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(inputs.size())));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  return report;
}

std::string report_to_json(const std::vector<RunRecord>& report) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const RunRecord& r : report) {
    nlohmann::ordered_json j;
    j["input"] = r.input.string();
    j["output"] = r.output.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.output.string());
    j["config_hash"] = r.config_hash;
    j["timings_ms"] = nlohmann::ordered_json::array();
    for (const StageTiming& t : r.timings) j["timings_ms"].push_back({{"stage", t.stage}, {"ms", t.ms}});
    if (r.error_code) {
      j["error"] = {{"code", std::string(to_string(*r.error_code))}, {"message", r.error_message}};
    }
    doc.push_back(std::move(j));
  }
  return doc.dump(2);
}

}  // namespace provisim
