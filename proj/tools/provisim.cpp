// provisim: command-line front end for the prosthetic-vision simulator.
//
// Exit status: 0 on success, 1 when processing failed (for batches: at least
// one input failed), 2 for invalid configuration or usage.

// Eigen must come before httplib: <resolv.h> defines a `_res` macro.
#include "provisim/batch.hpp"
#include "provisim/charts.hpp"
#include "provisim/error.hpp"
#include "provisim/image_io.hpp"
#include "provisim/landmarks.hpp"
#include "provisim/pipeline.hpp"
#include "provisim/trial/http_api.hpp"
#include "provisim/trial/service.hpp"

#include <CLI11.hpp>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <httplib.h>
#include <iostream>

namespace fs = std::filesystem;
using namespace provisim;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

// "gamma:3.5" or "sigmoid:30,0.2"
ToneCurve parse_tone(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
  try {
    if (kind == "gamma") return GammaCurve<double>(std::stod(args));
    if (kind == "sigmoid") {
      const auto comma = args.find(',');
      const double gain = std::stod(args.substr(0, comma));
      const double shift = comma == std::string::npos ? kSigmoidShiftPreset : std::stod(args.substr(comma + 1));
      return SigmoidCurve<double>(gain, shift);
    }
  } catch (const std::logic_error&) {
  }
  throw Error(ErrorCode::kInvalidConfig, "tone must look like gamma:<g> or sigmoid:<gain>[,<shift>]");
}

PipelineConfig resolve_config(const std::string& config_path, const std::string& preset_name,
                              const std::string& tone) {
  PipelineConfig cfg = config_path.empty() ? preset(preset_name) : load_config(config_path);
  if (!tone.empty()) cfg = with_tone(std::move(cfg), parse_tone(tone));
  validate(cfg);
  return cfg;
}

bool is_config_error(ErrorCode code) {
  return code == ErrorCode::kInvalidConfig || code == ErrorCode::kInvalidArgument;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kUnwritable, "cannot write " + path.string());
  out << text;
}

struct SimulateArgs {
  std::string in, out, config, preset = "prima-100", landmarks, tone;
  bool timings = false;
};

int run_simulate(const SimulateArgs& a) {
  const PipelineConfig cfg = resolve_config(a.config, a.preset, a.tone);
  const ColorImage input = load_image(a.in);
  std::optional<LandmarkSet> lm;
  if (!a.landmarks.empty()) {
    lm = load_landmarks(a.landmarks);
  } else if (cfg.needs_landmarks() && fs::exists(landmark_sidecar(a.in))) {
    lm = load_landmarks(landmark_sidecar(a.in));
  }
  std::vector<StageTiming> timings;
  const Image out = simulate(input, cfg, lm ? &*lm : nullptr, &timings);
  save_image(out, a.out);
  if (a.timings) {
    for (const StageTiming& t : timings) std::fprintf(stderr, "%-18s %9.3f ms\n", t.stage.c_str(), t.ms);
  }
  return 0;
}

struct LandoltArgs {
  LandoltSpec spec;
  std::string orientation = "right", out, simulate_preset;
};

int run_landolt(LandoltArgs a) {
  const auto o = parse_orientation(a.orientation);
  if (!o) throw Error(ErrorCode::kInvalidArgument, "orientation must be up, down, left or right");
  a.spec.orientation = *o;
  validate(a.spec);
  Image img = render_landolt(a.spec);
  if (!a.simulate_preset.empty()) {
    const PipelineConfig cfg = preset(a.simulate_preset);
    const Degradation degrade = [&cfg](const Image& clean) {
      return simulate(ColorImage::from_gray(clean), cfg);
    };
    img = degrade(img);
    const Orientation seen = classify_gap_orientation(img, a.spec, degrade);
    std::printf("presented %s, classified %s\n", std::string(to_string(*o)).c_str(),
                std::string(to_string(seen)).c_str());
  }
  save_image(img, a.out);
  return 0;
}

struct CampbellArgs {
  CampbellRobsonSpec spec;
  std::string out, simulate_preset;
};

int run_campbell(const CampbellArgs& a) {
  validate(a.spec);
  Image img = render_campbell_robson(a.spec);
  if (!a.simulate_preset.empty()) img = simulate(ColorImage::from_gray(img), preset(a.simulate_preset));
  save_image(img, a.out);
  return 0;
}

struct BatchArgs {
  std::string config, preset = "prima-100", in_dir, out_dir, report, tone, format = "png";
  unsigned jobs = 1;
};

int run_batch_cmd(const BatchArgs& a) {
  const PipelineConfig cfg = resolve_config(a.config, a.preset, a.tone);
  BatchOptions options;
  options.jobs = a.jobs;
  options.output_extension = "." + a.format;
  const std::vector<RunRecord> report = run_batch(a.in_dir, cfg, a.out_dir, options);
  const std::string json = report_to_json(report);
  if (a.report.empty()) {
    std::cout << json << '\n';
  } else {
    write_text(a.report, json + "\n");
  }
  std::size_t failed = 0;
  for (const RunRecord& r : report) {
    if (!r.ok()) {
      ++failed;
      std::fprintf(stderr, "%s: %s\n", r.input.string().c_str(), r.error_message.c_str());
    }
  }
  std::fprintf(stderr, "%zu of %zu inputs processed\n", report.size() - failed, report.size());
  return failed ? kExitFailure : 0;
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

struct ServeArgs {
  std::string data_dir = "trial-data", host = "127.0.0.1", plan_base = ".";
  int port = 8080;
};

int run_serve(const ServeArgs& a) {
  trial::TrialService service(a.data_dir);
  httplib::Server server;
  trial::register_routes(server, service, fs::absolute(a.plan_base));
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  std::fprintf(stderr, "listening on http://%s:%d (data in %s)\n", a.host.c_str(), a.port,
               a.data_dir.c_str());
  if (!server.listen(a.host, a.port)) {
    std::fprintf(stderr, "cannot listen on %s:%d\n", a.host.c_str(), a.port);
    return kExitFailure;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated prosthetic vision: image pipeline, test charts and trial service"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run one image through a pipeline");
  simulate_cmd->add_option("--in", sim.in, "Input PNG or PGM")->required()->check(CLI::ExistingFile);
  simulate_cmd->add_option("--out", sim.out, "Output image (.png or .pgm)")->required();
  auto* cfg_opt = simulate_cmd->add_option("--config", sim.config, "Pipeline JSON")->check(CLI::ExistingFile);
  simulate_cmd->add_option("--preset", sim.preset, "Named preset (see `presets list`)")
      ->excludes(cfg_opt)
      ->capture_default_str();
  simulate_cmd->add_option("--landmarks", sim.landmarks, "Landmark JSON (default: sidecar file)");
  simulate_cmd->add_option("--tone", sim.tone, "Append a tone curve: gamma:<g> or sigmoid:<gain>[,<shift>]");
  simulate_cmd->add_flag("--timings", sim.timings, "Print per-stage timings to stderr");

  auto* charts_cmd = app.add_subcommand("charts", "Render test charts");
  charts_cmd->require_subcommand(1);
  LandoltArgs landolt;
  auto* landolt_cmd = charts_cmd->add_subcommand("landolt", "Landolt C optotype");
  landolt_cmd->add_option("--gap", landolt.spec.gap_pixels, "Gap width in implant pixels")->capture_default_str();
  landolt_cmd->add_option("--orientation", landolt.orientation, "up, down, left or right")->capture_default_str();
  landolt_cmd->add_option("--grid", landolt.spec.grid_extent, "Field width in implant pixels")->capture_default_str();
  landolt_cmd->add_option("--size", landolt.spec.raster_size, "Raster size in samples")->capture_default_str();
  landolt_cmd->add_flag("--invert", landolt.spec.invert, "Light letter on a dark field");
  landolt_cmd->add_option("--simulate", landolt.simulate_preset,
                          "Pass through a preset and report the classified orientation");
  landolt_cmd->add_option("--out", landolt.out)->required();

  CampbellArgs campbell;
  auto* cr_cmd = charts_cmd->add_subcommand("campbell-robson", "Contrast-sensitivity chirp grating");
  cr_cmd->add_option("--size", campbell.spec.raster_size)->capture_default_str();
  cr_cmd->add_option("--freq-min", campbell.spec.freq_min, "Cycles per image at the left edge")->capture_default_str();
  cr_cmd->add_option("--freq-max", campbell.spec.freq_max, "Cycles per image at the right edge")->capture_default_str();
  cr_cmd->add_option("--contrast-min", campbell.spec.contrast_min)->capture_default_str();
  cr_cmd->add_option("--contrast-max", campbell.spec.contrast_max)->capture_default_str();
  cr_cmd->add_option("--mean", campbell.spec.mean_luminance)->capture_default_str();
  cr_cmd->add_option("--simulate", campbell.simulate_preset, "Pass the chart through a preset");
  cr_cmd->add_option("--out", campbell.out)->required();

  auto* presets_cmd = app.add_subcommand("presets", "Inspect named pipeline presets");
  presets_cmd->require_subcommand(1);
  auto* presets_list = presets_cmd->add_subcommand("list", "List preset names");
  std::string show_name;
  auto* presets_show = presets_cmd->add_subcommand("show", "Print a preset as pipeline JSON");
  presets_show->add_option("name", show_name)->required();

  BatchArgs batch;
  auto* batch_cmd = app.add_subcommand("batch", "Process a directory of images");
  auto* bcfg = batch_cmd->add_option("--config", batch.config, "Pipeline JSON")->check(CLI::ExistingFile);
  batch_cmd->add_option("--preset", batch.preset)->excludes(bcfg)->capture_default_str();
  batch_cmd->add_option("--tone", batch.tone);
  batch_cmd->add_option("--in-dir", batch.in_dir)->required()->check(CLI::ExistingDirectory);
  batch_cmd->add_option("--out-dir", batch.out_dir)->required();
  batch_cmd->add_option("--jobs,-j", batch.jobs)->check(CLI::Range(1u, 256u))->capture_default_str();
  batch_cmd->add_option("--format", batch.format)->check(CLI::IsMember({"png", "pgm"}))->capture_default_str();
  batch_cmd->add_option("--report", batch.report, "Write the JSON run report here (default: stdout)");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the trial HTTP service");
  serve_cmd->add_option("--data-dir", serve.data_dir)->capture_default_str();
  serve_cmd->add_option("--host", serve.host)->capture_default_str();
  serve_cmd->add_option("--port", serve.port)->capture_default_str();
  serve_cmd->add_option("--plan-base", serve.plan_base, "Base for relative stimulus paths in plans")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate_cmd) return run_simulate(sim);
    if (*landolt_cmd) return run_landolt(landolt);
    if (*cr_cmd) return run_campbell(campbell);
    if (*presets_list) {
      for (const std::string& name : preset_names()) {
        std::printf("%-20s %s\n", name.c_str(), preset_description(name).c_str());
      }
      return 0;
    }
    if (*presets_show) {
      const PipelineConfig cfg = preset(show_name);
      std::printf("%s\n", serialize_config(cfg).c_str());
      std::fprintf(stderr, "sha256 %s\n", config_hash(cfg).c_str());
      return 0;
    }
    if (*batch_cmd) return run_batch_cmd(batch);
    if (*serve_cmd) return run_serve(serve);
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return is_config_error(e.code()) ? kExitConfig : kExitFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return 0;
}
