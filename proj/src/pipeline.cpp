#include "provisim/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "provisim/digest.hpp"

namespace provisim {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Error config_error(const std::string& what) { return Error(ErrorCode::kInvalidConfig, what); }

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                std::string_view context) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (std::string_view a : allowed) known = known || key == a;
    if (!known) {
      throw config_error(std::string(context) + ": unknown field \"" + key + "\"");
    }
  }
}

double number_field(const json& obj, const char* key, std::string_view context) {
  if (!obj.contains(key)) {
    throw config_error(std::string(context) + ": missing \"" + key + "\"");
  }
  if (!obj[key].is_number()) {
    throw config_error(std::string(context) + ": \"" + key + "\" must be a number");
  }
  return obj[key].get<double>();
}

int int_field(const json& obj, const char* key, int fallback, std::string_view context) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) {
    throw config_error(std::string(context) + ": \"" + key + "\" must be an integer");
  }
  return obj[key].get<int>();
}

ToneCurve parse_curve(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw config_error("curve: expected {\"type\": \"gamma\"|\"sigmoid\", ...}");
  }
  const std::string type = j["type"].get<std::string>();
  try {
    if (type == "gamma") {
      check_keys(j, {"type", "gamma"}, "gamma curve");
      return GammaCurve<double>(number_field(j, "gamma", "gamma curve"));
    }
    if (type == "sigmoid") {
      check_keys(j, {"type", "gain", "shift"}, "sigmoid curve");
      return SigmoidCurve<double>(number_field(j, "gain", "sigmoid curve"),
                                  number_field(j, "shift", "sigmoid curve"));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidConfig) throw;
    throw config_error(e.what());
  }
  throw config_error("curve: unknown type \"" + type + "\"");
}

ordered_json curve_to_json(const ToneCurve& curve) {
  ordered_json j;
  if (const auto* g = std::get_if<GammaCurve<double>>(&curve)) {
    j["type"] = "gamma";
    j["gamma"] = g->gamma;
  } else {
    const auto& s = std::get<SigmoidCurve<double>>(curve);
    j["type"] = "sigmoid";
    j["gain"] = s.gain;
    j["shift"] = s.shift;
  }
  return j;
}

Stage parse_stage(const json& j) {
  if (!j.is_object() || !j.contains("stage") || !j["stage"].is_string()) {
    throw config_error("stage: expected an object with a \"stage\" name");
  }
  const std::string kind = j["stage"].get<std::string>();
  if (kind == "grayscale") {
    check_keys(j, {"stage"}, kind);
    return GrayscaleStage{};
  }
  if (kind == "enhance_landmarks") {
    check_keys(j, {"stage", "thickness_implant_px", "color_mode", "absolute_value", "darken_factor",
                   "grid_extent"},
               kind);
    EnhanceStage s;
    s.style.thickness_implant_px = number_field(j, "thickness_implant_px", kind);
    const std::string mode = j.value("color_mode", std::string("absolute"));
    if (mode == "absolute") {
      s.style.color_mode = ColorMode::kAbsolute;
      s.style.absolute_value = j.contains("absolute_value") ? number_field(j, "absolute_value", kind) : 0.0;
      s.style.darken_factor = EnhanceStyle{}.darken_factor;
    } else if (mode == "relative") {
      s.style.color_mode = ColorMode::kRelative;
      s.style.darken_factor = number_field(j, "darken_factor", kind);
      s.style.absolute_value = EnhanceStyle{}.absolute_value;
    } else {
      throw config_error(kind + ": color_mode must be \"absolute\" or \"relative\"");
    }
    if (j.contains("grid_extent")) s.grid_extent = number_field(j, "grid_extent", kind);
    return s;
  }
  if (kind == "inverse_tone" || kind == "tone") {
    check_keys(j, {"stage", "curve"}, kind);
    if (!j.contains("curve")) throw config_error(kind + ": missing \"curve\"");
    const ToneCurve curve = parse_curve(j["curve"]);
    if (kind == "tone") return ToneStage{curve};
    return InverseToneStage{curve};
  }
  if (kind == "dmd_quantize") {
    check_keys(j, {"stage", "levels"}, kind);
    return DmdQuantizeStage{int_field(j, "levels", 14, kind)};
  }
  if (kind == "quantize_levels") {
    check_keys(j, {"stage", "levels"}, kind);
    if (!j.contains("levels")) throw config_error(kind + ": missing \"levels\"");
    return QuantizeStage{int_field(j, "levels", 0, kind)};
  }
  if (kind == "lowpass") {
    check_keys(j, {"stage", "cutoff_cycles", "pixel_pitch_um", "implant_width_um", "taper"}, kind);
    LowpassStage s;
    s.taper = j.contains("taper") ? number_field(j, "taper", kind) : kDefaultTaper;
    const bool by_cutoff = j.contains("cutoff_cycles");
    const bool by_pitch = j.contains("pixel_pitch_um");
    if (by_cutoff == by_pitch) {
      throw config_error("lowpass: give exactly one of cutoff_cycles or pixel_pitch_um");
    }
    if (by_cutoff) {
      if (j.contains("implant_width_um")) {
        throw config_error("lowpass: implant_width_um only applies with pixel_pitch_um");
      }
      s.cutoff_cycles = number_field(j, "cutoff_cycles", kind);
    } else {
      const double width =
          j.contains("implant_width_um") ? number_field(j, "implant_width_um", kind) : kPrimaWidthUm;
      try {
        s.cutoff_cycles = preset_from_pitch(number_field(j, "pixel_pitch_um", kind), width).cutoff_cycles();
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kInvalidConfig) throw;
        throw config_error(std::string("lowpass: ") + e.what());
      }
    }
    return s;
  }
  throw config_error("unknown stage \"" + kind + "\"");
}

ordered_json stage_to_json(const Stage& stage) {
  ordered_json j;
  j["stage"] = std::string(stage_name(stage));
  std::visit(overloaded{
                 [](const GrayscaleStage&) {},
                 [&j](const EnhanceStage& s) {
                   j["thickness_implant_px"] = s.style.thickness_implant_px;
                   j["color_mode"] = std::string(to_string(s.style.color_mode));
                   if (s.style.color_mode == ColorMode::kAbsolute) {
                     j["absolute_value"] = s.style.absolute_value;
                   } else {
                     j["darken_factor"] = s.style.darken_factor;
                   }
                   j["grid_extent"] = s.grid_extent;
                 },
                 [&j](const InverseToneStage& s) { j["curve"] = curve_to_json(s.curve); },
                 [&j](const DmdQuantizeStage& s) { j["levels"] = s.levels; },
                 [&j](const LowpassStage& s) {
                   j["cutoff_cycles"] = s.cutoff_cycles;
                   j["taper"] = s.taper;
                 },
                 [&j](const ToneStage& s) { j["curve"] = curve_to_json(s.curve); },
                 [&j](const QuantizeStage& s) { j["levels"] = s.levels; },
             },
             stage);
  return j;
}

using Clock = std::chrono::steady_clock;

}  // namespace

std::string_view stage_name(const Stage& stage) {
  return std::visit(overloaded{
                        [](const GrayscaleStage&) { return std::string_view("grayscale"); },
                        [](const EnhanceStage&) { return std::string_view("enhance_landmarks"); },
                        [](const InverseToneStage&) { return std::string_view("inverse_tone"); },
                        [](const DmdQuantizeStage&) { return std::string_view("dmd_quantize"); },
                        [](const LowpassStage&) { return std::string_view("lowpass"); },
                        [](const ToneStage&) { return std::string_view("tone"); },
                        [](const QuantizeStage&) { return std::string_view("quantize_levels"); },
                    },
                    stage);
}

bool PipelineConfig::needs_landmarks() const {
  for (const Stage& s : stages) {
    if (std::holds_alternative<EnhanceStage>(s)) return true;
  }
  return false;
}

void validate(const PipelineConfig& cfg) {
  int lowpass_count = 0;
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    const Stage& stage = cfg.stages[i];
    const std::string where = "stage " + std::to_string(i) + " (" + std::string(stage_name(stage)) + ")";
    try {
      std::visit(overloaded{
                     [&](const GrayscaleStage&) {
                       if (i != 0) throw config_error(where + ": grayscale may only be the first stage");
                     },
                     [&](const EnhanceStage& s) {
                       validate(s.style);
                       if (!(s.grid_extent > 0)) throw config_error(where + ": grid_extent must be positive");
                     },
                     [](const InverseToneStage&) {},
                     [&](const DmdQuantizeStage& s) {
                       if (s.levels < 2) throw config_error(where + ": levels must be at least 2");
                     },
                     [&](const LowpassStage& s) {
                       SpectralFilter<double>(s.cutoff_cycles, s.taper);
                       if (++lowpass_count > 1) throw config_error(where + ": lowpass may appear at most once");
                     },
                     [](const ToneStage&) {},
                     [&](const QuantizeStage& s) {
                       if (s.levels < 2) throw config_error(where + ": levels must be at least 2");
                     },
                 },
                 stage);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kInvalidConfig) throw;
      throw config_error(where + ": " + e.what());
    }
  }
}

PipelineConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("config JSON: ") + e.what());
  }
  if (!doc.is_object()) throw config_error("config must be a JSON object");
  check_keys(doc, {"preset", "stages"}, "config");
  if (!doc.contains("preset") && !doc.contains("stages")) {
    throw config_error("config needs \"stages\" or \"preset\"");
  }

  PipelineConfig cfg;
  if (doc.contains("preset")) {
    if (!doc["preset"].is_string()) throw config_error("\"preset\" must be a string");
    cfg = preset(doc["preset"].get<std::string>());
  }
  if (doc.contains("stages")) {
    if (!doc["stages"].is_array()) throw config_error("\"stages\" must be an array");
    for (const json& s : doc["stages"]) {
      try {
        cfg.stages.push_back(parse_stage(s));
      } catch (const json::exception& e) {
        throw config_error(std::string("stage: ") + e.what());
      }
    }
  }
  validate(cfg);
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const PipelineConfig& cfg) {
  ordered_json doc;
  doc["stages"] = ordered_json::array();
  for (const Stage& s : cfg.stages) doc["stages"].push_back(stage_to_json(s));
  return doc.dump(2);
}

std::string config_hash(const PipelineConfig& cfg) { return sha256_hex(serialize_config(cfg)); }

Image simulate(const ColorImage& input, const PipelineConfig& cfg, const LandmarkSet* landmarks,
               std::vector<StageTiming>* timings) {
  validate(cfg);
  if (cfg.needs_landmarks() && landmarks == nullptr) {
    throw Error(ErrorCode::kMissingLandmarks, "config has an enhance_landmarks stage but no landmarks were supplied");
  }

  auto timed = [timings](std::string_view name, auto&& body) {
    const auto start = Clock::now();
    body();
    if (timings) {
      const std::chrono::duration<double, std::milli> elapsed = Clock::now() - start;
      timings->push_back({std::string(name), elapsed.count()});
    }
  };

  std::optional<Image> img;
  std::size_t first = 0;
  if (!cfg.stages.empty() && std::holds_alternative<GrayscaleStage>(cfg.stages.front())) {
    timed("grayscale", [&] { img = to_grayscale(input); });
    first = 1;
  } else {
    img = to_grayscale(input);
  }

  for (std::size_t i = first; i < cfg.stages.size(); ++i) {
    const Stage& stage = cfg.stages[i];
    timed(stage_name(stage), [&] {
      std::visit(overloaded{
                     [](const GrayscaleStage&) {},
                     [&](const EnhanceStage& s) {
                       img = enhance_features(*img, *landmarks, s.style, s.grid_extent);
                     },
                     [&](const InverseToneStage& s) { img = apply_inverse(*img, s.curve); },
                     [&](const DmdQuantizeStage& s) { img = quantize_levels(*img, s.levels); },
                     [&](const LowpassStage& s) {
                       img = lowpass(*img, SpectralFilter<double>(s.cutoff_cycles, s.taper));
                     },
                     [&](const ToneStage& s) { img = apply_curve(*img, s.curve); },
                     [&](const QuantizeStage& s) { img = quantize_levels(*img, s.levels); },
                 },
                 stage);
    });
  }
  return *img;
}

namespace {

struct PresetEntry {
  const char* name;
  const char* description;
  PipelineConfig (*build)();
};

LowpassStage lowpass_for_pitch(double pitch_um) {
  return LowpassStage{preset_from_pitch(pitch_um).cutoff_cycles(), kDefaultTaper};
}

const SigmoidCurve<double> kTrialSigmoid{30.0, kSigmoidShiftPreset};

const PresetEntry kPresets[] = {
    {"prima-100", "100 um pixels on a 2 mm array: grayscale, lowpass at 10 cycles/image",
     [] { return PipelineConfig{{GrayscaleStage{}, lowpass_for_pitch(100.0)}}; }},
    {"future-50", "50 um pixels on a 2 mm array: grayscale, lowpass at 20 cycles/image",
     [] { return PipelineConfig{{GrayscaleStage{}, lowpass_for_pitch(50.0)}}; }},
    {"future-20", "20 um pixels on a 2 mm array: grayscale, lowpass at 50 cycles/image",
     [] { return PipelineConfig{{GrayscaleStage{}, lowpass_for_pitch(20.0)}}; }},
    {"paper-trial-phase1", "unenhanced trial stimuli: prima-100 then sigmoid(gain 30, shift 0.2)",
     [] {
       return PipelineConfig{{GrayscaleStage{}, lowpass_for_pitch(100.0), ToneStage{kTrialSigmoid}}};
     }},
    {"paper-trial-phase2",
     "enhanced trial stimuli: landmarks (0.3 px, 50% darker), inverse sigmoid, 14-level "
     "projector quantisation, then the phase-1 chain",
     [] {
       EnhanceStage enhance;
       enhance.style.thickness_implant_px = 0.3;
       enhance.style.color_mode = ColorMode::kRelative;
       enhance.style.darken_factor = 0.5;
       enhance.grid_extent = preset_from_pitch(100.0).grid_extent();
       return PipelineConfig{{GrayscaleStage{}, enhance, InverseToneStage{kTrialSigmoid},
                              DmdQuantizeStage{14}, lowpass_for_pitch(100.0),
                              ToneStage{kTrialSigmoid}}};
     }},
    {"baseline", "no processing (natural images)", [] { return PipelineConfig{}; }},
};

const PresetEntry* find_preset(std::string_view name) {
  for (const PresetEntry& p : kPresets) {
    if (name == p.name) return &p;
  }
  return nullptr;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const PresetEntry& p : kPresets) names.emplace_back(p.name);
  return names;
}

PipelineConfig preset(std::string_view name) {
  const PresetEntry* p = find_preset(name);
  if (!p) throw config_error("unknown preset \"" + std::string(name) + "\"");
  return p->build();
}

std::string preset_description(std::string_view name) {
  const PresetEntry* p = find_preset(name);
  if (!p) throw config_error("unknown preset \"" + std::string(name) + "\"");
  return p->description;
}

PipelineConfig with_tone(PipelineConfig cfg, const ToneCurve& curve) {
  cfg.stages.push_back(ToneStage{curve});
  return cfg;
}

}  // namespace provisim
