#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "provisim/image.hpp"
#include "provisim/landmarks.hpp"
#include "provisim/spectral.hpp"
#include "provisim/tone.hpp"

namespace provisim {

struct GrayscaleStage {
  friend bool operator==(const GrayscaleStage&, const GrayscaleStage&) = default;
};

struct EnhanceStage {
  EnhanceStyle style;
  double grid_extent = 20.0;
  friend bool operator==(const EnhanceStage&, const EnhanceStage&) = default;
};

struct InverseToneStage {
  ToneCurve curve;
  friend bool operator==(const InverseToneStage&, const InverseToneStage&) = default;
};

/// Projector quantisation of the stimulus before it reaches the retina.
struct DmdQuantizeStage {
  int levels = 14;
  friend bool operator==(const DmdQuantizeStage&, const DmdQuantizeStage&) = default;
};

struct LowpassStage {
  double cutoff_cycles = 10.0;
  double taper = kDefaultTaper;
  friend bool operator==(const LowpassStage&, const LowpassStage&) = default;
};

struct ToneStage {
  ToneCurve curve;
  friend bool operator==(const ToneStage&, const ToneStage&) = default;
};

/// Perceptual grey-level limit applied to the percept.
struct QuantizeStage {
  int levels = 8;
  friend bool operator==(const QuantizeStage&, const QuantizeStage&) = default;
};

using Stage = std::variant<GrayscaleStage, EnhanceStage, InverseToneStage, DmdQuantizeStage,
                           LowpassStage, ToneStage, QuantizeStage>;

std::string_view stage_name(const Stage& stage);

/// Ordered stage list, applied exactly as listed. Colour input is always
/// reduced to luminance; an explicit grayscale stage may only come first.
struct PipelineConfig {
  std::vector<Stage> stages;

  bool needs_landmarks() const;
  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Throws kInvalidConfig.
void validate(const PipelineConfig& cfg);

/// Accepts either explicit "stages", a "preset" name, or a preset followed by
/// extra stages. Throws kInvalidConfig on anything it does not understand.
PipelineConfig parse_config(std::string_view json_text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Canonical JSON: explicit stages, fixed key order, only the fields a stage
/// actually uses.
std::string serialize_config(const PipelineConfig& cfg);

/// SHA-256 of the canonical serialisation.
std::string config_hash(const PipelineConfig& cfg);

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

/// Runs the stages on `img`. `landmarks` must be provided when the config has
/// an enhance stage (kMissingLandmarks otherwise).
Image simulate(const ColorImage& img, const PipelineConfig& cfg,
               const LandmarkSet* landmarks = nullptr,
               std::vector<StageTiming>* timings = nullptr);

// Named presets.
std::vector<std::string> preset_names();
/// Throws kInvalidConfig for unknown names.
PipelineConfig preset(std::string_view name);
std::string preset_description(std::string_view name);

/// `cfg` with a tone stage appended.
PipelineConfig with_tone(PipelineConfig cfg, const ToneCurve& curve);

}  // namespace provisim
