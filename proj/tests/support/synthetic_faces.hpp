#pragma once

// Procedural cartoon faces with exact landmarks, standing in for photographs
// in tests. Identity changes head shape, skin tone and hair; expression moves
// the brows and mouth.

#include <filesystem>
#include <string>
#include <vector>

#include "provisim/image.hpp"
#include "provisim/landmarks.hpp"
#include "provisim/trial/plan.hpp"

namespace provisim::testing {

struct FaceSpec {
  int person = 0;
  std::string gender = "female";
  trial::Emotion emotion = trial::Emotion::kNeutral;
};

struct Face {
  ColorImage image;
  LandmarkSet landmarks;
};

Face render_face(const FaceSpec& spec, Index size);

/// Writes `persons` x 8 faces (one per emotion) with landmark sidecars into
/// `dir` and returns the stimulus manifest, paths relative to `dir`. Persons
/// alternate female/male.
std::vector<trial::Stimulus> write_face_corpus(const std::filesystem::path& dir, int persons,
                                               Index size);

/// Plan request JSON for `stimuli` with the given phase presets.
std::string plan_request_json(const std::vector<trial::Stimulus>& stimuli,
                              const std::vector<std::pair<std::string, std::string>>& phases,
                              const std::filesystem::path& base_dir, int repetitions = 24);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

}  // namespace provisim::testing
