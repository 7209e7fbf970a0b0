#pragma once

// Persistence of trained axes and class distributions.
//
// Axis files are a JSON header ({stem}.json) next to a one-row dataset
// ({stem}.weights.*) holding the raw separator weights as float32.

#include <string>

#include "axisedit/latent.hpp"
#include "axisedit/stats.hpp"
#include "axisedit/svm.hpp"

namespace axisedit {

struct AxisFile {
  SvmModel model;
  AttributeAxis axis;
  /// Checksum of the weight payload; distributions refer to it.
  std::string fingerprint;
};

/// `path` must end in ".json". Returns the payload fingerprint.
std::string save_axis(const std::string& path, const SvmModel& model, const AttributeAxis& axis);
AxisFile load_axis(const std::string& path);

void save_distribution(const std::string& path, const ClassDistribution& dist);
ClassDistribution load_distribution(const std::string& path);

std::string distribution_to_json(const ClassDistribution& dist);
ClassDistribution distribution_from_json(const std::string& text);

}  // namespace axisedit
