#pragma once

#include <cstdint>
#include <vector>

#include "axisedit/backend.hpp"
#include "axisedit/svm.hpp"

namespace axisedit {

/// Draws `n` labeled W latents from the mock world: the score along
/// true_axis is N(mu, sigma^2) of the row's class, the orthogonal part is
/// isotropic N(0, orthogonal_sigma^2). Labels are Bernoulli(male_fraction).
/// Reproducible for a fixed seed.
std::vector<LabeledLatent> sample_mock_latents(const MockWorld& world, std::int64_t n, std::uint64_t seed);

}  // namespace axisedit
