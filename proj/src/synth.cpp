#include "axisedit/synth.hpp"

#include <random>

namespace axisedit {

std::vector<LabeledLatent> sample_mock_latents(const MockWorld& world, std::int64_t n, std::uint64_t seed) {
  world.validate();
  if (n < 0) throw InvalidArgument("sample_mock_latents: n must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Eigen::VectorXd& axis = world.true_axis;

  std::vector<LabeledLatent> out;
  out.reserve(static_cast<std::size_t>(n));
  Eigen::VectorXd v(world.geometry.dim);
  for (std::int64_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const Label label = u < world.male_fraction ? Label::Male : Label::Female;
    const ClassCluster& c = label == Label::Male ? world.male : world.female;
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = world.orthogonal_sigma * normal(rng);
    v -= v.dot(axis) * axis;
    v += (c.mu + c.sigma * normal(rng)) * axis;
    out.push_back({LatentVector(v), label});
  }
  return out;
}

}  // namespace axisedit
