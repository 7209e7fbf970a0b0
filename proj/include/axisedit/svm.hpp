#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "axisedit/label.hpp"
#include "axisedit/latent.hpp"

namespace axisedit {

struct LabeledLatent {
  LatentVector vector;
  Label label;
};

struct SvmHyperparams {
  double lambda = 1e-2;
  std::int64_t epochs = 50;
  std::uint64_t seed = 0;
  /// Examples per subgradient step; 0 uses the whole set.
  std::int64_t batch_size = 64;
};

/// Linear separator w.x + b; positive side is Male.
struct SvmModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  SvmHyperparams hyperparams;
  std::int64_t training_size = 0;

  double decision(const Eigen::VectorXd& x) const { return weights.dot(x) + bias; }
};

/// L2-regularized hinge loss minimized by seeded mini-batch subgradient
/// descent (Pegasos step size 1/(lambda t)) on inputs rescaled to unit RMS
/// norm. The returned weights are the average of the iterates over the last
/// half of the epochs, expressed in the original input scale. Bitwise
/// deterministic for a fixed seed.
SvmModel train_svm(std::span<const LabeledLatent> data, const SvmHyperparams& hp = {});

/// Unit normal of the hyperplane, signed so that male examples in
/// `orientation` project higher on average than female ones.
AttributeAxis extract_axis(const SvmModel& model, std::span<const LabeledLatent> orientation);

/// Fraction of examples on the correct side of the hyperplane.
double training_accuracy(const SvmModel& model, std::span<const LabeledLatent> data);

}  // namespace axisedit
