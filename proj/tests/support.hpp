#pragma once

// Shared generators for the test suites.

#include <Eigen/Dense>

#include <cstdint>
#include <random>

#include "axisedit/latent.hpp"

namespace axisedit::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return normal_(rng_); }

  Eigen::VectorXd vector(Eigen::Index n, double scale = 1.0) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * normal();
    return v;
  }

  Eigen::VectorXd unit(Eigen::Index n) { return vector(n).normalized(); }

  ExtendedLatent extended(Eigen::Index layers, Eigen::Index dim, double scale = 1.0) {
    ExtendedLatent::Blocks b(layers, dim);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = scale * normal();
    return ExtendedLatent(std::move(b));
  }

  /// Random symmetric PSD matrix A A^T / n.
  Eigen::MatrixXd psd(Eigen::Index n) {
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal();
    Eigen::MatrixXd m = a * a.transpose() / static_cast<double>(n);
    return 0.5 * (m + m.transpose());
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

inline AttributeAxis axis_along(const Eigen::VectorXd& v) { return AttributeAxis::from_raw(v); }

inline AttributeAxis basis_axis(Eigen::Index dim, Eigen::Index k = 0) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
  e[k] = 1.0;
  return AttributeAxis::from_raw(e);
}

}  // namespace axisedit::testing
