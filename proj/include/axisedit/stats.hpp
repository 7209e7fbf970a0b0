#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "axisedit/label.hpp"
#include "axisedit/latent.hpp"

namespace axisedit {

/// Score distribution of one class on the attribute axis with its
/// mu +/- 2 sigma edit bounds.
struct ClassDistribution {
  Label label = Label::Male;
  double mu = 0.0;
  double sigma = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::int64_t n = 0;
  bool degenerate = false;
  std::string axis_fingerprint;

  /// Builds a distribution from known moments; bounds follow mu +/- 2 sigma.
  static ClassDistribution from_moments(Label label, double mu, double sigma, std::int64_t n);
};

/// Single-pass mean / variance (Welford).
class RunningMoments {
 public:
  void push(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::int64_t count() const { return n_; }
  double mean() const { return mean_; }
  double population_variance() const { return n_ > 0 ? m2_ / static_cast<double>(n_) : 0.0; }
  double sample_variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Sample mean and population standard deviation (divide by n) of the
/// scores. Zero spread sets `degenerate` and collapses the bounds to mu.
ClassDistribution fit_distribution(std::span<const Score> scores, Label label);

struct GaussianFit {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Streaming mean / covariance accumulator over feature vectors.
class GaussianAccumulator {
 public:
  explicit GaussianAccumulator(Eigen::Index dim);
  void push(const Eigen::Ref<const Eigen::VectorXd>& x);
  std::int64_t count() const { return n_; }
  Eigen::Index dim() const { return mean_.size(); }
  /// Sample covariance (n - 1), symmetrized.
  GaussianFit finish() const;

 private:
  std::int64_t n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd comoment_;
};

GaussianFit fit_gaussian(std::span<const Eigen::VectorXd> features);

/// Symmetric PSD square root; negative eigenvalues are clamped at zero.
Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& m);

/// |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}), clamped at zero.
double frechet_distance(const GaussianFit& a, const GaussianFit& b);

struct HistogramBin {
  double center;
  std::int64_t count;
};

/// Equal-width histogram over [lo, hi]; values outside are clamped to the
/// edge bins.
std::vector<HistogramBin> histogram(std::span<const Score> scores, double lo, double hi, int bins);

/// Writes `bin_center,count,label` rows (with header) for each class.
void write_histogram_csv(std::ostream& os, const std::vector<std::pair<Label, std::vector<HistogramBin>>>& classes);

}  // namespace axisedit
