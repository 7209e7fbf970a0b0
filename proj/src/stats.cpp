#include "axisedit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace axisedit {

ClassDistribution ClassDistribution::from_moments(Label label, double mu, double sigma, std::int64_t n) {
  if (!std::isfinite(mu) || !std::isfinite(sigma) || sigma < 0.0) {
    throw InvalidArgument("class distribution: mu must be finite and sigma >= 0");
  }
  ClassDistribution d;
  d.label = label;
  d.mu = mu;
  d.sigma = sigma;
  d.lower = mu - 2.0 * sigma;
  d.upper = mu + 2.0 * sigma;
  d.n = n;
  d.degenerate = sigma == 0.0;
  return d;
}

ClassDistribution fit_distribution(std::span<const Score> scores, Label label) {
  if (scores.size() < 2) throw InvalidArgument("fit_distribution: need at least two scores");
  RunningMoments m;
  for (double s : scores) {
    if (!std::isfinite(s)) throw InvalidArgument("fit_distribution: non-finite score");
    m.push(s);
  }
  return ClassDistribution::from_moments(label, m.mean(), std::sqrt(m.population_variance()), m.count());
}

GaussianAccumulator::GaussianAccumulator(Eigen::Index dim)
    : mean_(Eigen::VectorXd::Zero(dim)), comoment_(Eigen::MatrixXd::Zero(dim, dim)) {
  if (dim <= 0) throw DimensionError("fit_gaussian: dimension must be positive");
}

void GaussianAccumulator::push(const Eigen::Ref<const Eigen::VectorXd>& x) {
  detail::require_same_dim(x.size(), mean_.size(), "fit_gaussian");
  ++n_;
  const Eigen::VectorXd d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  comoment_.selfadjointView<Eigen::Lower>().rankUpdate(d, 1.0 - 1.0 / static_cast<double>(n_));
}

GaussianFit GaussianAccumulator::finish() const {
  if (n_ < 2) throw InvalidArgument("fit_gaussian: need at least two samples");
  Eigen::MatrixXd cov = comoment_.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n_ - 1);
  return {mean_, 0.5 * (cov + cov.transpose())};
}

GaussianFit fit_gaussian(std::span<const Eigen::VectorXd> features) {
  if (features.size() < 2) throw InvalidArgument("fit_gaussian: need at least two samples");
  GaussianAccumulator acc(features.front().size());
  for (const auto& f : features) acc.push(f);
  return acc.finish();
}

Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw InvalidArgument("sqrtm_psd: eigendecomposition failed");
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

void check_fit(const GaussianFit& g, const char* which) {
  const auto d = g.mean.size();
  if (g.covariance.rows() != d || g.covariance.cols() != d) {
    throw DimensionError(std::string("frechet_distance: covariance of ") + which + " does not match its mean");
  }
  const double scale = std::max(1.0, g.covariance.cwiseAbs().maxCoeff());
  if ((g.covariance - g.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw InvalidArgument(std::string("frechet_distance: covariance of ") + which + " is not symmetric");
  }
}

}  // namespace

double frechet_distance(const GaussianFit& a, const GaussianFit& b) {
  detail::require_same_dim(a.mean.size(), b.mean.size(), "frechet_distance");
  check_fit(a, "a");
  check_fit(b, "b");

  // Tr (S_a S_b)^{1/2} = Tr (S_a^{1/2} S_b S_a^{1/2})^{1/2}; the inner
  // product is symmetric PSD so the eigen route applies.
  const Eigen::MatrixXd root_a = sqrtm_psd(a.covariance);
  Eigen::MatrixXd inner = root_a * b.covariance * root_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw InvalidArgument("frechet_distance: eigendecomposition failed");
  const double tr_cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double dist = (a.mean - b.mean).squaredNorm() + a.covariance.trace() + b.covariance.trace() - 2.0 * tr_cross;
  return std::max(dist, 0.0);
}

std::vector<HistogramBin> histogram(std::span<const Score> scores, double lo, double hi, int bins) {
  if (bins <= 0 || !(hi > lo)) throw InvalidArgument("histogram: need bins > 0 and hi > lo");
  const double width = (hi - lo) / bins;
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  for (int i = 0; i < bins; ++i) out[static_cast<std::size_t>(i)] = {lo + (i + 0.5) * width, 0};
  for (double s : scores) {
    const int k = std::clamp(static_cast<int>(std::floor((s - lo) / width)), 0, bins - 1);
    ++out[static_cast<std::size_t>(k)].count;
  }
  return out;
}

void write_histogram_csv(std::ostream& os, const std::vector<std::pair<Label, std::vector<HistogramBin>>>& classes) {
  os << "bin_center,count,label\n";
  for (const auto& [label, bins] : classes) {
    for (const auto& b : bins) os << b.center << ',' << b.count << ',' << to_string(label) << '\n';
  }
}

}  // namespace axisedit
