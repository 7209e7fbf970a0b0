#include "axisedit/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace axisedit {

namespace {

// Fisher-Yates driven directly by mt19937_64 output; std::shuffle and
// uniform_int_distribution differ between standard libraries.
void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

SvmModel train_svm(std::span<const LabeledLatent> data, const SvmHyperparams& hp) {
  if (data.empty()) throw InvalidArgument("train_svm: empty training set");
  if (!(hp.lambda > 0.0) || !std::isfinite(hp.lambda)) throw InvalidArgument("train_svm: lambda must be > 0");
  if (hp.epochs <= 0) throw InvalidArgument("train_svm: epochs must be > 0");

  const Eigen::Index dim = data.front().vector.dim();
  std::size_t males = 0;
  for (const auto& ex : data) {
    detail::require_same_dim(ex.vector.dim(), dim, "train_svm");
    if (ex.label == Label::Male) ++males;
  }
  if (males == 0 || males == data.size()) throw SingleClassError("train_svm: both labels are required");

  // Inputs are divided by their RMS norm so the solution does not depend on
  // the data scale; weights are mapped back at the end.
  double mean_sq = 0.0;
  for (const auto& ex : data) mean_sq += ex.vector.values().squaredNorm();
  mean_sq /= static_cast<double>(data.size());
  if (!(mean_sq > 0.0)) throw InvalidArgument("train_svm: all training vectors are zero");
  const double inv_scale = 1.0 / std::sqrt(mean_sq);

  // Bias is the last coordinate of an augmented weight vector.
  Eigen::VectorXd w = Eigen::VectorXd::Zero(dim + 1);
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(dim + 1);
  std::int64_t averaged = 0;
  const double radius = 1.0 / std::sqrt(hp.lambda);

  std::mt19937_64 rng(hp.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const std::size_t batch = hp.batch_size > 0 ? static_cast<std::size_t>(hp.batch_size) : data.size();
  const std::int64_t average_from = hp.epochs / 2;
  Eigen::VectorXd grad(dim + 1);
  std::int64_t t = 0;
  for (std::int64_t epoch = 0; epoch < hp.epochs; ++epoch) {
    shuffle_indices(order, rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      ++t;
      grad.setZero();
      for (std::size_t k = start; k < stop; ++k) {
        const auto& ex = data[order[k]];
        const double y = label_sign(ex.label);
        if (y * (inv_scale * w.head(dim).dot(ex.vector.values()) + w[dim]) < 1.0) {
          grad.head(dim) += (y * inv_scale) * ex.vector.values();
          grad[dim] += y;
        }
      }
      const double eta = 1.0 / (hp.lambda * static_cast<double>(t));
      w *= 1.0 - 1.0 / static_cast<double>(t);
      w += (eta / static_cast<double>(stop - start)) * grad;
      const double n = w.norm();
      if (n > radius) w *= radius / n;
      if (epoch >= average_from) {
        ++averaged;
        avg += (w - avg) / static_cast<double>(averaged);
      }
    }
  }

  SvmModel model;
  model.weights = inv_scale * avg.head(dim);
  model.bias = avg[dim];
  model.hyperparams = hp;
  model.training_size = static_cast<std::int64_t>(data.size());
  if (!(model.weights.norm() > 0.0)) throw InvalidArgument("train_svm: degenerate solution (zero weights)");
  return model;
}

AttributeAxis extract_axis(const SvmModel& model, std::span<const LabeledLatent> orientation) {
  if (!(model.weights.size() > 0) || !(model.weights.norm() > 0.0)) {
    throw InvalidArgument("extract_axis: zero weight vector");
  }
  AxisProvenance meta;
  meta.training_size = model.training_size;
  meta.lambda = model.hyperparams.lambda;
  meta.epochs = model.hyperparams.epochs;
  meta.seed = model.hyperparams.seed;
  auto axis = AttributeAxis::from_raw(model.weights, meta);

  double male_sum = 0.0, female_sum = 0.0;
  std::size_t males = 0, females = 0;
  for (const auto& ex : orientation) {
    const double s = project_w(ex.vector, axis);
    if (ex.label == Label::Male) {
      male_sum += s;
      ++males;
    } else {
      female_sum += s;
      ++females;
    }
  }
  if (males > 0 && females > 0 &&
      male_sum / static_cast<double>(males) < female_sum / static_cast<double>(females)) {
    return axis.flipped();
  }
  return axis;
}

double training_accuracy(const SvmModel& model, std::span<const LabeledLatent> data) {
  if (data.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& ex : data) {
    if (label_sign(ex.label) * model.decision(ex.vector.values()) > 0.0) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

}  // namespace axisedit
