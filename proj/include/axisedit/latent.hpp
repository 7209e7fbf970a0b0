#pragma once

// Latent-space value types and the projection / edit arithmetic shared by
// the rest of the library. Everything here is header-only and templated on
// the scalar type; the rest of the code base uses the double aliases at the
// bottom of the file.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "axisedit/error.hpp"

namespace axisedit {

inline constexpr Eigen::Index kDefaultDim = 512;
inline constexpr Eigen::Index kDefaultLayers = 18;

/// Shape of a generator's extended latent space.
struct Geometry {
  Eigen::Index dim = kDefaultDim;
  Eigen::Index layers = kDefaultLayers;

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

namespace detail {

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite entry");
}

inline void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimension " + std::to_string(a) +
                         " does not match " + std::to_string(b));
  }
}

}  // namespace detail

/// A point in W.
template <typename Scalar>
class BasicLatentVector {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit BasicLatentVector(Vector values) : values_(std::move(values)) {
    if (values_.size() == 0) throw DimensionError("latent vector: empty");
    detail::require_finite(values_, "latent vector");
  }

  static BasicLatentVector zero(Eigen::Index dim) { return BasicLatentVector(Vector::Zero(dim)); }

  const Vector& values() const { return values_; }
  Eigen::Index dim() const { return values_.size(); }

 private:
  Vector values_;
};

/// A point in W+: one W-sized block per generator layer, stored as the rows
/// of a layers x dim matrix.
template <typename Scalar>
class BasicExtendedLatent {
 public:
  using Blocks = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit BasicExtendedLatent(Blocks blocks) : blocks_(std::move(blocks)) {
    if (blocks_.rows() == 0) throw DimensionError("extended latent: no blocks");
    if (blocks_.cols() == 0) throw DimensionError("extended latent: empty blocks");
    detail::require_finite(blocks_, "extended latent");
  }

  /// Every block equal to `w` (the generator's W -> W+ broadcast).
  static BasicExtendedLatent tiled(const BasicLatentVector<Scalar>& w, Eigen::Index layers) {
    if (layers <= 0) throw DimensionError("extended latent: layer count must be positive");
    return BasicExtendedLatent(w.values().transpose().replicate(layers, 1));
  }

  static BasicExtendedLatent zero(Geometry g) { return BasicExtendedLatent(Blocks::Zero(g.layers, g.dim)); }

  const Blocks& blocks() const { return blocks_; }
  Eigen::Index layers() const { return blocks_.rows(); }
  Eigen::Index dim() const { return blocks_.cols(); }
  Geometry geometry() const { return {dim(), layers()}; }
  BasicLatentVector<Scalar> block(Eigen::Index i) const { return BasicLatentVector<Scalar>(blocks_.row(i).transpose()); }

 private:
  Blocks blocks_;
};

/// Where an axis came from.
struct AxisProvenance {
  std::int64_t training_size = 0;
  double lambda = 0.0;
  std::int64_t epochs = 0;
  std::uint64_t seed = 0;
  std::string date;
};

/// Unit direction in W along which the attribute varies.
template <typename Scalar>
class BasicAttributeAxis {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  /// Normalizes `raw`; the pre-normalization length is kept as norm_raw().
  static BasicAttributeAxis from_raw(const Vector& raw, AxisProvenance meta = {}) {
    detail::require_finite(raw, "attribute axis");
    const Scalar n = raw.norm();
    if (!(n > Scalar(0))) throw InvalidArgument("attribute axis: zero direction");
    return BasicAttributeAxis(raw / n, n, std::move(meta));
  }

  const Vector& direction() const { return direction_; }
  Scalar norm_raw() const { return norm_raw_; }
  const AxisProvenance& meta() const { return meta_; }
  Eigen::Index dim() const { return direction_.size(); }

  /// The direction repeated once per layer, as applied in W+.
  typename BasicExtendedLatent<Scalar>::Blocks tiled(Eigen::Index layers) const {
    return direction_.transpose().replicate(layers, 1);
  }

  BasicAttributeAxis flipped() const { return BasicAttributeAxis(-direction_, norm_raw_, meta_); }

 private:
  BasicAttributeAxis(Vector dir, Scalar n, AxisProvenance meta)
      : direction_(std::move(dir)), norm_raw_(n), meta_(std::move(meta)) {}

  Vector direction_;
  Scalar norm_raw_;
  AxisProvenance meta_;
};

/// Score of a W vector: its dot product with the axis.
template <typename Scalar>
Scalar project_w(const BasicLatentVector<Scalar>& v, const BasicAttributeAxis<Scalar>& axis) {
  detail::require_same_dim(v.dim(), axis.dim(), "project_w");
  return v.values().dot(axis.direction());
}

/// Score of a W+ vector: the mean over blocks of the per-block dot products.
/// With this rule apply_edit(v, axis, d) moves the score by exactly d.
template <typename Scalar>
Scalar project_wplus(const BasicExtendedLatent<Scalar>& v, const BasicAttributeAxis<Scalar>& axis) {
  detail::require_same_dim(v.dim(), axis.dim(), "project_wplus");
  return (v.blocks() * axis.direction()).mean();
}

/// Adds delta * axis to every block.
template <typename Scalar>
BasicExtendedLatent<Scalar> apply_edit(const BasicExtendedLatent<Scalar>& v, const BasicAttributeAxis<Scalar>& axis,
                                       Scalar delta) {
  detail::require_same_dim(v.dim(), axis.dim(), "apply_edit");
  if (!std::isfinite(delta)) throw InvalidArgument("apply_edit: non-finite delta");
  typename BasicExtendedLatent<Scalar>::Blocks out = v.blocks();
  out.rowwise() += delta * axis.direction().transpose();
  return BasicExtendedLatent<Scalar>(std::move(out));
}

using LatentVector = BasicLatentVector<double>;
using ExtendedLatent = BasicExtendedLatent<double>;
using AttributeAxis = BasicAttributeAxis<double>;
using Score = double;

}  // namespace axisedit
