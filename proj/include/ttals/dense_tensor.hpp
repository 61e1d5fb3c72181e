#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "shape.hpp"

namespace ttals {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Splits a mode-j multi-index space into the block before j and the block after j.
/// An off-mode linear index is `lo + before * hi`, the first-index-fastest
/// linearization of (i_1..i_{j-1}, i_{j+1}..i_N).
struct ModeSplit {
  std::uint64_t before = 1;  // prod_{k<j} I_k
  Index dim = 1;             // I_j
  std::uint64_t after = 1;   // prod_{k>j} I_k

  ModeSplit(const Shape& shape, Index j) {
    check_mode(shape, j);
    before = shape.span_size(0, j);
    dim = shape[j];
    after = shape.span_size(j + 1, shape.order());
  }

  std::uint64_t off_size() const { return before * after; }
  std::uint64_t lo(std::uint64_t off) const { return off % before; }
  std::uint64_t hi(std::uint64_t off) const { return off / before; }
  /// Flat storage index of entry i along the fiber at off-mode index `off`.
  std::uint64_t flat(std::uint64_t off, Index i) const {
    return lo(off) + before * (static_cast<std::uint64_t>(i) + static_cast<std::uint64_t>(dim) * hi(off));
  }
};

/// Dense N-way tensor, first-index-fastest storage.
template <typename Scalar = double>
class DenseTensor {
 public:
  using ValueVector = Vector<Scalar>;

  DenseTensor() = default;
  explicit DenseTensor(Shape shape) : shape_(std::move(shape)), values_(ValueVector::Zero(size_of(shape_))) {}
  DenseTensor(Shape shape, ValueVector values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (static_cast<std::uint64_t>(values_.size()) != shape_.size())
      throw DomainError(fmt::format("{} values given for shape {}", values_.size(), to_string(shape_)));
  }

  const Shape& shape() const { return shape_; }
  Index order() const { return shape_.order(); }
  Index size() const { return values_.size(); }
  const ValueVector& values() const { return values_; }
  ValueVector& values() { return values_; }

  Scalar operator()(std::span<const Index> idx) const { return values_[static_cast<Index>(linearize(idx, shape_))]; }
  Scalar& operator()(std::span<const Index> idx) { return values_[static_cast<Index>(linearize(idx, shape_))]; }
  Scalar operator()(std::initializer_list<Index> idx) const { return (*this)(std::span<const Index>(idx.begin(), idx.size())); }
  Scalar& operator()(std::initializer_list<Index> idx) { return (*this)(std::span<const Index>(idx.begin(), idx.size())); }

  Scalar norm() const { return values_.norm(); }

  /// View as the (prod_{k<j} I_k) x (prod_{k>=j} I_k) matrix.
  Eigen::Map<const Matrix<Scalar>> split_view(Index j) const {
    const auto rows = static_cast<Index>(shape_.span_size(0, j));
    return {values_.data(), rows, size() / rows};
  }

 private:
  static Index size_of(const Shape& s) { return static_cast<Index>(s.size()); }

  Shape shape_;
  ValueVector values_ = ValueVector::Zero(1);
};

/// X_(n): I_n x prod_{k != n} I_k, columns indexed by the linearized remaining modes.
template <typename Scalar>
Matrix<Scalar> mode_unfolding(const DenseTensor<Scalar>& x, Index n) {
  const ModeSplit split(x.shape(), n);
  Matrix<Scalar> out(split.dim, static_cast<Index>(split.off_size()));
  const Scalar* v = x.values().data();
  for (std::uint64_t hi = 0; hi < split.after; ++hi)
    for (Index i = 0; i < split.dim; ++i)
      for (std::uint64_t lo = 0; lo < split.before; ++lo)
        out(i, static_cast<Index>(lo + split.before * hi)) = *v++;
  return out;
}

template <typename Scalar>
DenseTensor<Scalar> reshape(const DenseTensor<Scalar>& x, Shape new_shape) {
  if (new_shape.size() != x.shape().size())
    throw DomainError(fmt::format("cannot reshape {} into {}", to_string(x.shape()), to_string(new_shape)));
  return DenseTensor<Scalar>(std::move(new_shape), x.values());
}

/// Mode permutation: result mode k is input mode perm[k].
template <typename Scalar>
DenseTensor<Scalar> permute_modes(const DenseTensor<Scalar>& x, std::span<const Index> perm) {
  const Index n = x.order();
  if (static_cast<Index>(perm.size()) != n) throw DomainError("permutation length mismatch");
  std::vector<Index> dims(static_cast<std::size_t>(n));
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (Index k = 0; k < n; ++k) {
    if (perm[k] < 0 || perm[k] >= n || seen[perm[k]]) throw DomainError("invalid permutation");
    seen[perm[k]] = true;
    dims[k] = x.shape()[perm[k]];
  }
  DenseTensor<Scalar> out{Shape(dims)};
  MultiIndex src(static_cast<std::size_t>(n), 0), dst(static_cast<std::size_t>(n));
  for (Index t = 0; t < x.size(); ++t) {
    for (Index k = 0; k < n; ++k) dst[k] = src[perm[k]];
    out(dst) = x.values()[t];
    for (Index k = 0; k < n; ++k) {
      if (++src[k] < x.shape()[k]) break;
      src[k] = 0;
    }
  }
  return out;
}

/// Row d is the mode-j fiber of x at off-mode linear index rows[d].
template <typename Scalar>
Matrix<Scalar> gather_rows(const DenseTensor<Scalar>& x, Index j, std::span<const std::uint64_t> rows) {
  const ModeSplit split(x.shape(), j);
  Matrix<Scalar> out(static_cast<Index>(rows.size()), split.dim);
  const Scalar* v = x.values().data();
  for (std::size_t d = 0; d < rows.size(); ++d) {
    if (rows[d] >= split.off_size())
      throw BoundsError(fmt::format("off-mode index {} >= {}", rows[d], split.off_size()));
    const std::uint64_t base = split.flat(rows[d], 0);
    for (Index i = 0; i < split.dim; ++i) out(static_cast<Index>(d), i) = v[base + split.before * static_cast<std::uint64_t>(i)];
  }
  return out;
}

/// Off-mode linear index of a full multi-index, dropping mode j.
inline std::uint64_t off_mode_index(std::span<const Index> idx, const Shape& shape, Index j) {
  std::uint64_t off = 0, stride = 1;
  for (Index k = 0; k < shape.order(); ++k) {
    if (k == j) continue;
    off += static_cast<std::uint64_t>(idx[k]) * stride;
    stride *= static_cast<std::uint64_t>(shape[k]);
  }
  return off;
}

}  // namespace ttals
