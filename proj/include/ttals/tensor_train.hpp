#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>
#include <spdlog/spdlog.h>

#include "dense_tensor.hpp"
#include "rng.hpp"

namespace ttals {

/// Upper bound on entries materialized by chain contractions and tt_to_dense.
constexpr std::uint64_t kDefaultChainCap() { return std::uint64_t{1} << 28; }

/// Three-way TT core of size rank_left x dim x rank_right, stored as its left
/// matricization A^L: row r + rank_left * i, column c. The same buffer read
/// column-major as rank_left x (dim * rank_right) is the right matricization A^R.
template <typename Scalar = double>
class Core {
 public:
  Core() = default;
  Core(Index rank_left, Index dim, Index rank_right)
      : rank_left_(rank_left), dim_(dim), rank_right_(rank_right), data_(Matrix<Scalar>::Zero(rank_left * dim, rank_right)) {}

  /// Adopts `left` as the left matricization.
  static Core from_left(Index rank_left, Index dim, Matrix<Scalar> left) {
    if (left.rows() != rank_left * dim) throw DomainError("left matricization has wrong row count");
    Core c;
    c.rank_left_ = rank_left;
    c.dim_ = dim;
    c.rank_right_ = left.cols();
    c.data_ = std::move(left);
    return c;
  }

  template <typename Derived>
  static Core from_right(Index dim, const Eigen::MatrixBase<Derived>& right) {
    if (right.cols() % dim != 0) throw DomainError("right matricization has wrong column count");
    Core c(right.rows(), dim, right.cols() / dim);
    c.right() = right;
    return c;
  }

  Index rank_left() const { return rank_left_; }
  Index dim() const { return dim_; }
  Index rank_right() const { return rank_right_; }

  const Matrix<Scalar>& left() const { return data_; }
  Matrix<Scalar>& left() { return data_; }
  Eigen::Map<const Matrix<Scalar>> right() const { return {data_.data(), rank_left_, dim_ * rank_right_}; }
  Eigen::Map<Matrix<Scalar>> right() { return {data_.data(), rank_left_, dim_ * rank_right_}; }

  /// Lateral slice A[:, i, :], a rank_left x rank_right block.
  auto slice(Index i) const { return data_.middleRows(i * rank_left_, rank_left_); }
  auto slice(Index i) { return data_.middleRows(i * rank_left_, rank_left_); }

  Scalar operator()(Index r, Index i, Index c) const { return data_(r + rank_left_ * i, c); }
  Scalar& operator()(Index r, Index i, Index c) { return data_(r + rank_left_ * i, c); }

  bool operator==(const Core& o) const {
    return rank_left_ == o.rank_left_ && dim_ == o.dim_ && rank_right_ == o.rank_right_ && data_ == o.data_;
  }

 private:
  Index rank_left_ = 1;
  Index dim_ = 1;
  Index rank_right_ = 1;
  Matrix<Scalar> data_ = Matrix<Scalar>::Zero(1, 1);
};

enum class Direction { left, right };

/// Rank vector R_0..R_N clipped to feasible values. `interior` holds
/// R_1..R_{N-1}. Returns the clipped full vector and whether anything changed.
inline std::pair<std::vector<Index>, bool> clip_ranks(const Shape& shape, std::span<const Index> interior) {
  const Index n = shape.order();
  if (static_cast<Index>(interior.size()) != n - 1)
    throw DomainError(fmt::format("expected {} interior ranks, got {}", n - 1, interior.size()));
  std::vector<Index> r(static_cast<std::size_t>(n + 1), 1);
  for (Index k = 1; k < n; ++k) {
    if (interior[k - 1] < 1) throw DomainError("ranks must be positive");
    r[k] = interior[k - 1];
  }
  auto sat_mul = [](Index a, Index b) { return a > (Index{1} << 62) / b ? (Index{1} << 62) : a * b; };
  // Adjacent-core feasibility implies the outer-product bound, and keeps every
  // QR of a matricization tall.
  for (Index k = 1; k < n; ++k) r[k] = std::min(r[k], sat_mul(r[k - 1], shape[k - 1]));
  for (Index k = n - 1; k >= 1; --k) r[k] = std::min(r[k], sat_mul(r[k + 1], shape[k]));
  bool clipped = false;
  for (Index k = 1; k < n; ++k) clipped |= r[k] != interior[k - 1];
  return {r, clipped};
}

/// Uniform interior rank vector R_1 = ... = R_{N-1} = rank.
inline std::vector<Index> uniform_ranks(const Shape& shape, Index rank) {
  return std::vector<Index>(static_cast<std::size_t>(shape.order() - 1), rank);
}

/// Tensor train: cores A_k of size R_{k-1} x I_k x R_k with R_0 = R_N = 1.
/// When center() is set to j, cores before j are left-orthonormal and cores
/// after j are right-orthonormal.
template <typename Scalar = double>
class TensorTrain {
 public:
  using CoreType = Core<Scalar>;

  TensorTrain() = default;
  explicit TensorTrain(std::vector<CoreType> cores) : cores_(std::move(cores)) {
    if (cores_.empty()) throw DomainError("tensor train needs at least one core");
    if (cores_.front().rank_left() != 1 || cores_.back().rank_right() != 1)
      throw DomainError("boundary ranks must be 1");
    for (std::size_t k = 1; k < cores_.size(); ++k)
      if (cores_[k - 1].rank_right() != cores_[k].rank_left())
        throw DomainError(fmt::format("rank mismatch between cores {} and {}", k - 1, k));
  }

  Index order() const { return static_cast<Index>(cores_.size()); }
  const CoreType& core(Index k) const { return cores_.at(static_cast<std::size_t>(k)); }
  const std::vector<CoreType>& cores() const { return cores_; }

  /// Replaces core k. Canonical form survives only when k is the center.
  void set_core(Index k, CoreType c) {
    CoreType& dst = cores_.at(static_cast<std::size_t>(k));
    if (c.rank_left() != dst.rank_left() || c.rank_right() != dst.rank_right() || c.dim() != dst.dim())
      throw DomainError(fmt::format("replacement core {} has mismatched dimensions", k));
    dst = std::move(c);
    if (center_ && *center_ != k) center_.reset();
  }

  Shape shape() const {
    std::vector<Index> d;
    for (const auto& c : cores_) d.push_back(c.dim());
    return Shape(std::move(d));
  }
  /// R_0..R_N.
  std::vector<Index> ranks() const {
    std::vector<Index> r{1};
    for (const auto& c : cores_) r.push_back(c.rank_right());
    return r;
  }

  std::optional<Index> center() const { return center_; }
  /// Declares the canonical center without checking. Used by constructions that
  /// produce orthonormal cores directly.
  void assume_center(std::optional<Index> j) { center_ = j; }

  /// Brings the train into canonical form with center j.
  void orthogonalize(Index j) {
    if (j < 0 || j >= order()) throw BoundsError(fmt::format("center {} out of range", j));
    for (Index k = order() - 1; k > j; --k) right_orthonormalize(k);
    for (Index k = 0; k < j; ++k) left_orthonormalize(k);
    center_ = j;
  }

  /// Moves the center one step using a single QR; the triangular factor is
  /// absorbed into the neighbor.
  void shift_center(Direction dir) {
    if (!center_) throw StateError("shift_center requires a canonical center");
    const Index j = *center_;
    if (dir == Direction::right) {
      if (j + 1 >= order()) throw StateError("cannot shift center right past the last core");
      left_orthonormalize(j);
      center_ = j + 1;
    } else {
      if (j == 0) throw StateError("cannot shift center left past the first core");
      right_orthonormalize(j);
      center_ = j - 1;
    }
  }

  /// QR of A_k^L; Q replaces core k and R multiplies into core k+1.
  /// Returns the triangular factor.
  Matrix<Scalar> left_orthonormalize(Index k) {
    auto [q, r] = positive_qr(cores_[k].left());
    cores_[k].left() = std::move(q);
    if (k + 1 < order()) {
      auto next = cores_[k + 1].right();
      Matrix<Scalar> updated = r * next;
      next = updated;
    } else {
      cores_[k].left() *= r(0, 0);
    }
    return r;
  }

  /// QR of A_k^{R T}; Q^T replaces core k and R^T multiplies into core k-1.
  Matrix<Scalar> right_orthonormalize(Index k) {
    auto [q, r] = positive_qr(cores_[k].right().transpose());
    cores_[k].right() = q.transpose();
    if (k > 0) {
      Matrix<Scalar> updated = cores_[k - 1].left() * r.transpose();
      cores_[k - 1].left() = std::move(updated);
    } else {
      cores_[k].left() *= r(0, 0);
    }
    return r;
  }

  /// Thin QR with nonnegative diagonal in R. Requires rows >= cols.
  template <typename Derived>
  static std::pair<Matrix<Scalar>, Matrix<Scalar>> positive_qr(const Eigen::MatrixBase<Derived>& a) {
    const Index m = a.rows(), n = a.cols();
    if (m < n) throw DomainError("QR of a wide matricization; ranks are infeasible");
    Eigen::HouseholderQR<Matrix<Scalar>> qr(a);
    Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(m, n);
    Matrix<Scalar> r = qr.matrixQR().topRows(n).template triangularView<Eigen::Upper>();
    for (Index i = 0; i < n; ++i) {
      if (r(i, i) < 0) {
        r.row(i) *= -1;
        q.col(i) *= -1;
      }
    }
    return {std::move(q), std::move(r)};
  }

 private:
  std::vector<CoreType> cores_{CoreType{}};
  std::optional<Index> center_;
};

template <typename Scalar = double>
TensorTrain<Scalar> tt_zeros(const Shape& shape, std::span<const Index> full_ranks) {
  std::vector<Core<Scalar>> cores;
  for (Index k = 0; k < shape.order(); ++k) cores.emplace_back(full_ranks[k], shape[k], full_ranks[k + 1]);
  return TensorTrain<Scalar>(std::move(cores));
}

/// Random TT with i.i.d. standard normal core entries. Infeasible ranks are
/// clipped with a warning.
template <typename Scalar = double>
TensorTrain<Scalar> tt_random(const Shape& shape, std::span<const Index> interior_ranks, std::uint64_t seed) {
  auto [ranks, clipped] = clip_ranks(shape, interior_ranks);
  if (clipped) spdlog::warn("TT ranks clipped to feasible values ({})", fmt::join(ranks, ", "));
  auto tt = tt_zeros<Scalar>(shape, ranks);
  Rng rng(seed);
  std::vector<Core<Scalar>> cores = tt.cores();
  for (auto& c : cores) {
    Scalar* p = c.left().data();
    for (Index t = 0; t < c.left().size(); ++t) p[t] = static_cast<Scalar>(rng.normal());
  }
  return TensorTrain<Scalar>(std::move(cores));
}

template <typename Scalar>
Scalar tt_entry(const TensorTrain<Scalar>& tt, std::span<const Index> idx) {
  const Index n = tt.order();
  if (static_cast<Index>(idx.size()) != n) throw BoundsError("index length does not match TT order");
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> v = Eigen::Matrix<Scalar, 1, 1>::Ones();
  for (Index k = 0; k < n; ++k) {
    const auto& c = tt.core(k);
    if (idx[k] < 0 || idx[k] >= c.dim())
      throw BoundsError(fmt::format("index component {} = {} outside [0, {})", k, idx[k], c.dim()));
    v = v * c.slice(idx[k]);
  }
  return v(0);
}

/// A_{<j}: (prod_{k<j} I_k) x R_{j-1}, by sequential contraction of cores 0..j-1.
template <typename Scalar>
Matrix<Scalar> left_chain(const TensorTrain<Scalar>& tt, Index j, std::uint64_t cap = kDefaultChainCap()) {
  if (j < 0 || j >= tt.order()) throw BoundsError(fmt::format("mode {} out of range", j));
  Matrix<Scalar> m = Matrix<Scalar>::Ones(1, 1);
  for (Index k = 0; k < j; ++k) {
    const auto& c = tt.core(k);
    const Index rows = m.rows() * c.dim();
    if (static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(c.rank_right()) > cap)
      throw DomainError("left chain exceeds the materialization cap");
    Matrix<Scalar> prod = m * c.right();
    m = Eigen::Map<Matrix<Scalar>>(prod.data(), rows, c.rank_right());
  }
  return m;
}

/// A_{>j}: R_j x (prod_{k>j} I_k).
template <typename Scalar>
Matrix<Scalar> right_chain(const TensorTrain<Scalar>& tt, Index j, std::uint64_t cap = kDefaultChainCap()) {
  if (j < 0 || j >= tt.order()) throw BoundsError(fmt::format("mode {} out of range", j));
  Matrix<Scalar> m = Matrix<Scalar>::Ones(1, 1);
  for (Index k = tt.order() - 1; k > j; --k) {
    const auto& c = tt.core(k);
    const Index cols = c.dim() * m.cols();
    if (static_cast<std::uint64_t>(cols) * static_cast<std::uint64_t>(c.rank_left()) > cap)
      throw DomainError("right chain exceeds the materialization cap");
    Matrix<Scalar> prod = c.left() * m;
    m = Eigen::Map<Matrix<Scalar>>(prod.data(), c.rank_left(), cols);
  }
  return m;
}

template <typename Scalar>
DenseTensor<Scalar> tt_to_dense(const TensorTrain<Scalar>& tt, std::uint64_t cap = kDefaultChainCap()) {
  const Shape shape = tt.shape();
  if (shape.size() > cap) throw DomainError(fmt::format("dense size {} exceeds cap {}", shape.size(), cap));
  Matrix<Scalar> m = left_chain(tt, tt.order() - 1, cap);
  const auto& last = tt.core(tt.order() - 1);
  Matrix<Scalar> full = m * last.right();
  return DenseTensor<Scalar>(shape, Eigen::Map<Vector<Scalar>>(full.data(), full.size()));
}

/// A^{!=j}: rows indexed by the off-mode linear index lo + P_lo * hi, columns by
/// a + R_{j-1} * b, entry A_{<j}(lo, a) * A_{>j}(b, hi). Test-scale only.
template <typename Scalar>
Matrix<Scalar> non_center_matrix(const TensorTrain<Scalar>& tt, Index j) {
  const Matrix<Scalar> l = left_chain(tt, j);
  const Matrix<Scalar> r = right_chain(tt, j);
  Matrix<Scalar> out(l.rows() * r.cols(), l.cols() * r.rows());
  for (Index hi = 0; hi < r.cols(); ++hi)
    for (Index b = 0; b < r.rows(); ++b)
      out.block(hi * l.rows(), b * l.cols(), l.rows(), l.cols()) = l * r(b, hi);
  return out;
}

/// Largest Gram residual ||A^T A - I||_F over the cores that the current
/// center requires to be orthonormal. Zero when no center is set.
template <typename Scalar>
Scalar canonical_residual(const TensorTrain<Scalar>& tt) {
  if (!tt.center()) return 0;
  const Index j = *tt.center();
  Scalar worst = 0;
  for (Index k = 0; k < tt.order(); ++k) {
    const auto& c = tt.core(k);
    if (k < j) {
      const Matrix<Scalar> g = c.left().transpose() * c.left();
      worst = std::max(worst, (g - Matrix<Scalar>::Identity(g.rows(), g.cols())).norm());
    } else if (k > j) {
      const Matrix<Scalar> g = c.right() * c.right().transpose();
      worst = std::max(worst, (g - Matrix<Scalar>::Identity(g.rows(), g.cols())).norm());
    }
  }
  return worst;
}

/// Frobenius norm. Uses the center core when canonical, otherwise a
/// Gram-matrix contraction along the chain.
template <typename Scalar>
Scalar tt_norm(const TensorTrain<Scalar>& tt) {
  if (tt.center()) return tt.core(*tt.center()).left().norm();
  Matrix<Scalar> w = Matrix<Scalar>::Ones(1, 1);
  for (const auto& c : tt.cores()) {
    Matrix<Scalar> next = Matrix<Scalar>::Zero(c.rank_right(), c.rank_right());
    for (Index i = 0; i < c.dim(); ++i) next.noalias() += c.slice(i).transpose() * w * c.slice(i);
    w = std::move(next);
  }
  return std::sqrt(std::max(Scalar(0), w(0, 0)));
}

template <typename Scalar>
TensorTrain<Scalar> orthogonalize_to(TensorTrain<Scalar> tt, Index j) {
  tt.orthogonalize(j);
  return tt;
}

template <typename Scalar>
TensorTrain<Scalar> shift_center(TensorTrain<Scalar> tt, Direction dir) {
  tt.shift_center(dir);
  return tt;
}

}  // namespace ttals
