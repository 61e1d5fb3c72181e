#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "dense_tensor.hpp"
#include "rng.hpp"

namespace ttals {

/// Draws row indices s of an M x R matrix A with probability (A[s,:] h)^2 / ||A h||^2.
///
/// Rows are grouped into ceil(M/F) leaf segments of F = R rows. A full binary
/// tree over the segments (heap layout, 2L - 1 nodes) stores at each node the
/// Gram matrix of all rows below it. A draw walks from the root choosing a
/// child with probability proportional to h^T G h, then inverts the
/// cumulative weights (A_leaf h)^2 inside the chosen segment. Construction is
/// O(M R^2), storage O(M R), and a draw costs O(R^2 log(M/R)).
template <typename Scalar = double>
class RowSampler {
 public:
  RowSampler() = default;
  explicit RowSampler(Matrix<Scalar> a, Index leaf_size = 0) : a_(std::move(a)) {
    if (a_.rows() < 1 || a_.cols() < 1) throw DomainError("row sampler needs a non-empty matrix");
    leaf_size_ = leaf_size > 0 ? leaf_size : a_.cols();
    leaves_ = (a_.rows() + leaf_size_ - 1) / leaf_size_;
    const Index r = a_.cols();
    grams_.resize(r, r * node_count());
    for (Index s = 0; s < leaves_; ++s) {
      const Index begin = s * leaf_size_;
      const Index count = std::min(leaf_size_, a_.rows() - begin);
      const auto rows = a_.middleRows(begin, count);
      gram(leaves_ - 1 + s).noalias() = rows.transpose() * rows;
    }
    for (Index v = leaves_ - 2; v >= 0; --v) gram(v) = gram(2 * v + 1) + gram(2 * v + 2);
  }

  Index rows() const { return a_.rows(); }
  Index cols() const { return a_.cols(); }
  Index leaf_size() const { return leaf_size_; }
  Index leaf_count() const { return leaves_; }
  Index node_count() const { return 2 * leaves_ - 1; }
  const Matrix<Scalar>& matrix() const { return a_; }

  auto gram(Index node) const { return grams_.middleCols(node * a_.cols(), a_.cols()); }
  auto gram(Index node) { return grams_.middleCols(node * a_.cols(), a_.cols()); }
  /// Children of an internal node; leaves have none.
  bool is_leaf(Index node) const { return node >= leaves_ - 1; }

  /// ||A h||^2, the unnormalized total mass for `h`.
  template <typename Derived>
  Scalar mass(const Eigen::MatrixBase<Derived>& h) const {
    return quad(0, h);
  }

  template <typename Derived>
  Index sample(const Eigen::MatrixBase<Derived>& h, Rng& rng) const {
    if (h.size() != cols()) throw DomainError("history vector has wrong length");
    const Scalar total = quad(0, h);
    if (!(total > kZeroMass)) throw DomainError("row sampler: zero total mass for history vector");
    constexpr int kMaxAttempts = 64;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      Index v = 0;
      Scalar node_mass = total;
      while (!is_leaf(v)) {
        // Both possible next left children are fetched while this level is evaluated.
        prefetch(4 * v + 3);
        prefetch(4 * v + 5);
        const Scalar left = std::clamp(quad(2 * v + 1, h), Scalar(0), node_mass);
        if (static_cast<Scalar>(rng.uniform()) * node_mass < left) {
          v = 2 * v + 1;
          node_mass = left;
        } else {
          v = 2 * v + 2;
          node_mass -= left;
        }
      }
      if (const Index s = resolve_leaf(v - (leaves_ - 1), h, rng); s >= 0) return s;
      // Round-off sent the walk into a segment with no mass; redraw.
    }
    throw DomainError("row sampler: repeated descent into zero-mass segments");
  }

 private:
  static constexpr Scalar kZeroMass = Scalar(1e-300);

  // h^T G h without temporaries; G is symmetric so only its upper triangle is read.
  template <typename Derived>
  Scalar quad(Index node, const Eigen::MatrixBase<Derived>& h) const {
    const Index r = a_.cols();
    const Scalar* g = grams_.data() + node * r * r;
    Scalar diag = 0, off = 0;
    for (Index c = 0; c < r; ++c, g += r) {
      const Scalar hc = h[c];
      Scalar col = 0;
      for (Index i = 0; i < c; ++i) col += g[i] * h[i];
      off += hc * col;
      diag += g[c] * hc * hc;
    }
    return diag + 2 * off;
  }

  void prefetch(Index node) const {
    if (node >= node_count()) return;
    const char* p = reinterpret_cast<const char*>(grams_.data() + node * a_.cols() * a_.cols());
    const std::size_t bytes = static_cast<std::size_t>(a_.cols() * a_.cols()) * sizeof(Scalar);
    for (std::size_t off = 0; off < bytes; off += 64) __builtin_prefetch(p + off);
  }

  template <typename Derived>
  Index resolve_leaf(Index segment, const Eigen::MatrixBase<Derived>& h, Rng& rng) const {
    const Index begin = segment * leaf_size_;
    const Index count = std::min(leaf_size_, a_.rows() - begin);
    Scalar weights[64];
    Vector<Scalar> heap_weights;
    Scalar* w = weights;
    if (count > 64) {
      heap_weights.resize(count);
      w = heap_weights.data();
    }
    Scalar sum = 0;
    for (Index t = 0; t < count; ++t) {
      const Scalar p = a_.row(begin + t).dot(h);
      w[t] = p * p;
      sum += w[t];
    }
    if (!(sum > kZeroMass)) return -1;
    const Scalar u = static_cast<Scalar>(rng.uniform()) * sum;
    Scalar cum = 0;
    Index last_positive = -1;
    for (Index t = 0; t < count; ++t) {
      cum += w[t];
      if (w[t] > 0) last_positive = t;
      if (cum > u) return begin + t;
    }
    return begin + last_positive;
  }

  Matrix<Scalar> a_;
  Index leaf_size_ = 1;
  Index leaves_ = 0;
  Matrix<Scalar> grams_;
};

}  // namespace ttals
