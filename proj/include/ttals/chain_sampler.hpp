#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "parallel.hpp"
#include "row_sampler.hpp"
#include "tensor_train.hpp"

namespace ttals {

/// One multi-index drawn from the squared-row-norm distribution of a left
/// chain A_{<j} (indices t_0..t_{j-1}) or a right chain A_{>j}^T (indices
/// t_{j+1}..t_{N-1}).
template <typename Scalar = double>
struct ChainDraw {
  MultiIndex indices;
  /// Linearized `indices` (first index fastest).
  std::uint64_t linear = 0;
  /// The selected chain row: length R_{j-1} for left draws, R_j for right draws.
  Vector<Scalar> row;
  /// ||row||^2 / R, the exact draw probability.
  Scalar probability = 1;
};

/// Leverage probability of the paired row of A^{!=j}: the product of the two sides.
template <typename Scalar>
Scalar joint_probability(const ChainDraw<Scalar>& left, const ChainDraw<Scalar>& right) {
  return left.probability * right.probability;
}

/// Per-core row samplers for drawing rows of orthonormal core chains.
///
/// For core k the left sampler is built over A_k^L and serves left draws; the
/// right sampler is built over the mirrored core (slices transposed, stacked
/// as rows c + R_k * i) and serves right draws. A right draw is the left
/// procedure run on the reversed chain of transposed slices.
template <typename Scalar = double>
class ChainSampler {
 public:
  explicit ChainSampler(const TensorTrain<Scalar>& tt) : center_(tt.center()) {
    for (Index k = 0; k < tt.order(); ++k) {
      left_.emplace_back();
      right_.emplace_back();
      dims_.push_back(tt.core(k).dim());
      build(tt.core(k), k);
    }
    dirty_.assign(static_cast<std::size_t>(tt.order()), false);
  }

  Index order() const { return static_cast<Index>(left_.size()); }
  const RowSampler<Scalar>& left_sampler(Index k) const { return left_.at(static_cast<std::size_t>(k)); }
  const RowSampler<Scalar>& right_sampler(Index k) const { return right_.at(static_cast<std::size_t>(k)); }
  bool dirty(Index k) const { return dirty_.at(static_cast<std::size_t>(k)); }
  void mark_dirty(Index k) { dirty_.at(static_cast<std::size_t>(k)) = true; }
  std::optional<Index> center() const { return center_; }

  /// Rebuilds the samplers for core k from `tt` and records its current center.
  void refresh_core(const TensorTrain<Scalar>& tt, Index k) {
    if (tt.order() != order()) throw DomainError("refresh_core: train order changed");
    build(tt.core(k), k);
    dirty_[static_cast<std::size_t>(k)] = false;
    center_ = tt.center();
  }

  /// Draws `count` rows of A_{<j}; requires cores 0..j-1 left-orthonormal.
  std::vector<ChainDraw<Scalar>> sample_left(Index j, Index count, Rng& rng) const {
    check_side(j, true);
    return draw_batches(count, rng, [&](Rng& r, Scratch& sc) { return draw_left(j, r, sc); });
  }

  /// Draws `count` rows of A_{>j}^T; requires cores j+1..N-1 right-orthonormal.
  std::vector<ChainDraw<Scalar>> sample_right(Index j, Index count, Rng& rng) const {
    check_side(j, false);
    return draw_batches(count, rng, [&](Rng& r, Scratch& sc) { return draw_right(j, r, sc); });
  }

 private:
  static constexpr Index kBatch = 256;

  void build(const Core<Scalar>& c, Index k) {
    left_[k] = RowSampler<Scalar>(c.left());
    Matrix<Scalar> mirrored(c.rank_right() * c.dim(), c.rank_left());
    for (Index i = 0; i < c.dim(); ++i) mirrored.middleRows(i * c.rank_right(), c.rank_right()) = c.slice(i).transpose();
    right_[k] = RowSampler<Scalar>(std::move(mirrored));
  }

  void check_side(Index j, bool left) const {
    if (j < 0 || j >= order()) throw BoundsError(fmt::format("center {} out of range", j));
    if (!center_ || (left ? *center_ < j : *center_ > j))
      throw StateError(fmt::format("{} chain at {} is not orthonormal for the current center", left ? "left" : "right", j));
    const Index begin = left ? 0 : j + 1;
    const Index end = left ? j : order();
    for (Index k = begin; k < end; ++k)
      if (dirty_[static_cast<std::size_t>(k)]) throw StateError(fmt::format("sampler for core {} is stale", k));
  }

  // One independent stream per batch keeps results independent of thread count.
  template <typename DrawOne>
  std::vector<ChainDraw<Scalar>> draw_batches(Index count, Rng& rng, DrawOne&& draw_one) const {
    std::vector<ChainDraw<Scalar>> out(static_cast<std::size_t>(count));
    const Rng base(rng.next());
    const Index batches = (count + kBatch - 1) / kBatch;
    std::exception_ptr error;
#pragma omp parallel for schedule(static) num_threads(worker_threads())
    for (Index b = 0; b < batches; ++b) {
      try {
        Rng stream = base.split(static_cast<std::uint64_t>(b));
        Scratch scratch;
        reserve(scratch);
        for (Index d = b * kBatch; d < std::min(count, (b + 1) * kBatch); ++d) out[d] = draw_one(stream, scratch);
      } catch (...) {
#pragma omp critical
        error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    return out;
  }

  struct Scratch {
    Vector<Scalar> h, next;
  };

  // h <- slice * h, ping-ponging between two preallocated buffers.
  static void apply(const Matrix<Scalar>& m, Index first_row, Index rows, Scratch& s) {
    s.next.head(rows).noalias() = m.middleRows(first_row, rows) * s.h.head(m.cols());
    s.h.swap(s.next);
  }

  static void apply_transposed(const Matrix<Scalar>& m, Index first_row, Index rows, Index len, Scratch& s) {
    s.next.head(m.cols()).noalias() = m.middleRows(first_row, rows).transpose() * s.h.head(len);
    s.h.swap(s.next);
  }

  void reserve(Scratch& s) const {
    Index width = 1;
    for (const auto& z : left_) width = std::max({width, z.cols(), z.rows()});
    s.h.resize(width);
    s.next.resize(width);
  }

  ChainDraw<Scalar> draw_left(Index j, Rng& rng, Scratch& s) const {
    ChainDraw<Scalar> d;
    d.indices.assign(static_cast<std::size_t>(j), 0);
    if (j == 0) {
      d.row = Vector<Scalar>::Ones(1);
      return d;
    }
    const Index rank = left_[j - 1].cols();
    s.h.head(rank).setZero();
    s.h[static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(rank)))] = 1;
    for (Index k = j - 1; k >= 0; --k) {
      const auto& z = left_[k];
      const Index rl = z.rows() / dims_[k];
      const Index t = z.sample(s.h.head(z.cols()), rng) / rl;
      d.indices[k] = t;
      apply(z.matrix(), t * rl, rl, s);
    }
    // The selected row is the product of the chosen slices, left to right.
    s.h[0] = 1;
    Index len = 1;
    std::uint64_t stride = 1;
    for (Index k = 0; k < j; ++k) {
      const auto& z = left_[k];
      const Index rl = z.rows() / dims_[k];
      apply_transposed(z.matrix(), d.indices[k] * rl, rl, len, s);
      len = z.cols();
      d.linear += static_cast<std::uint64_t>(d.indices[k]) * stride;
      stride *= static_cast<std::uint64_t>(dims_[k]);
    }
    d.row = s.h.head(len);
    d.probability = d.row.squaredNorm() / static_cast<Scalar>(rank);
    return d;
  }

  ChainDraw<Scalar> draw_right(Index j, Rng& rng, Scratch& s) const {
    ChainDraw<Scalar> d;
    const Index n = order();
    d.indices.assign(static_cast<std::size_t>(n - 1 - j), 0);
    if (j == n - 1) {
      d.row = Vector<Scalar>::Ones(1);
      return d;
    }
    const Index rank = right_[j + 1].cols();
    s.h.head(rank).setZero();
    s.h[static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(rank)))] = 1;
    for (Index k = j + 1; k < n; ++k) {
      const auto& z = right_[k];
      const Index rr = z.rows() / dims_[k];
      const Index t = z.sample(s.h.head(z.cols()), rng) / rr;
      d.indices[k - j - 1] = t;
      apply(z.matrix(), t * rr, rr, s);
    }
    s.h[0] = 1;
    Index len = 1;
    for (Index k = n - 1; k > j; --k) {
      const auto& z = right_[k];
      const Index rr = z.rows() / dims_[k];
      apply_transposed(z.matrix(), d.indices[k - j - 1] * rr, rr, len, s);
      len = z.cols();
    }
    std::uint64_t stride = 1;
    for (Index k = j + 1; k < n; ++k) {
      d.linear += static_cast<std::uint64_t>(d.indices[k - j - 1]) * stride;
      stride *= static_cast<std::uint64_t>(dims_[k]);
    }
    d.row = s.h.head(len);
    d.probability = d.row.squaredNorm() / static_cast<Scalar>(rank);
    return d;
  }

  std::vector<RowSampler<Scalar>> left_;
  std::vector<RowSampler<Scalar>> right_;
  std::vector<Index> dims_;
  std::vector<bool> dirty_;
  std::optional<Index> center_;
};

template <typename Scalar>
ChainSampler<Scalar> build_chain_sampler(const TensorTrain<Scalar>& tt) {
  return ChainSampler<Scalar>(tt);
}

template <typename Scalar>
std::vector<ChainDraw<Scalar>> chain_sample_left(const ChainSampler<Scalar>& cs, Index j, Index count, Rng& rng) {
  return cs.sample_left(j, count, rng);
}

template <typename Scalar>
std::vector<ChainDraw<Scalar>> chain_sample_right(const ChainSampler<Scalar>& cs, Index j, Index count, Rng& rng) {
  return cs.sample_right(j, count, rng);
}

}  // namespace ttals
