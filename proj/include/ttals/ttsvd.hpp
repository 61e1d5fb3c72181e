#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <spdlog/spdlog.h>

#include "rng.hpp"
#include "sparse_tensor.hpp"
#include "tensor_train.hpp"

namespace ttals {

struct SvdConfig {
  Index oversampling = 10;
  Index power_iterations = 1;
  std::uint64_t seed = 0;
};

namespace detail {

template <typename Scalar>
std::vector<Index> checked_svd_ranks(const Shape& shape, std::span<const Index> interior) {
  auto [ranks, clipped] = clip_ranks(shape, interior);
  if (clipped) spdlog::warn("TT-SVD ranks clipped to feasible values ({})", fmt::join(ranks, ", "));
  return ranks;
}

/// Drives the left-to-right unfold/truncate sequence. `truncate(C, rank)`
/// returns an orthonormal basis U (C.rows() x rank) and the remainder U^T C.
template <typename Scalar, typename Truncate>
TensorTrain<Scalar> svd_sweep(const DenseTensor<Scalar>& x, std::span<const Index> interior, Truncate&& truncate) {
  const Shape shape = x.shape();
  const std::vector<Index> ranks = checked_svd_ranks<Scalar>(shape, interior);
  const Index n = shape.order();
  std::vector<Core<Scalar>> cores;
  Matrix<Scalar> c = x.values();
  Index r_prev = 1;
  for (Index k = 0; k + 1 < n; ++k) {
    const Index rows = r_prev * shape[k];
    const Index cols = c.size() / rows;
    c.resize(rows, cols);
    auto [basis, remainder] = truncate(c, ranks[k + 1]);
    cores.push_back(Core<Scalar>::from_left(r_prev, shape[k], std::move(basis)));
    c = std::move(remainder);
    r_prev = ranks[k + 1];
  }
  c.resize(r_prev * shape[n - 1], 1);
  cores.push_back(Core<Scalar>::from_left(r_prev, shape[n - 1], std::move(c)));
  TensorTrain<Scalar> tt(std::move(cores));
  tt.assume_center(n - 1);
  return tt;
}

template <typename Scalar>
Matrix<Scalar> thin_q(const Matrix<Scalar>& a) {
  Eigen::HouseholderQR<Matrix<Scalar>> qr(a);
  return qr.householderQ() * Matrix<Scalar>::Identity(a.rows(), std::min(a.rows(), a.cols()));
}

}  // namespace detail

/// Sequential truncated-SVD TT decomposition. The result is canonical with
/// center N-1. If `discarded` is given it receives, per step, the sum of the
/// squared singular values dropped by truncation.
template <typename Scalar>
TensorTrain<Scalar> tt_svd(const DenseTensor<Scalar>& x, std::span<const Index> interior_ranks,
                           std::vector<Scalar>* discarded = nullptr) {
  if (discarded) discarded->clear();
  return detail::svd_sweep(x, interior_ranks, [&](const Matrix<Scalar>& c, Index rank) {
    Eigen::BDCSVD<Matrix<Scalar>> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (discarded) discarded->push_back(s.tail(s.size() - rank).squaredNorm());
    Matrix<Scalar> basis = svd.matrixU().leftCols(rank);
    Matrix<Scalar> remainder = s.head(rank).asDiagonal() * svd.matrixV().leftCols(rank).transpose();
    return std::pair{std::move(basis), std::move(remainder)};
  });
}

/// TT-SVD with each truncated SVD replaced by a Gaussian randomized range
/// finder (rank + oversampling columns, optional power iterations) followed by
/// an exact SVD of the small projected matrix.
template <typename Scalar>
TensorTrain<Scalar> rtt_svd(const DenseTensor<Scalar>& x, std::span<const Index> interior_ranks, const SvdConfig& cfg) {
  if (cfg.oversampling < 0 || cfg.power_iterations < 0) throw ConfigError("oversampling and power iterations must be >= 0");
  Rng rng(cfg.seed);
  return detail::svd_sweep(x, interior_ranks, [&](const Matrix<Scalar>& c, Index rank) {
    const Index width = std::min({rank + cfg.oversampling, c.rows(), c.cols()});
    Matrix<Scalar> omega(c.cols(), width);
    for (Index t = 0; t < omega.size(); ++t) omega.data()[t] = static_cast<Scalar>(rng.normal());
    Matrix<Scalar> q = detail::thin_q<Scalar>(c * omega);
    for (Index it = 0; it < cfg.power_iterations; ++it) {
      const Matrix<Scalar> z = detail::thin_q<Scalar>(c.transpose() * q);
      q = detail::thin_q<Scalar>(c * z);
    }
    const Matrix<Scalar> b = q.transpose() * c;
    Eigen::BDCSVD<Matrix<Scalar>> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Matrix<Scalar> basis = q * svd.matrixU().leftCols(rank);
    Matrix<Scalar> remainder = svd.singularValues().head(rank).asDiagonal() * svd.matrixV().leftCols(rank).transpose();
    return std::pair{std::move(basis), std::move(remainder)};
  });
}

/// Sparse inputs are densified when under `cap`, rejected otherwise.
template <typename Scalar>
TensorTrain<Scalar> tt_svd(const SparseTensor<Scalar>& x, std::span<const Index> interior_ranks,
                           std::uint64_t cap = kDefaultDenseCap) {
  return tt_svd(densify(x, cap), interior_ranks);
}

template <typename Scalar>
TensorTrain<Scalar> rtt_svd(const SparseTensor<Scalar>& x, std::span<const Index> interior_ranks, const SvdConfig& cfg,
                            std::uint64_t cap = kDefaultDenseCap) {
  return rtt_svd(densify(x, cap), interior_ranks, cfg);
}

}  // namespace ttals
