#pragma once

#include <algorithm>
#include <cmath>

#include "sparse_tensor.hpp"
#include "tensor_train.hpp"

namespace ttals {

/// 1 - ||approx - target||_F / ||target||_F.
template <typename Scalar>
Scalar fit(const DenseTensor<Scalar>& approx, const DenseTensor<Scalar>& target) {
  if (!(approx.shape() == target.shape())) throw DomainError("fit: shape mismatch");
  const Scalar tn = target.norm();
  if (tn == Scalar(0)) throw DomainError("fit: target has zero norm");
  return Scalar(1) - (approx.values() - target.values()).norm() / tn;
}

template <typename Scalar>
Scalar fit(const TensorTrain<Scalar>& approx, const DenseTensor<Scalar>& target) {
  if (!(approx.shape() == target.shape())) throw DomainError("fit: shape mismatch");
  return fit(tt_to_dense(approx), target);
}

/// Sparse targets never densify the approximation:
/// ||X - Y||^2 = ||X||^2 - 2<X, Y> + ||Y||^2, with <X, Y> evaluated at the
/// nonzeros of X and ||Y|| from the canonical center (or a Gram contraction).
template <typename Scalar>
Scalar fit(const TensorTrain<Scalar>& approx, const SparseTensor<Scalar>& target) {
  if (!(approx.shape() == target.shape())) throw DomainError("fit: shape mismatch");
  const Scalar tn = target.norm();
  if (tn == Scalar(0)) throw DomainError("fit: target has zero norm");
  Scalar inner = 0;
  for (Index e = 0; e < target.nnz(); ++e)
    inner += target.values()[static_cast<std::size_t>(e)] * tt_entry(approx, target.coordinate(e));
  const Scalar an = tt_norm(approx);
  const Scalar sq = tn * tn - 2 * inner + an * an;
  return Scalar(1) - std::sqrt(std::max(Scalar(0), sq)) / tn;
}

template <typename Scalar>
Scalar fit(const TensorTrain<Scalar>& approx, const IndexedSparseTensor<Scalar>& target) {
  return fit(approx, *target.tensor);
}

}  // namespace ttals
