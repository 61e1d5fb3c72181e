#pragma once

#include <cstdint>
#include <span>

#include "sparse_tensor.hpp"
#include "tensor_train.hpp"

namespace ttals {

/// Dense tensor of a random TT (i.i.d. standard normal cores, `true_ranks`
/// interior) plus i.i.d. Gaussian noise of standard deviation `noise_sigma`.
DenseTensor<double> synth_dense(const Shape& shape, std::span<const Index> true_ranks, double noise_sigma,
                                std::uint64_t seed, std::uint64_t cap = kDefaultChainCap());

/// `nnz` distinct uniformly random coordinates, each holding the random TT's
/// entry plus Gaussian noise. Coordinates are emitted in ascending linear order.
SparseTensor<double> synth_sparse(const Shape& shape, std::span<const Index> true_ranks, Index nnz, double noise_sigma,
                                  std::uint64_t seed);

}  // namespace ttals
