#include "ttals/synth.hpp"

#include <algorithm>
#include <unordered_set>
#include <vector>

namespace ttals {

DenseTensor<double> synth_dense(const Shape& shape, std::span<const Index> true_ranks, double noise_sigma,
                                std::uint64_t seed, std::uint64_t cap) {
  if (shape.size() > cap) throw DomainError(fmt::format("synthetic tensor of {} entries exceeds cap {}", shape.size(), cap));
  if (noise_sigma < 0) throw DomainError("noise sigma must be nonnegative");
  DenseTensor<double> x = tt_to_dense(tt_random<double>(shape, true_ranks, seed), cap);
  if (noise_sigma > 0) {
    Rng noise = Rng(seed).split(1);
    for (Index t = 0; t < x.size(); ++t) x.values()[t] += noise_sigma * noise.normal();
  }
  return x;
}

SparseTensor<double> synth_sparse(const Shape& shape, std::span<const Index> true_ranks, Index nnz, double noise_sigma,
                                  std::uint64_t seed) {
  if (nnz < 1 || static_cast<std::uint64_t>(nnz) > shape.size()) throw DomainError("nonzero count must lie in [1, size]");
  if (noise_sigma < 0) throw DomainError("noise sigma must be nonnegative");
  const auto truth = tt_random<double>(shape, true_ranks, seed);
  Rng pick = Rng(seed).split(2);
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(nnz) * 2);
  while (chosen.size() < static_cast<std::size_t>(nnz)) chosen.insert(pick.uniform_int(shape.size()));
  std::vector<std::uint64_t> flat(chosen.begin(), chosen.end());
  std::sort(flat.begin(), flat.end());

  Rng noise = Rng(seed).split(3);
  std::vector<Index> coords;
  std::vector<double> values;
  coords.reserve(flat.size() * static_cast<std::size_t>(shape.order()));
  values.reserve(flat.size());
  for (std::uint64_t f : flat) {
    const MultiIndex idx = delinearize(f, shape);
    coords.insert(coords.end(), idx.begin(), idx.end());
    values.push_back(tt_entry(truth, idx) + noise_sigma * noise.normal());
  }
  return SparseTensor<double>(shape, std::move(coords), std::move(values));
}

}  // namespace ttals
