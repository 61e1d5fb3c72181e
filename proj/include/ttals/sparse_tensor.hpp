#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "dense_tensor.hpp"

namespace ttals {

/// Coordinate-format sparse tensor. Coordinates are 0-based; duplicates are rejected.
template <typename Scalar = double>
class SparseTensor {
 public:
  SparseTensor() = default;

  /// `coords` holds nnz consecutive N-tuples.
  SparseTensor(Shape shape, std::vector<Index> coords, std::vector<Scalar> values)
      : shape_(std::move(shape)), coords_(std::move(coords)), values_(std::move(values)) {
    const auto n = static_cast<std::size_t>(shape_.order());
    if (coords_.size() != values_.size() * n)
      throw DataError(fmt::format("{} coordinates for {} values in order-{} tensor", coords_.size(), values_.size(), n));
    std::vector<std::uint64_t> flat(values_.size());
    for (std::size_t e = 0; e < values_.size(); ++e) {
      if (!std::isfinite(static_cast<double>(values_[e]))) throw DataError(fmt::format("non-finite value at nonzero {}", e));
      flat[e] = linearize(coordinate(static_cast<Index>(e)), shape_);
    }
    std::sort(flat.begin(), flat.end());
    if (auto dup = std::adjacent_find(flat.begin(), flat.end()); dup != flat.end()) {
      const auto idx = delinearize(*dup, shape_);
      throw DataError(fmt::format("duplicate coordinate ({})", fmt::join(idx, ", ")));
    }
  }

  const Shape& shape() const { return shape_; }
  Index order() const { return shape_.order(); }
  Index nnz() const { return static_cast<Index>(values_.size()); }
  std::span<const Index> coordinate(Index e) const {
    const auto n = static_cast<std::size_t>(shape_.order());
    return {coords_.data() + static_cast<std::size_t>(e) * n, n};
  }
  const std::vector<Index>& coordinates() const { return coords_; }
  const std::vector<Scalar>& values() const { return values_; }

  Scalar norm() const {
    Scalar s = 0;
    for (Scalar v : values_) s += v * v;
    return std::sqrt(s);
  }

 private:
  Shape shape_;
  std::vector<Index> coords_;
  std::vector<Scalar> values_;
};

inline constexpr std::uint64_t kDefaultDenseCap = std::uint64_t{1} << 28;

template <typename Scalar>
DenseTensor<Scalar> densify(const SparseTensor<Scalar>& x, std::uint64_t cap = kDefaultDenseCap) {
  if (x.shape().size() > cap)
    throw DomainError(fmt::format("densifying {} entries exceeds cap {}", x.shape().size(), cap));
  DenseTensor<Scalar> out{x.shape()};
  for (Index e = 0; e < x.nnz(); ++e) out(x.coordinate(e)) = x.values()[static_cast<std::size_t>(e)];
  return out;
}

/// Groups nonzeros by their off-mode index so that a mode-j fiber can be
/// looked up in O(log nnz).
template <typename Scalar = double>
class ModeGatherIndex {
 public:
  ModeGatherIndex(const SparseTensor<Scalar>& x, Index j) : mode_(j), split_(x.shape(), j) {
    const auto nnz = static_cast<std::size_t>(x.nnz());
    std::vector<std::uint64_t> key(nnz);
    for (std::size_t e = 0; e < nnz; ++e) key[e] = off_mode_index(x.coordinate(static_cast<Index>(e)), x.shape(), j);
    std::vector<std::size_t> order(nnz);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });

    mode_coord_.reserve(nnz);
    values_.reserve(nnz);
    for (std::size_t e : order) {
      if (keys_.empty() || keys_.back() != key[e]) {
        keys_.push_back(key[e]);
        offsets_.push_back(mode_coord_.size());
      }
      mode_coord_.push_back(x.coordinate(static_cast<Index>(e))[j]);
      values_.push_back(x.values()[e]);
    }
    offsets_.push_back(mode_coord_.size());
  }

  Index mode() const { return mode_; }
  const ModeSplit& split() const { return split_; }
  const std::vector<std::uint64_t>& keys() const { return keys_; }
  std::size_t nnz() const { return values_.size(); }

  /// [begin, end) positions into mode_coords()/values() for the fiber at `key`.
  std::pair<std::size_t, std::size_t> range(std::uint64_t key) const {
    auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    if (it == keys_.end() || *it != key) return {0, 0};
    const auto k = static_cast<std::size_t>(it - keys_.begin());
    return {offsets_[k], offsets_[k + 1]};
  }

  const std::vector<Index>& mode_coords() const { return mode_coord_; }
  const std::vector<Scalar>& values() const { return values_; }

 private:
  Index mode_;
  ModeSplit split_;
  std::vector<std::uint64_t> keys_;
  std::vector<std::size_t> offsets_;
  std::vector<Index> mode_coord_;
  std::vector<Scalar> values_;
};

template <typename Scalar>
Matrix<Scalar> gather_rows(const ModeGatherIndex<Scalar>& index, std::span<const std::uint64_t> rows) {
  const ModeSplit& split = index.split();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(static_cast<Index>(rows.size()), split.dim);
  for (std::size_t d = 0; d < rows.size(); ++d) {
    if (rows[d] >= split.off_size())
      throw BoundsError(fmt::format("off-mode index {} >= {}", rows[d], split.off_size()));
    const auto [b, e] = index.range(rows[d]);
    for (std::size_t p = b; p < e; ++p) out(static_cast<Index>(d), index.mode_coords()[p]) = index.values()[p];
  }
  return out;
}

/// Sparse tensor plus one gather index per mode, as consumed by the ALS drivers.
template <typename Scalar = double>
struct IndexedSparseTensor {
  explicit IndexedSparseTensor(const SparseTensor<Scalar>& t) : tensor(&t) {
    for (Index j = 0; j < t.order(); ++j) index.emplace_back(t, j);
  }
  const SparseTensor<Scalar>* tensor;
  std::vector<ModeGatherIndex<Scalar>> index;

  const Shape& shape() const { return tensor->shape(); }
};

}  // namespace ttals
