#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "errors.hpp"

namespace ttals {

using Index = std::int64_t;
using MultiIndex = std::vector<Index>;

/// Mode sizes of an N-way tensor. Linearization is first-index-fastest.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<Index> dims) : Shape(std::vector<Index>(dims)) {}
  explicit Shape(std::vector<Index> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw DomainError("shape must have at least one mode");
    std::uint64_t total = 1;
    for (Index d : dims_) {
      if (d < 1) throw DomainError(fmt::format("mode size must be positive, got {}", d));
      if (total > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(d))
        throw DomainError("tensor size overflows 64 bits");
      total *= static_cast<std::uint64_t>(d);
    }
    size_ = total;
  }

  Index order() const { return static_cast<Index>(dims_.size()); }
  Index operator[](Index k) const { return dims_[static_cast<std::size_t>(k)]; }
  Index dim(Index k) const { return dims_.at(static_cast<std::size_t>(k)); }
  const std::vector<Index>& dims() const { return dims_; }
  std::uint64_t size() const { return size_; }

  /// Product of dims_[begin, end).
  std::uint64_t span_size(Index begin, Index end) const {
    std::uint64_t p = 1;
    for (Index k = begin; k < end; ++k) p *= static_cast<std::uint64_t>(dims_[k]);
    return p;
  }

  /// Shape with mode `skip` removed; empty-mode case yields shape {1}.
  Shape without(Index skip) const {
    std::vector<Index> d;
    for (Index k = 0; k < order(); ++k)
      if (k != skip) d.push_back(dims_[k]);
    if (d.empty()) d.push_back(1);
    return Shape(std::move(d));
  }

  bool operator==(const Shape&) const = default;

 private:
  std::vector<Index> dims_{1};
  std::uint64_t size_ = 1;
};

inline void check_mode(const Shape& shape, Index mode) {
  if (mode < 0 || mode >= shape.order())
    throw BoundsError(fmt::format("mode {} out of range for order-{} tensor", mode, shape.order()));
}

inline std::uint64_t linearize(std::span<const Index> idx, const Shape& shape) {
  if (static_cast<Index>(idx.size()) != shape.order())
    throw BoundsError(fmt::format("index has {} components, shape has {}", idx.size(), shape.order()));
  std::uint64_t flat = 0;
  std::uint64_t stride = 1;
  for (Index k = 0; k < shape.order(); ++k) {
    if (idx[k] < 0 || idx[k] >= shape[k])
      throw BoundsError(fmt::format("index component {} = {} outside [0, {})", k, idx[k], shape[k]));
    flat += static_cast<std::uint64_t>(idx[k]) * stride;
    stride *= static_cast<std::uint64_t>(shape[k]);
  }
  return flat;
}

inline MultiIndex delinearize(std::uint64_t flat, const Shape& shape) {
  if (flat >= shape.size()) throw BoundsError(fmt::format("flat index {} >= size {}", flat, shape.size()));
  MultiIndex idx(static_cast<std::size_t>(shape.order()));
  for (Index k = 0; k < shape.order(); ++k) {
    const auto d = static_cast<std::uint64_t>(shape[k]);
    idx[k] = static_cast<Index>(flat % d);
    flat /= d;
  }
  return idx;
}

inline std::string to_string(const Shape& s) { return fmt::format("({})", fmt::join(s.dims(), ", ")); }

}  // namespace ttals
