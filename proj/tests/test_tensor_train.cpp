#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "ttals/fit.hpp"
#include "ttals/tensor_train.hpp"

using namespace ttals;

namespace {

TensorTrain<double> random_tt(std::vector<Index> dims, std::vector<Index> ranks, std::uint64_t seed) {
  return tt_random<double>(Shape(dims), ranks, seed);
}

double rel_diff(const DenseTensor<double>& a, const DenseTensor<double>& b) {
  return (a.values() - b.values()).norm() / b.values().norm();
}

}  // namespace

TEST_CASE("tt_random") {
  const auto a = random_tt({3, 4, 5}, {2, 3}, 9);
  const auto b = random_tt({3, 4, 5}, {2, 3}, 9);
  for (Index k = 0; k < 3; ++k) CHECK(a.core(k) == b.core(k));
  CHECK_FALSE(a.center().has_value());
  CHECK(a.ranks() == std::vector<Index>{1, 2, 3, 1});

  const auto clipped = random_tt({2, 3, 2}, {10, 10}, 1);
  CHECK(clipped.ranks() == std::vector<Index>{1, 2, 2, 1});

  const auto single = random_tt({7}, {}, 1);
  CHECK(single.order() == 1);
  CHECK(single.core(0).rank_left() == 1);
  CHECK(single.core(0).dim() == 7);
  CHECK(single.core(0).rank_right() == 1);
}

TEST_CASE("clipped ranks satisfy the product bounds") {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 500; ++trial) {
    std::uniform_int_distribution<Index> order(1, 6), dim(1, 5), rank(1, 40);
    std::vector<Index> d(static_cast<std::size_t>(order(gen)));
    for (auto& v : d) v = dim(gen);
    std::vector<Index> interior(d.size() - 1);
    for (auto& v : interior) v = rank(gen);
    const Shape s(d);
    const auto [r, clipped] = clip_ranks(s, interior);
    for (Index k = 1; k < s.order(); ++k) {
      CHECK(r[k] <= interior[k - 1]);
      CHECK(static_cast<std::uint64_t>(r[k]) <= s.span_size(0, k));
      CHECK(static_cast<std::uint64_t>(r[k]) <= s.span_size(k, s.order()));
      CHECK(r[k] <= r[k - 1] * s[k - 1]);
      CHECK(r[k] <= r[k + 1] * s[k]);
    }
  }
}

TEST_CASE("tensor train constructor checks ranks") {
  std::vector<Core<double>> bad{Core<double>(1, 2, 2), Core<double>(3, 2, 1)};
  CHECK_THROWS_AS(TensorTrain<double>{bad}, DomainError);
  std::vector<Core<double>> boundary{Core<double>(2, 2, 1)};
  CHECK_THROWS_AS(TensorTrain<double>{boundary}, DomainError);
}

TEST_CASE("tt_entry and tt_to_dense") {
  std::vector<Core<double>> ones;
  for (Index d : {2, 3, 2}) {
    Core<double> c(1, d, 1);
    c.left().setOnes();
    ones.push_back(c);
  }
  const TensorTrain<double> all_ones(ones);
  CHECK(tt_entry(all_ones, MultiIndex{1, 2, 0}) == 1.0);
  CHECK(tt_to_dense(all_ones).values().isOnes());

  const auto single = random_tt({5}, {}, 2);
  CHECK(tt_entry(single, MultiIndex{3}) == single.core(0)(0, 3, 0));
  CHECK(tt_to_dense(single).values() == single.core(0).left().col(0));

  const auto tt = random_tt({3, 2, 4, 3}, {2, 3, 2}, 3);
  const auto dense = tt_to_dense(tt);
  for (const auto& idx : oracle::all_indices(tt.shape().dims())) {
    const double ref = oracle::entry(tt, idx);
    CHECK(std::abs(tt_entry(tt, idx) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
    CHECK(std::abs(dense(idx) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
  }
  CHECK_THROWS_AS(tt_entry(tt, MultiIndex{3, 0, 0, 0}), BoundsError);
  CHECK_THROWS_AS(tt_to_dense(tt, 10), DomainError);
}

TEST_CASE("chain matrices") {
  const auto tt = random_tt({2, 2, 2}, {2, 2}, 5);
  CHECK(left_chain(tt, 0) == Matrix<double>::Ones(1, 1));
  CHECK(right_chain(tt, 2) == Matrix<double>::Ones(1, 1));
  for (Index j = 0; j < 3; ++j) {
    CHECK((left_chain(tt, j) - oracle::left_chain(tt, j)).norm() <= 1e-12);
    CHECK((right_chain(tt, j) - oracle::right_chain(tt, j)).norm() <= 1e-12);
  }
  const auto tt5 = random_tt({2, 3, 2, 3, 2}, {2, 3, 3, 2}, 6);
  for (Index j = 0; j < 5; ++j) {
    CHECK((left_chain(tt5, j) - oracle::left_chain(tt5, j)).norm() <= 1e-12 * (1 + oracle::left_chain(tt5, j).norm()));
    CHECK((right_chain(tt5, j) - oracle::right_chain(tt5, j)).norm() <= 1e-12 * (1 + oracle::right_chain(tt5, j).norm()));
  }
  CHECK_THROWS_AS(left_chain(tt5, 5), BoundsError);
}

TEST_CASE("non-center matrix equals the Kronecker product of the chains") {
  const auto tt = random_tt({2, 3, 2, 2}, {2, 3, 2}, 8);
  for (Index j = 0; j < 4; ++j) {
    const Matrix<double> l = oracle::left_chain(tt, j);
    const Matrix<double> r = oracle::right_chain(tt, j);
    const Matrix<double> a = non_center_matrix(tt, j);
    const Shape shape = tt.shape();
    const Shape off = shape.without(j);
    // X_(j)^T = A^{!=j} G^T must hold entry by entry for the represented tensor.
    const auto dense = tt_to_dense(tt);
    const Matrix<double> unfold = mode_unfolding(dense, j);
    Matrix<double> g(tt.core(j).dim(), tt.core(j).rank_left() * tt.core(j).rank_right());
    for (Index i = 0; i < g.rows(); ++i)
      for (Index b = 0; b < tt.core(j).rank_right(); ++b)
        for (Index aa = 0; aa < tt.core(j).rank_left(); ++aa) g(i, aa + tt.core(j).rank_left() * b) = tt.core(j)(aa, i, b);
    CHECK((a * g.transpose() - unfold.transpose()).norm() <= 1e-10 * unfold.norm());
    // Kronecker structure, row lo + P * hi, column a + R_{j-1} * b.
    for (Index hi = 0; hi < r.cols(); ++hi)
      for (Index lo = 0; lo < l.rows(); ++lo)
        for (Index b = 0; b < r.rows(); ++b)
          for (Index aa = 0; aa < l.cols(); ++aa)
            REQUIRE(std::abs(a(lo + l.rows() * hi, aa + l.cols() * b) - l(lo, aa) * r(b, hi)) <= 1e-12);
  }
}

TEST_CASE("orthogonalize_to") {
  const auto tt = random_tt({3, 4, 3, 2}, {3, 4, 2}, 10);
  const auto dense = tt_to_dense(tt);
  for (Index j = 0; j < 4; ++j) {
    const auto c = orthogonalize_to(tt, j);
    REQUIRE(c.center() == j);
    CHECK(canonical_residual(c) <= 1e-8);
    CHECK(rel_diff(tt_to_dense(c), dense) <= 1e-10);
    CHECK(std::abs(tt_norm(c) - dense.norm()) <= 1e-10 * dense.norm());
    // Already canonical: orthogonalizing again leaves the cores in place.
    const auto again = orthogonalize_to(c, j);
    for (Index k = 0; k < 4; ++k) CHECK((again.core(k).left() - c.core(k).left()).norm() <= 1e-10 * (1 + c.core(k).left().norm()));
    const Matrix<double> a = non_center_matrix(c, j);
    CHECK((a.transpose() * a - Matrix<double>::Identity(a.cols(), a.cols())).norm() <= 1e-8);
  }
  CHECK(std::abs(tt_norm(orthogonalize_to(tt, 3)) - orthogonalize_to(tt, 3).core(3).left().norm()) <= 1e-10);

  // Rank-one chain of unit vectors is unchanged up to sign.
  std::vector<Core<double>> units;
  for (Index d : {3, 2, 4}) {
    Core<double> c(1, d, 1);
    c(0, 1, 0) = 1.0;
    units.push_back(c);
  }
  const TensorTrain<double> unit_tt(units);
  const auto ou = orthogonalize_to(unit_tt, 1);
  for (Index k = 0; k < 3; ++k) CHECK(ou.core(k).left().cwiseAbs() == unit_tt.core(k).left().cwiseAbs());
}

TEST_CASE("shift_center") {
  const auto tt = random_tt({4, 5}, {3}, 11);
  auto c = orthogonalize_to(tt, 0);
  auto shifted = shift_center(c, Direction::right);
  CHECK(shifted.center() == 1);
  const Matrix<double> g = shifted.core(0).left().transpose() * shifted.core(0).left();
  CHECK((g - Matrix<double>::Identity(3, 3)).norm() <= 1e-10);
  CHECK_THROWS_AS(shift_center(shifted, Direction::right), StateError);
  CHECK_THROWS_AS(shift_center(c, Direction::left), StateError);
  CHECK_THROWS_AS(shift_center(tt, Direction::right), StateError);

  const auto big = random_tt({3, 4, 3, 4, 3}, {3, 4, 4, 3}, 12);
  const auto dense = tt_to_dense(big);
  auto walk = orthogonalize_to(big, 0);
  for (Index step = 0; step < 4; ++step) {
    walk.shift_center(Direction::right);
    CHECK(canonical_residual(walk) <= 1e-8);
    CHECK(rel_diff(tt_to_dense(walk), dense) <= 1e-12 * 10);
  }
  for (Index step = 0; step < 4; ++step) {
    walk.shift_center(Direction::left);
    CHECK(canonical_residual(walk) <= 1e-8);
  }
  auto round = shift_center(shift_center(orthogonalize_to(big, 2), Direction::right), Direction::left);
  CHECK(rel_diff(tt_to_dense(round), dense) <= 1e-10);

  // An orthonormal core yields a triangular factor with unit diagonal magnitudes.
  auto canon = orthogonalize_to(big, 3);
  auto copy = canon;
  const Matrix<double> r = copy.left_orthonormalize(1);
  CHECK((r.diagonal().cwiseAbs() - Vector<double>::Ones(r.rows())).norm() <= 1e-10);
  CHECK((r.diagonal().array() >= 0).all());
}

TEST_CASE("set_core drops the center unless the center core is replaced") {
  auto tt = orthogonalize_to(random_tt({3, 3, 3}, {2, 2}, 1), 1);
  tt.set_core(1, tt.core(1));
  CHECK(tt.center() == 1);
  tt.set_core(0, tt.core(0));
  CHECK_FALSE(tt.center().has_value());
  CHECK_THROWS_AS(tt.set_core(0, Core<double>(1, 4, 2)), DomainError);
}

TEST_CASE("tt_norm without a center") {
  const auto tt = random_tt({3, 4, 2}, {2, 2}, 2);
  CHECK(tt_norm(tt) == doctest::Approx(tt_to_dense(tt).norm()).epsilon(1e-12));
}
