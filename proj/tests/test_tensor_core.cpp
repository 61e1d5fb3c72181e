#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "ttals/fit.hpp"
#include "ttals/sparse_tensor.hpp"

using namespace ttals;

namespace {

DenseTensor<double> random_dense(const Shape& shape, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  DenseTensor<double> x{shape};
  for (Index t = 0; t < x.size(); ++t) x.values()[t] = nd(gen);
  return x;
}

Shape random_shape(std::mt19937_64& gen, Index max_order, Index max_dim) {
  std::uniform_int_distribution<Index> order(1, max_order), dim(1, max_dim);
  std::vector<Index> d(static_cast<std::size_t>(order(gen)));
  for (auto& v : d) v = dim(gen);
  return Shape(d);
}

DenseTensor<double> iota_tensor(const Shape& s) {
  DenseTensor<double> x{s};
  for (Index t = 0; t < x.size(); ++t) x.values()[t] = static_cast<double>(t);
  return x;
}

}  // namespace

TEST_CASE("linearize examples") {
  const Shape s{2, 3, 4};
  CHECK(linearize(MultiIndex{0, 0, 0}, s) == 0);
  CHECK(linearize(MultiIndex{1, 0, 0}, s) == 1);
  // Position in a full first-index-fastest enumeration.
  const auto all = oracle::all_indices(s.dims());
  std::uint64_t pos = 0;
  while (all[pos] != MultiIndex{1, 2, 3}) ++pos;
  CHECK(pos == 23);
  CHECK(linearize(MultiIndex{1, 2, 3}, s) == pos);
  CHECK_THROWS_AS(linearize(MultiIndex{2, 0, 0}, s), BoundsError);
  CHECK_THROWS_AS(linearize(MultiIndex{0, -1, 0}, s), BoundsError);
  CHECK_THROWS_AS(linearize(MultiIndex{0, 0}, s), BoundsError);
}

TEST_CASE("linearize and delinearize are inverse") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 10000; ++trial) {
    const Shape s = random_shape(gen, 6, 7);
    const auto flat = std::uniform_int_distribution<std::uint64_t>(0, s.size() - 1)(gen);
    const auto idx = delinearize(flat, s);
    REQUIRE(linearize(idx, s) == flat);
    CHECK(delinearize(linearize(idx, s), s) == idx);
  }
}

TEST_CASE("shape validation") {
  CHECK_THROWS_AS(Shape(std::vector<Index>{}), DomainError);
  CHECK_THROWS_AS((Shape{2, 0}), DomainError);
  CHECK_THROWS_AS((Shape{Index{1} << 40, Index{1} << 40}), DomainError);
  CHECK((Shape{2, 3, 4}).size() == 24);
}

TEST_CASE("mode unfolding examples") {
  std::mt19937_64 gen(3);
  const auto m = random_dense(Shape{2, 3}, gen);
  const Eigen::Map<const Matrix<double>> mat(m.values().data(), 2, 3);
  CHECK(mode_unfolding(m, 0) == Matrix<double>(mat));
  CHECK(mode_unfolding(m, 1) == Matrix<double>(mat.transpose()));
  CHECK_THROWS_AS(mode_unfolding(m, 2), BoundsError);
  CHECK_THROWS_AS(mode_unfolding(m, -1), BoundsError);
}

TEST_CASE("mode unfolding matches the index-formula oracle bit for bit") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Shape s = trial == 0 ? Shape{2, 3, 4} : random_shape(gen, 5, 4);
    const auto x = random_dense(s, gen);
    for (Index n = 0; n < s.order(); ++n) {
      const auto u = mode_unfolding(x, n);
      const Shape rest = s.without(n);
      for (const auto& idx : oracle::all_indices(s.dims())) {
        MultiIndex other;
        for (Index k = 0; k < s.order(); ++k)
          if (k != n) other.push_back(idx[k]);
        if (other.empty()) other.push_back(0);
        REQUIRE(u(idx[n], static_cast<Index>(linearize(other, rest))) == x(idx));
      }
      CHECK(std::abs(u.norm() - x.norm()) <= 1e-12 * x.norm());
    }
  }
}

TEST_CASE("core matricizations") {
  Core<double> vec(1, 5, 1);
  for (Index i = 0; i < 5; ++i) vec(0, i, 0) = static_cast<double>(i + 1);
  CHECK(vec.left().rows() == 5);
  CHECK(vec.left().cols() == 1);
  CHECK(vec.left()(3, 0) == 4.0);

  // Entries 0..7 in storage order.
  Matrix<double> storage(4, 2);
  for (Index t = 0; t < 8; ++t) storage.data()[t] = static_cast<double>(t);
  const auto c = Core<double>::from_left(2, 2, storage);
  for (Index r = 0; r < 2; ++r)
    for (Index i = 0; i < 2; ++i)
      for (Index cc = 0; cc < 2; ++cc) {
        CHECK(c.left()(r + 2 * i, cc) == c(r, i, cc));
        CHECK(c.right()(r, i + 2 * cc) == c(r, i, cc));
      }
  const auto back = Core<double>::from_right(2, Matrix<double>(c.right()));
  CHECK(back == c);
  CHECK(Core<double>::from_left(2, 2, Matrix<double>(c.left())) == c);
}

TEST_CASE("fit examples") {
  const DenseTensor<double> target(Shape{2}, Vector<double>{{3.0, 4.0}});
  CHECK(fit(target, target) == doctest::Approx(1.0));
  CHECK(fit(DenseTensor<double>(Shape{2}), target) == doctest::Approx(0.0));
  CHECK(fit(DenseTensor<double>(Shape{2}, Vector<double>{{3.0, 0.0}}), target) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS(fit(target, DenseTensor<double>(Shape{2})), DomainError);
  CHECK_THROWS_AS(fit(target, DenseTensor<double>(Shape{3})), DomainError);
}

TEST_CASE("fit is invariant under mode permutations") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Shape s = random_shape(gen, 4, 4);
    const auto a = random_dense(s, gen);
    const auto b = random_dense(s, gen);
    std::vector<Index> perm(static_cast<std::size_t>(s.order()));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), gen);
    CHECK(fit(permute_modes<double>(a, perm), permute_modes<double>(b, perm)) == doctest::Approx(fit(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("mode gather index examples") {
  SparseTensor<double> one(Shape{2, 2, 2}, {1, 0, 1}, {5.0});
  ModeGatherIndex<double> g1(one, 0);
  CHECK(g1.keys().size() == 1);
  CHECK(g1.range(g1.keys()[0]).second - g1.range(g1.keys()[0]).first == 1);

  SparseTensor<double> two(Shape{2, 2, 2}, {0, 0, 0, 1, 0, 0}, {1.0, 2.0});
  ModeGatherIndex<double> g(two, 0);
  REQUIRE(g.keys().size() == 1);
  CHECK(g.keys()[0] == 0);
  const auto [b, e] = g.range(0);
  CHECK(e - b == 2);
  const auto [ab, ae] = g.range(3);
  CHECK(ab == ae);
  const std::vector<std::uint64_t> rows{3};
  CHECK(gather_rows(g, rows).isZero());
}

TEST_CASE("dense gather rows") {
  const auto x = iota_tensor(Shape{2, 2, 2});
  // Mode 1 fiber at (i0 = 0, i2 = 0).
  const std::vector<std::uint64_t> rows{0, 0, 3};
  const auto m = gather_rows(x, 1, rows);
  CHECK(m(0, 0) == x({0, 0, 0}));
  CHECK(m(0, 1) == x({0, 1, 0}));
  CHECK(m.row(1) == m.row(0));
  CHECK(m(2, 1) == x({1, 1, 1}));
  const std::vector<std::uint64_t> bad{4};
  CHECK_THROWS_AS(gather_rows(x, 1, bad), BoundsError);
}

TEST_CASE("sparse gather rows agree with densified gather") {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 30; ++trial) {
    const Shape s = random_shape(gen, 4, 6);
    std::vector<Index> coords;
    std::vector<double> vals;
    std::bernoulli_distribution keep(0.3);
    for (const auto& idx : oracle::all_indices(s.dims()))
      if (keep(gen)) {
        coords.insert(coords.end(), idx.begin(), idx.end());
        vals.push_back(std::normal_distribution<double>()(gen));
      }
    const SparseTensor<double> sp(s, coords, vals);
    const auto dense = densify(sp);
    for (Index j = 0; j < s.order(); ++j) {
      ModeGatherIndex<double> g(sp, j);
      std::size_t covered = 0;
      for (auto key : g.keys()) {
        const auto [b, e] = g.range(key);
        covered += e - b;
      }
      CHECK(covered == static_cast<std::size_t>(sp.nnz()));
      CHECK(std::is_sorted(g.keys().begin(), g.keys().end()));
      CHECK(std::adjacent_find(g.keys().begin(), g.keys().end()) == g.keys().end());
      const ModeSplit split(s, j);
      std::vector<std::uint64_t> rows(split.off_size());
      std::iota(rows.begin(), rows.end(), std::uint64_t{0});
      std::shuffle(rows.begin(), rows.end(), gen);
      CHECK(gather_rows(g, rows) == gather_rows(dense, j, rows));
    }
  }
  const SparseTensor<double> empty(Shape{3, 3}, {}, {});
  const std::vector<std::uint64_t> rows{0, 1, 2};
  CHECK(gather_rows(ModeGatherIndex<double>(empty, 1), rows).isZero());
}

TEST_CASE("sparse ingest validation") {
  CHECK_THROWS_AS(SparseTensor<double>(Shape{2, 2}, {0, 0, 0, 0}, {1.0, 2.0}), DataError);
  CHECK_THROWS_AS(SparseTensor<double>(Shape{2, 2}, {0, 2}, {1.0}), BoundsError);
  CHECK_THROWS_AS(SparseTensor<double>(Shape{2, 2}, {0, 0}, {std::nan("")}), DataError);
}

TEST_CASE("reshape") {
  const auto x = iota_tensor(Shape{6});
  const auto y = reshape(x, Shape{2, 3});
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j) CHECK(y({i, j}) == x.values()[i + 2 * j]);
  CHECK(reshape(x, Shape{6}).values() == x.values());
  std::mt19937_64 gen(1);
  const auto z = random_dense(Shape{2, 3, 4}, gen);
  const auto round = reshape(reshape(z, Shape{24}), Shape{2, 3, 4});
  CHECK(round.shape() == z.shape());
  CHECK(round.values() == z.values());
  CHECK_THROWS_AS(reshape(x, Shape{4}), DomainError);
}
