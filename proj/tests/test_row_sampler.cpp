#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "ttals/row_sampler.hpp"

using namespace ttals;

namespace {

Matrix<double> random_matrix(Index rows, Index cols, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  Matrix<double> a(rows, cols);
  for (Index t = 0; t < a.size(); ++t) a.data()[t] = nd(gen);
  return a;
}

void check_tree(const RowSampler<double>& s) {
  const double scale = s.gram(0).norm() + 1;
  for (Index v = 0; v < s.node_count(); ++v) {
    CHECK((s.gram(v) - s.gram(v).transpose()).norm() <= 1e-12 * scale);
    if (!s.is_leaf(v)) CHECK((s.gram(v) - s.gram(2 * v + 1) - s.gram(2 * v + 2)).norm() <= 1e-10 * scale);
  }
}

}  // namespace

TEST_CASE("row sampler construction") {
  std::mt19937_64 gen(1);
  const Matrix<double> one = random_matrix(1, 3, gen);
  RowSampler<double> s1(one);
  CHECK(s1.leaf_count() == 1);
  CHECK(s1.node_count() == 1);
  CHECK((s1.gram(0) - one.transpose() * one).norm() <= 1e-15);

  RowSampler<double> id(Matrix<double>::Identity(2, 2));
  CHECK(id.gram(0) == Matrix<double>::Identity(2, 2));

  const Matrix<double> a = random_matrix(64, 4, gen);
  RowSampler<double> s(a);
  CHECK(s.leaf_size() == 4);
  CHECK(s.leaf_count() == 16);
  CHECK(s.node_count() == 31);
  CHECK((s.gram(0) - a.transpose() * a).norm() <= 1e-12 * a.squaredNorm());
  check_tree(s);

  // Row counts that do not fill the last leaf, and non-power-of-two leaf counts.
  for (Index rows : {5, 13, 37, 100}) {
    const Matrix<double> b = random_matrix(rows, 3, gen);
    RowSampler<double> sb(b);
    CHECK(sb.leaf_count() == (rows + 2) / 3);
    CHECK(sb.node_count() == 2 * sb.leaf_count() - 1);
    CHECK((sb.gram(0) - b.transpose() * b).norm() <= 1e-12 * b.squaredNorm());
    check_tree(sb);
  }
  CHECK_THROWS_AS(RowSampler<double>(Matrix<double>(0, 2)), DomainError);
}

TEST_CASE("row sampler examples") {
  Rng rng(3);
  RowSampler<double> id(Matrix<double>::Identity(2, 2));
  for (int t = 0; t < 1000; ++t) REQUIRE(id.sample(Vector<double>::Unit(2, 0), rng) == 0);

  Matrix<double> a(2, 2);
  a << 1, 0, 0, 2;
  RowSampler<double> s(a);
  const Vector<double> h = Vector<double>::Ones(2);
  int hits = 0;
  const int draws = 100000;
  for (int t = 0; t < draws; ++t) hits += s.sample(h, rng) == 1;
  CHECK(std::abs(hits / double(draws) - 0.8) <= 0.01);
}

TEST_CASE("row sampler matches the brute-force distribution") {
  std::mt19937_64 gen(17);
  Rng rng(5);
  const Matrix<double> a = random_matrix(32, 3, gen);
  const Vector<double> h = random_matrix(3, 1, gen);
  RowSampler<double> s(a);
  const Vector<double> ah = a * h;
  std::vector<double> exact(32);
  for (Index i = 0; i < 32; ++i) exact[i] = ah[i] * ah[i];
  exact = oracle::normalized(exact);
  CHECK(s.mass(h) == doctest::Approx(ah.squaredNorm()).epsilon(1e-12));

  std::vector<double> counts(32, 0.0);
  const int draws = 200000;
  for (int t = 0; t < draws; ++t) counts[s.sample(h, rng)] += 1;
  CHECK(oracle::total_variation(oracle::normalized(counts), exact) <= 0.01);
}

TEST_CASE("row sampler with other leaf sizes") {
  std::mt19937_64 gen(19);
  Rng rng(6);
  const Matrix<double> a = random_matrix(50, 2, gen);
  const Vector<double> h = random_matrix(2, 1, gen);
  const Vector<double> ah = a * h;
  std::vector<double> exact(50);
  for (Index i = 0; i < 50; ++i) exact[i] = ah[i] * ah[i];
  exact = oracle::normalized(exact);
  for (Index leaf : {1, 7, 50, 100}) {
    RowSampler<double> s(a, leaf);
    check_tree(s);
    std::vector<double> counts(50, 0.0);
    for (int t = 0; t < 100000; ++t) counts[s.sample(h, rng)] += 1;
    CHECK(oracle::total_variation(oracle::normalized(counts), exact) <= 0.015);
  }
}

TEST_CASE("row sampler never returns zero-weight rows") {
  Rng rng(8);
  Matrix<double> a = Matrix<double>::Zero(40, 2);
  a(3, 0) = 1;
  a(17, 1) = 2;
  a(39, 0) = 1;
  a(39, 1) = -1;
  RowSampler<double> s(a);
  const Vector<double> h = Vector<double>::Ones(2);
  for (int t = 0; t < 20000; ++t) {
    const Index i = s.sample(h, rng);
    REQUIRE((i == 3 || i == 17));
  }
}

TEST_CASE("row sampler zero mass") {
  Rng rng(9);
  RowSampler<double> s(Matrix<double>::Zero(10, 2));
  CHECK_THROWS_AS(s.sample(Vector<double>::Ones(2), rng), DomainError);
  RowSampler<double> id(Matrix<double>::Identity(2, 2));
  CHECK_THROWS_AS(id.sample(Vector<double>::Zero(2), rng), DomainError);
  CHECK_THROWS_AS(id.sample(Vector<double>::Ones(3), rng), DomainError);
}
