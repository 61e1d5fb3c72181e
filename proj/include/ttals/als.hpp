#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseCore>
#include <spdlog/spdlog.h>

#include "chain_sampler.hpp"
#include "fit.hpp"
#include "parallel.hpp"
#include "sparse_tensor.hpp"
#include "tensor_train.hpp"

namespace ttals {

/// How sketched updates choose their rows.
enum class SketchMode {
  leverage,    ///< i.i.d. draws from the exact leverage-score distribution
  exhaustive,  ///< every row once with unit weight (test hook; equals the exact update)
};

enum class AlsStep { update, shift };

struct AlsEvent {
  Index sweep;  // 1-based
  Index mode;   // core updated, or center before the shift
  AlsStep step;
};

struct SweepRecord {
  Index sweep;
  double time_s;
  double fit;
};

template <typename Scalar = double>
struct AlsConfig {
  Index sweeps = 10;
  Index samples = 0;
  std::uint64_t seed = 0;
  Index fit_every = 1;
  std::optional<double> convergence_delta;
  SketchMode sketch = SketchMode::leverage;
  /// Called after every core update and every center shift.
  std::function<void(const TensorTrain<Scalar>&, const AlsEvent&)> observer;
  /// Called as each trace record is produced.
  std::function<void(const SweepRecord&)> on_record;
};

struct SweepTrace {
  std::vector<SweepRecord> records;
  /// ALS time (updates and shifts only) over all sweeps run.
  double als_seconds = 0;
  Index sweeps_run = 0;

  double mean_sweep_seconds() const { return sweeps_run > 0 ? als_seconds / static_cast<double>(sweeps_run) : 0.0; }
  double final_fit() const { return records.empty() ? 0.0 : records.back().fit; }
};

inline void write_trace_header(std::ostream& os) { os << "sweep,time_s,fit\n"; }
inline void write_trace_record(std::ostream& os, const SweepRecord& r) {
  os << fmt::format("{},{:.9f},{:.17g}\n", r.sweep, r.time_s, r.fit) << std::flush;
}
inline void write_trace_csv(std::ostream& os, const SweepTrace& t) {
  write_trace_header(os);
  for (const auto& r : t.records) write_trace_record(os, r);
}

template <typename Scalar = double>
struct AlsResult {
  TensorTrain<Scalar> tt;
  SweepTrace trace;
};

/// Leverage scores l_i = a_i (A^T A)^+ a_i^T, from a rank-revealing SVD.
template <typename Scalar>
Vector<Scalar> leverage_scores(const Matrix<Scalar>& a) {
  if (a.size() == 0) return Vector<Scalar>::Zero(a.rows());
  Eigen::JacobiSVD<Matrix<Scalar>> svd(a, Eigen::ComputeThinU);
  const Index rank = svd.rank();
  return svd.matrixU().leftCols(rank).rowwise().squaredNorm();
}

/// Weighted sketch of the core-j least-squares problem. Row d of `design` is
/// weight_d * (left_d kron right_d), column a + R_{j-1} * b; `rhs` holds the
/// equally weighted mode-j fibers at `sample_ids`.
template <typename Scalar = double, typename Rhs = Matrix<Scalar>>
struct SketchedProblem {
  Index mode = 0;
  Index rank_left = 1;
  Index rank_right = 1;
  Matrix<Scalar> design;
  Rhs rhs;
  std::vector<std::uint64_t> sample_ids;
  std::vector<Scalar> weights;
};

namespace detail {

template <typename Scalar>
void check_center(const TensorTrain<Scalar>& tt, Index j) {
  if (!tt.center() || *tt.center() != j) throw StateError(fmt::format("core update at {} requires the train centered at {}", j, j));
}

/// Rearranges an (R_{j-1} R_j) x I_j solution, row a + R_{j-1} b, into a core.
template <typename Scalar>
Core<Scalar> core_from_solution(const Matrix<Scalar>& x, Index ra, Index dim, Index rb) {
  Core<Scalar> c(ra, dim, rb);
  for (Index i = 0; i < dim; ++i)
    for (Index b = 0; b < rb; ++b)
      for (Index a = 0; a < ra; ++a) c(a, i, b) = x(a + ra * b, i);
  return c;
}

template <typename Scalar>
Matrix<Scalar> weighted_fibers(const DenseTensor<Scalar>& x, Index j, const std::vector<std::uint64_t>& ids,
                               const std::vector<Scalar>& w) {
  Matrix<Scalar> b = gather_rows(x, j, ids);
  for (Index d = 0; d < b.rows(); ++d) b.row(d) *= w[static_cast<std::size_t>(d)];
  return b;
}

template <typename Scalar>
Eigen::SparseMatrix<Scalar, Eigen::RowMajor> weighted_fibers(const IndexedSparseTensor<Scalar>& x, Index j,
                                                             const std::vector<std::uint64_t>& ids,
                                                             const std::vector<Scalar>& w) {
  const auto& index = x.index.at(static_cast<std::size_t>(j));
  std::vector<Eigen::Triplet<Scalar>> trip;
  for (std::size_t d = 0; d < ids.size(); ++d) {
    const auto [b, e] = index.range(ids[d]);
    for (std::size_t p = b; p < e; ++p)
      trip.emplace_back(static_cast<Index>(d), index.mode_coords()[p], w[d] * index.values()[p]);
  }
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> m(static_cast<Index>(ids.size()), index.split().dim);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

template <typename Target>
struct RhsType;
template <typename Scalar>
struct RhsType<DenseTensor<Scalar>> {
  using type = Matrix<Scalar>;
};
template <typename Scalar>
struct RhsType<IndexedSparseTensor<Scalar>> {
  using type = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;
};

}  // namespace detail

/// Exact ALS update of core j: with A^{!=j} orthonormal the minimizer is
/// A^{!=j T} X_(j)^T, formed by contracting x with the left chain and then the
/// right chain. Never materializes A^{!=j}.
template <typename Scalar>
Core<Scalar> exact_core_update(const TensorTrain<Scalar>& tt, const DenseTensor<Scalar>& x, Index j) {
  detail::check_center(tt, j);
  if (!(tt.shape() == x.shape())) throw DomainError("exact_core_update: shape mismatch");
  const ModeSplit split(x.shape(), j);
  const Core<Scalar>& c = tt.core(j);
  const Index ra = c.rank_left(), dim = c.dim();
  const auto before = static_cast<Index>(split.before), after = static_cast<Index>(split.after);

  const Matrix<Scalar> right = right_chain(tt, j);  // rb x after
  Matrix<Scalar> left_contracted;                   // (ra * dim) x after
  if (j == 0) {
    left_contracted = Eigen::Map<const Matrix<Scalar>>(x.values().data(), dim, after);
  } else {
    const Matrix<Scalar> left = left_chain(tt, j);  // before x ra
    const Eigen::Map<const Matrix<Scalar>> xm(x.values().data(), before, dim * after);
    Matrix<Scalar> t = left.transpose() * xm;       // ra x (dim * after)
    left_contracted = Eigen::Map<Matrix<Scalar>>(t.data(), ra * dim, after);
  }
  Matrix<Scalar> updated = left_contracted * right.transpose();
  return Core<Scalar>::from_left(ra, dim, std::move(updated));
}

/// Sparse exact update: each nonzero adds value * (left row)^T (right row) to
/// its slice. Accumulates in a fixed number of chunks, summed in order, so the
/// result does not depend on the thread count.
template <typename Scalar>
Core<Scalar> exact_core_update(const TensorTrain<Scalar>& tt, const SparseTensor<Scalar>& x, Index j) {
  detail::check_center(tt, j);
  if (!(tt.shape() == x.shape())) throw DomainError("exact_core_update: shape mismatch");
  const Core<Scalar>& c = tt.core(j);
  const Index ra = c.rank_left(), rb = c.rank_right(), dim = c.dim(), n = tt.order();
  constexpr Index kChunks = 16;
  const Index nnz = x.nnz();
  std::vector<Matrix<Scalar>> partial(kChunks, Matrix<Scalar>::Zero(ra * dim, rb));

#pragma omp parallel for schedule(static) num_threads(worker_threads())
  for (Index chunk = 0; chunk < kChunks; ++chunk) {
    Index width = 1;
    for (Index k = 0; k < n; ++k) width = std::max({width, tt.core(k).rank_left(), tt.core(k).rank_right()});
    Vector<Scalar> l(width), r(width), next(width);
    Matrix<Scalar>& acc = partial[chunk];
    for (Index e = nnz * chunk / kChunks; e < nnz * (chunk + 1) / kChunks; ++e) {
      const auto idx = x.coordinate(e);
      l[0] = 1;
      for (Index k = 0; k < j; ++k) {
        const auto slice = tt.core(k).slice(idx[k]);
        next.head(slice.cols()).noalias() = slice.transpose() * l.head(slice.rows());
        l.swap(next);
      }
      r[0] = 1;
      for (Index k = n - 1; k > j; --k) {
        const auto slice = tt.core(k).slice(idx[k]);
        next.head(slice.rows()).noalias() = slice * r.head(slice.cols());
        r.swap(next);
      }
      l.head(ra) *= x.values()[static_cast<std::size_t>(e)];
      acc.middleRows(idx[j] * ra, ra).noalias() += l.head(ra) * r.head(rb).transpose();
    }
  }
  Matrix<Scalar> total = std::move(partial[0]);
  for (Index chunk = 1; chunk < kChunks; ++chunk) total += partial[chunk];
  return Core<Scalar>::from_left(ra, dim, std::move(total));
}

template <typename Scalar>
Core<Scalar> exact_core_update(const TensorTrain<Scalar>& tt, const IndexedSparseTensor<Scalar>& x, Index j) {
  return exact_core_update(tt, *x.tensor, j);
}

/// Draws `samples` joint rows of A^{!=j} (one left draw paired with one right
/// draw) and forms the design with weights 1 / sqrt(J p_d).
template <typename Scalar, typename Target>
auto sketch_problem(const TensorTrain<Scalar>& tt, const Target& x, Index j, const ChainSampler<Scalar>& cs,
                    Index samples, Rng& rng) {
  using Problem = SketchedProblem<Scalar, typename detail::RhsType<Target>::type>;
  detail::check_center(tt, j);
  if (samples < 1) throw ConfigError("sample count must be at least 1");
  const Core<Scalar>& c = tt.core(j);
  Problem p;
  p.mode = j;
  p.rank_left = c.rank_left();
  p.rank_right = c.rank_right();
  const auto lefts = cs.sample_left(j, samples, rng);
  const auto rights = cs.sample_right(j, samples, rng);
  const ModeSplit split(tt.shape(), j);
  const Index n = p.rank_left * p.rank_right;
  p.design.resize(samples, n);
  p.sample_ids.resize(static_cast<std::size_t>(samples));
  p.weights.resize(static_cast<std::size_t>(samples));
  for (Index d = 0; d < samples; ++d) {
    const auto& l = lefts[static_cast<std::size_t>(d)];
    const auto& r = rights[static_cast<std::size_t>(d)];
    const Scalar w = Scalar(1) / std::sqrt(static_cast<Scalar>(samples) * joint_probability(l, r));
    p.weights[d] = w;
    p.sample_ids[d] = l.linear + split.before * r.linear;
    for (Index b = 0; b < p.rank_right; ++b) {
      const Scalar wb = w * r.row[b];
      for (Index a = 0; a < p.rank_left; ++a) p.design(d, a + p.rank_left * b) = wb * l.row[a];
    }
  }
  p.rhs = detail::weighted_fibers(x, j, p.sample_ids, p.weights);
  return p;
}

/// The identity sketch: every off-mode row once with unit weight. Test scale.
template <typename Scalar, typename Target>
auto exhaustive_problem(const TensorTrain<Scalar>& tt, const Target& x, Index j) {
  using Problem = SketchedProblem<Scalar, typename detail::RhsType<Target>::type>;
  detail::check_center(tt, j);
  Problem p;
  p.mode = j;
  p.rank_left = tt.core(j).rank_left();
  p.rank_right = tt.core(j).rank_right();
  p.design = non_center_matrix(tt, j);
  p.sample_ids.resize(static_cast<std::size_t>(p.design.rows()));
  for (std::size_t d = 0; d < p.sample_ids.size(); ++d) p.sample_ids[d] = d;
  p.weights.assign(p.sample_ids.size(), Scalar(1));
  p.rhs = detail::weighted_fibers(x, j, p.sample_ids, p.weights);
  return p;
}

/// Solves min ||design * X - rhs|| and reshapes X into core j. Uses the
/// triangular factor of a Householder QR of the design (R^T R X = design^T rhs);
/// falls back to a minimum-norm complete orthogonal decomposition when the
/// design is rank deficient (condition estimate above 1e12) or underdetermined.
template <typename Scalar, typename Rhs>
Core<Scalar> solve_sketched(const SketchedProblem<Scalar, Rhs>& p, Index dim) {
  const Index n = p.design.cols();
  Matrix<Scalar> solution;
  bool deficient = p.design.rows() < n;
  if (deficient) spdlog::warn("sketched problem is underdetermined ({} rows, {} unknowns)", p.design.rows(), n);
  if (!deficient) {
    Eigen::HouseholderQR<Matrix<Scalar>> qr(p.design);
    const auto diag = qr.matrixQR().diagonal().cwiseAbs();
    const Scalar lo = diag.minCoeff(), hi = diag.maxCoeff();
    deficient = !(lo > 0) || hi / lo > Scalar(1e12);
    if (!deficient) {
      const auto r = qr.matrixQR().topRows(n).template triangularView<Eigen::Upper>();
      // rhs^T * design keeps a sparse rhs on the left, where Eigen's product is efficient.
      const Matrix<Scalar> projected = p.rhs.transpose() * p.design;
      solution = projected.transpose();
      r.transpose().solveInPlace(solution);
      r.solveInPlace(solution);
    }
  }
  if (deficient) {
    Eigen::CompleteOrthogonalDecomposition<Matrix<Scalar>> cod(p.design);
    cod.setThreshold(Scalar(1e-12));
    solution = cod.solve(Matrix<Scalar>(p.rhs));
  }
  return detail::core_from_solution(solution, p.rank_left, dim, p.rank_right);
}

/// Sketched update of core j from `samples` leverage-score draws.
template <typename Scalar, typename Target>
Core<Scalar> sketched_core_update(const TensorTrain<Scalar>& tt, const Target& x, Index j, const ChainSampler<Scalar>& cs,
                                  Index samples, Rng& rng) {
  return solve_sketched(sketch_problem(tt, x, j, cs, samples, rng), tt.core(j).dim());
}

template <typename Scalar>
Core<Scalar> sketched_core_update(const TensorTrain<Scalar>& tt, const SparseTensor<Scalar>& x, Index j,
                                  const ChainSampler<Scalar>& cs, Index samples, Rng& rng) {
  return sketched_core_update(tt, IndexedSparseTensor<Scalar>(x), j, cs, samples, rng);
}

namespace detail {

/// Shared sweep driver. One sweep updates cores 0..N-2 moving the center
/// right, then cores N-1..1 moving it left; each core is replaced before its
/// neighbor shift, so the train stays canonical throughout.
template <typename Scalar, typename Target, typename Update, typename AfterShift>
AlsResult<Scalar> sweep_driver(const Target& x, TensorTrain<Scalar> tt, const AlsConfig<Scalar>& cfg, Update&& update,
                               AfterShift&& after_shift) {
  if (cfg.sweeps < 1) throw ConfigError("sweeps must be at least 1");
  if (!(tt.shape() == x.shape())) throw DomainError("initial train shape does not match the target");
  using Clock = std::chrono::steady_clock;
  AlsResult<Scalar> result;
  const Index n = tt.order();
  const Index every = std::max<Index>(1, cfg.fit_every);
  std::optional<double> last_fit;

  auto notify = [&](Index sweep, Index mode, AlsStep step) {
    if (cfg.observer) cfg.observer(tt, AlsEvent{sweep, mode, step});
  };
  auto step = [&](Index sweep, Index j, Direction dir) {
    tt.set_core(j, update(tt, j));
    notify(sweep, j, AlsStep::update);
    if ((dir == Direction::right && j + 1 < n) || (dir == Direction::left && j > 0)) {
      tt.shift_center(dir);
      after_shift(tt, j, dir == Direction::right ? j + 1 : j - 1);
      notify(sweep, j, AlsStep::shift);
    }
  };

  for (Index sweep = 1; sweep <= cfg.sweeps; ++sweep) {
    const auto start = Clock::now();
    if (n == 1) {
      step(sweep, 0, Direction::right);
    } else {
      for (Index j = 0; j + 1 < n; ++j) step(sweep, j, Direction::right);
      for (Index j = n - 1; j >= 1; --j) step(sweep, j, Direction::left);
    }
    result.trace.als_seconds += std::chrono::duration<double>(Clock::now() - start).count();
    result.trace.sweeps_run = sweep;

    if (sweep % every == 0 || sweep == cfg.sweeps) {
      const double f = static_cast<double>(fit(tt, x));
      result.trace.records.push_back({sweep, result.trace.als_seconds, f});
      if (cfg.on_record) cfg.on_record(result.trace.records.back());
      if (cfg.convergence_delta && last_fit && f - *last_fit < *cfg.convergence_delta) break;
      last_fit = f;
    }
  }
  result.tt = std::move(tt);
  return result;
}

template <typename Scalar, typename Target>
AlsResult<Scalar> tt_als_impl(const Target& x, TensorTrain<Scalar> tt, const AlsConfig<Scalar>& cfg) {
  tt.orthogonalize(0);
  return sweep_driver(
      x, std::move(tt), cfg, [&](const TensorTrain<Scalar>& t, Index j) { return exact_core_update(t, x, j); },
      [](const TensorTrain<Scalar>&, Index, Index) {});
}

template <typename Scalar, typename Target>
AlsResult<Scalar> rtt_als_impl(const Target& x, TensorTrain<Scalar> tt, const AlsConfig<Scalar>& cfg) {
  if (cfg.sketch == SketchMode::leverage && cfg.samples < 1) throw ConfigError("rtt-als needs a positive sample count");
  tt.orthogonalize(0);
  ChainSampler<Scalar> cs(tt);
  Rng rng(cfg.seed);
  if (cfg.sketch == SketchMode::leverage) {
    const auto ranks = tt.ranks();
    for (std::size_t k = 1; k < ranks.size(); ++k)
      if (ranks[k - 1] * ranks[k] > cfg.samples)
        spdlog::warn("J = {} is below the {} unknowns per slice of core {}; sketched solves fall back to minimum norm",
                     cfg.samples, ranks[k - 1] * ranks[k], k - 1);
  }
  return sweep_driver(
      x, std::move(tt), cfg,
      [&](const TensorTrain<Scalar>& t, Index j) {
        if (cfg.sketch == SketchMode::exhaustive) return solve_sketched(exhaustive_problem(t, x, j), t.core(j).dim());
        return solve_sketched(sketch_problem(t, x, j, cs, cfg.samples, rng), t.core(j).dim());
      },
      [&](const TensorTrain<Scalar>& t, Index from, Index to) {
        cs.refresh_core(t, from);
        cs.refresh_core(t, to);
      });
}

}  // namespace detail

/// Deterministic TT-ALS from `tt0`.
template <typename Scalar>
AlsResult<Scalar> tt_als(const DenseTensor<Scalar>& x, TensorTrain<Scalar> tt0, const AlsConfig<Scalar>& cfg) {
  return detail::tt_als_impl(x, std::move(tt0), cfg);
}

template <typename Scalar>
AlsResult<Scalar> tt_als(const SparseTensor<Scalar>& x, TensorTrain<Scalar> tt0, const AlsConfig<Scalar>& cfg) {
  return detail::tt_als_impl(x, std::move(tt0), cfg);
}

/// Randomized TT-ALS: every core update solves a leverage-score sketch of its
/// least-squares problem drawn from the canonical chain.
template <typename Scalar>
AlsResult<Scalar> rtt_als(const DenseTensor<Scalar>& x, TensorTrain<Scalar> tt0, const AlsConfig<Scalar>& cfg) {
  return detail::rtt_als_impl(x, std::move(tt0), cfg);
}

template <typename Scalar>
AlsResult<Scalar> rtt_als(const SparseTensor<Scalar>& x, TensorTrain<Scalar> tt0, const AlsConfig<Scalar>& cfg) {
  const IndexedSparseTensor<Scalar> indexed(x);
  return detail::rtt_als_impl(indexed, std::move(tt0), cfg);
}

}  // namespace ttals
