#include "ttals/run.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <variant>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ttals/als.hpp"
#include "ttals/chain_sampler.hpp"
#include "ttals/fit.hpp"
#include "ttals/io.hpp"
#include "ttals/ttsvd.hpp"

namespace ttals {

Method parse_method(const std::string& s) {
  if (s == "tt-svd") return Method::tt_svd;
  if (s == "rtt-svd") return Method::rtt_svd;
  if (s == "tt-als") return Method::tt_als;
  if (s == "rtt-als") return Method::rtt_als;
  throw ConfigError(fmt::format("unknown method '{}' (expected tt-svd, rtt-svd, tt-als or rtt-als)", s));
}

InputFormat parse_format(const std::string& s) {
  if (s == "frostt" || s == "tns") return InputFormat::frostt;
  if (s == "dtb") return InputFormat::dtb;
  throw ConfigError(fmt::format("unknown format '{}' (expected frostt or dtb)", s));
}

InitMethod parse_init(const std::string& s) {
  if (s == "random") return InitMethod::random;
  if (s == "tt-svd") return InitMethod::tt_svd;
  if (s == "rtt-svd") return InitMethod::rtt_svd;
  throw ConfigError(fmt::format("unknown init '{}' (expected random, tt-svd or rtt-svd)", s));
}

std::string to_string(Method m) {
  switch (m) {
    case Method::tt_svd: return "tt-svd";
    case Method::rtt_svd: return "rtt-svd";
    case Method::tt_als: return "tt-als";
    case Method::rtt_als: return "rtt-als";
  }
  return "?";
}

std::string to_string(InitMethod m) {
  switch (m) {
    case InitMethod::random: return "random";
    case InitMethod::tt_svd: return "tt-svd";
    case InitMethod::rtt_svd: return "rtt-svd";
  }
  return "?";
}

InputFormat resolve_format(const std::optional<std::string>& name, const std::filesystem::path& path) {
  if (name) return parse_format(*name);
  const auto ext = path.extension().string();
  if (ext == ".tns") return InputFormat::frostt;
  if (ext == ".dtb") return InputFormat::dtb;
  throw ConfigError(fmt::format("cannot infer the format of '{}'; pass --format", path.string()));
}

std::string RunSummary::to_json() const {
  nlohmann::ordered_json j;
  j["method"] = method;
  j["init"] = init;
  j["ranks"] = ranks;
  j["samples"] = samples;
  j["seed"] = seed;
  j["input_digest"] = input_digest;
  j["sweeps_run"] = sweeps_run;
  j["final_fit"] = final_fit;
  j["init_seconds"] = init_seconds;
  j["als_seconds"] = als_seconds;
  j["total_seconds"] = total_seconds;
  j["mean_sweep_seconds"] = mean_sweep_seconds;
  return j.dump(2);
}

std::string SelftestReport::to_json() const {
  nlohmann::ordered_json j;
  j["draws"] = draws;
  j["rows"] = rows;
  j["total_variation"] = total_variation;
  j["chi_square"] = chi_square;
  j["degrees_of_freedom"] = degrees_of_freedom;
  j["threshold"] = threshold;
  j["passed"] = passed;
  j["message"] = message;
  return j.dump(2);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::vector<Index> interior_ranks(const RunConfig& cfg, const Shape& shape) {
  if (!cfg.ranks.empty()) {
    if (static_cast<Index>(cfg.ranks.size()) != shape.order() - 1)
      throw ConfigError(fmt::format("--ranks needs {} values for an order-{} tensor, got {}", shape.order() - 1,
                                    shape.order(), cfg.ranks.size()));
    for (Index r : cfg.ranks)
      if (r < 1) throw ConfigError("ranks must be positive");
    return cfg.ranks;
  }
  if (cfg.rank < 1) throw ConfigError("a positive --rank or a --ranks list is required");
  return uniform_ranks(shape, cfg.rank);
}

void validate(const RunConfig& cfg, InputFormat format, InitMethod init) {
  const bool svd_method = cfg.method == Method::tt_svd || cfg.method == Method::rtt_svd;
  if (svd_method && format != InputFormat::dtb) throw ConfigError("SVD methods require a dense (dtb) input");
  if (!svd_method && init != InitMethod::random && format != InputFormat::dtb)
    throw ConfigError("SVD initialization requires a dense (dtb) input; use --init random for sparse data");
  if (cfg.method == Method::rtt_als && cfg.samples < 1) throw ConfigError("rtt-als requires --samples J >= 1");
  if (!svd_method && cfg.sweeps < 1) throw ConfigError("--sweeps must be at least 1");
}

template <typename Target>
RunSummary run_on(const Target& x, const RunConfig& cfg, InitMethod init, RunSummary summary) {
  const Shape shape = x.shape();
  const auto ranks = interior_ranks(cfg, shape);
  const SvdConfig svd_cfg{cfg.oversampling, cfg.power_iterations, cfg.seed};

  std::optional<std::ofstream> trace;
  if (cfg.trace) {
    trace.emplace(*cfg.trace);
    if (!*trace) throw DataError(fmt::format("cannot open trace file {}", cfg.trace->string()));
    write_trace_header(*trace);
  }

  TensorTrain<double> result;
  const auto start = Clock::now();
  if (cfg.method == Method::tt_svd || cfg.method == Method::rtt_svd) {
    if constexpr (std::is_same_v<Target, DenseTensor<double>>) {
      result = cfg.method == Method::tt_svd ? tt_svd(x, ranks) : rtt_svd(x, ranks, svd_cfg);
    }
    summary.init_seconds = seconds_since(start);
    summary.final_fit = fit(result, x);
    summary.sweeps_run = 0;
    if (trace) write_trace_record(*trace, {0, summary.init_seconds, summary.final_fit});
  } else {
    TensorTrain<double> tt0;
    if (init == InitMethod::random) {
      tt0 = tt_random<double>(shape, ranks, cfg.seed);
    } else if constexpr (std::is_same_v<Target, DenseTensor<double>>) {
      tt0 = init == InitMethod::tt_svd ? tt_svd(x, ranks) : rtt_svd(x, ranks, svd_cfg);
    }
    summary.init_seconds = seconds_since(start);

    AlsConfig<double> als;
    als.sweeps = cfg.sweeps;
    als.samples = cfg.samples;
    als.seed = cfg.seed;
    if (trace) als.on_record = [&](const SweepRecord& r) { write_trace_record(*trace, r); };
    auto out = cfg.method == Method::tt_als ? tt_als(x, std::move(tt0), als) : rtt_als(x, std::move(tt0), als);
    result = std::move(out.tt);
    summary.als_seconds = out.trace.als_seconds;
    summary.mean_sweep_seconds = out.trace.mean_sweep_seconds();
    summary.sweeps_run = out.trace.sweeps_run;
    summary.final_fit = out.trace.final_fit();
  }
  summary.total_seconds = summary.init_seconds + summary.als_seconds;
  summary.ranks = result.ranks();
  if (cfg.output) io::write_ttb(*cfg.output, result);
  return summary;
}

}  // namespace

RunSummary run(const RunConfig& cfg) {
  const InputFormat format = resolve_format(cfg.format, cfg.input);
  const InitMethod init = cfg.init.value_or(
      format == InputFormat::frostt ? InitMethod::random
                                    : (cfg.method == Method::tt_als ? InitMethod::tt_svd : InitMethod::rtt_svd));
  validate(cfg, format, init);

  RunSummary summary;
  summary.method = to_string(cfg.method);
  summary.init = (cfg.method == Method::tt_als || cfg.method == Method::rtt_als) ? to_string(init) : "none";
  summary.samples = cfg.method == Method::rtt_als ? cfg.samples : 0;
  summary.seed = cfg.seed;
  summary.input_digest = io::file_digest(cfg.input);

  if (format == InputFormat::dtb) return run_on(io::read_dtb(cfg.input), cfg, init, summary);
  return run_on(io::read_frostt(cfg.input), cfg, init, summary);
}

SelftestReport sampler_selftest(const std::vector<Index>& dims, const std::vector<Index>& ranks, Index draws,
                                std::uint64_t seed, double tv_threshold) {
  SelftestReport rep;
  rep.draws = draws;
  rep.threshold = tv_threshold;
  if (dims.empty() || dims.size() != ranks.size())
    throw ConfigError("sampler self-test needs one rank per chain core (--dims and --ranks of equal length)");
  const Shape chain_shape(dims);
  if (chain_shape.size() > 1'000'000) throw DomainError("sampler self-test chain exceeds 10^6 rows");
  if (draws <= 0) {
    rep.message = "no draws";
    return rep;
  }

  // The chain is closed by a terminal core of mode size R_N so the full train is
  // valid; sampling targets the first N cores with the terminal core as center.
  std::vector<Index> full_dims = dims;
  full_dims.push_back(ranks.back());
  const Shape shape(full_dims);
  auto tt = tt_random<double>(shape, ranks, seed);
  const Index j = shape.order() - 1;
  tt.orthogonalize(j);

  const Matrix<double> chain = left_chain(tt, j);
  const double rank = static_cast<double>(chain.cols());
  rep.rows = chain.rows();
  rep.exact.resize(static_cast<std::size_t>(chain.rows()));
  for (Index r = 0; r < chain.rows(); ++r) rep.exact[static_cast<std::size_t>(r)] = chain.row(r).squaredNorm() / rank;

  const ChainSampler<double> cs(tt);
  Rng rng(seed);
  rng = rng.split(7);
  const auto sample = cs.sample_left(j, draws, rng);
  rep.empirical.assign(rep.exact.size(), 0.0);
  for (const auto& d : sample) rep.empirical[d.linear] += 1.0;
  for (auto& e : rep.empirical) e /= static_cast<double>(draws);

  double tv = 0, chi = 0;
  Index cells = 0;
  for (std::size_t r = 0; r < rep.exact.size(); ++r) {
    tv += std::abs(rep.empirical[r] - rep.exact[r]);
    if (rep.exact[r] > 0) {
      const double expected = rep.exact[r] * static_cast<double>(draws);
      const double observed = rep.empirical[r] * static_cast<double>(draws);
      chi += (observed - expected) * (observed - expected) / expected;
      ++cells;
    }
  }
  rep.total_variation = 0.5 * tv;
  rep.chi_square = chi;
  rep.degrees_of_freedom = std::max<Index>(0, cells - 1);
  rep.passed = rep.total_variation <= tv_threshold;
  rep.message = rep.passed ? "ok" : fmt::format("total variation {:.4g} exceeds {:.4g}", rep.total_variation, tv_threshold);
  return rep;
}

double fit_files(const std::filesystem::path& input, const std::optional<std::string>& format,
                 const std::filesystem::path& tt_path) {
  const auto tt = io::read_ttb(tt_path);
  if (resolve_format(format, input) == InputFormat::dtb) {
    const auto x = io::read_dtb(input);
    if (!(x.shape() == tt.shape())) throw DataError("train shape does not match the tensor");
    return fit(tt, x);
  }
  const auto x = io::read_frostt(input);
  if (!(x.shape() == tt.shape())) throw DataError("train shape does not match the tensor");
  return fit(tt, x);
}

}  // namespace ttals
