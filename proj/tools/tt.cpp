#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ttals/io.hpp"
#include "ttals/run.hpp"
#include "ttals/synth.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kDataError = 3, kSelftestFailed = 4 };

}  // namespace

int main(int argc, char** argv) {
  using namespace ttals;
  spdlog::set_pattern("[%l] %v");
  spdlog::set_default_logger(spdlog::stderr_color_mt("tt"));

  CLI::App app{"Tensor-train decomposition: TT-SVD, randomized TT-SVD, TT-ALS and leverage-sampled rTT-ALS"};
  app.require_subcommand(1);

  // decompose
  RunConfig run_cfg;
  std::string method = "rtt-als", init, format, input, trace, output;
  auto* decompose = app.add_subcommand("decompose", "Decompose a dense (.dtb) or sparse (FROSTT .tns) tensor");
  decompose->add_option("--input", input, "Input tensor")->required();
  decompose->add_option("--format", format, "frostt | dtb (default: from extension)");
  decompose->add_option("--method", method, "tt-svd | rtt-svd | tt-als | rtt-als")->capture_default_str();
  decompose->add_option("--rank", run_cfg.rank, "Uniform TT rank R_1 = ... = R_{N-1}");
  decompose->add_option("--ranks", run_cfg.ranks, "Explicit rank list R_1..R_{N-1}")->delimiter(',');
  decompose->add_option("--sweeps", run_cfg.sweeps, "ALS sweeps")->capture_default_str();
  decompose->add_option("--samples", run_cfg.samples, "Sample count J for rtt-als");
  decompose->add_option("--seed", run_cfg.seed, "Random seed")->capture_default_str();
  decompose->add_option("--init", init, "random | tt-svd | rtt-svd");
  decompose->add_option("--oversampling", run_cfg.oversampling, "rTT-SVD oversampling")->capture_default_str();
  decompose->add_option("--power-iterations", run_cfg.power_iterations, "rTT-SVD power iterations")->capture_default_str();
  decompose->add_option("--trace", trace, "Write the fit/time trace CSV here");
  decompose->add_option("--output", output, "Write the resulting train (.ttb) here");

  // synth
  std::vector<Index> synth_dims, synth_ranks;
  Index synth_rank = 0, synth_nnz = 0;
  double synth_noise = 0;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic tensor from a random TT plus Gaussian noise");
  synth->add_option("--dims", synth_dims, "Mode sizes")->required()->delimiter(',');
  synth->add_option("--rank", synth_rank, "Uniform true TT rank");
  synth->add_option("--ranks", synth_ranks, "True rank list")->delimiter(',');
  synth->add_option("--noise", synth_noise, "Noise standard deviation")->capture_default_str();
  synth->add_option("--nnz", synth_nnz, "Write a sparse FROSTT tensor with this many nonzeros");
  synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();
  synth->add_option("--output", synth_out, "Output path (.dtb or .tns)")->required();

  // sampler-selftest
  std::vector<Index> st_dims{4, 3, 5}, st_ranks{2, 3, 2};
  Index st_draws = 200000;
  std::uint64_t st_seed = 0;
  double st_threshold = 0.01;
  auto* selftest = app.add_subcommand("sampler-selftest", "Check chain samples against the exact row-norm distribution");
  selftest->add_option("--dims", st_dims, "Chain mode sizes")->delimiter(',')->capture_default_str();
  selftest->add_option("--ranks", st_ranks, "Chain right ranks, one per core")->delimiter(',')->capture_default_str();
  selftest->add_option("--draws", st_draws, "Number of draws")->capture_default_str();
  selftest->add_option("--seed", st_seed, "Random seed")->capture_default_str();
  selftest->add_option("--threshold", st_threshold, "Maximum total-variation distance")->capture_default_str();

  // fit
  std::string fit_input, fit_format, fit_tt;
  auto* fitcmd = app.add_subcommand("fit", "Fit of a stored train against a tensor");
  fitcmd->add_option("--input", fit_input, "Tensor file")->required();
  fitcmd->add_option("--format", fit_format, "frostt | dtb (default: from extension)");
  fitcmd->add_option("--tt", fit_tt, "Train file (.ttb)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*decompose) {
      run_cfg.input = input;
      run_cfg.method = parse_method(method);
      if (!format.empty()) run_cfg.format = format;
      if (!init.empty()) run_cfg.init = parse_init(init);
      if (!trace.empty()) run_cfg.trace = trace;
      if (!output.empty()) run_cfg.output = output;
      std::cout << run(run_cfg).to_json() << std::endl;
    } else if (*synth) {
      const Shape shape(synth_dims);
      std::vector<Index> ranks = synth_ranks;
      if (ranks.empty()) {
        if (synth_rank < 1) throw ConfigError("synth needs --rank or --ranks");
        ranks = uniform_ranks(shape, synth_rank);
      }
      if (synth_nnz > 0) {
        io::write_frostt(synth_out, synth_sparse(shape, ranks, synth_nnz, synth_noise, synth_seed));
      } else {
        io::write_dtb(synth_out, synth_dense(shape, ranks, synth_noise, synth_seed));
      }
    } else if (*selftest) {
      const auto rep = sampler_selftest(st_dims, st_ranks, st_draws, st_seed, st_threshold);
      std::cout << rep.to_json() << std::endl;
      if (!rep.passed) return kSelftestFailed;
    } else if (*fitcmd) {
      const double f = fit_files(fit_input, fit_format.empty() ? std::nullopt : std::optional(fit_format), fit_tt);
      std::cout << fmt::format("{:.17g}", f) << std::endl;
    }
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kDataError;
  }
  return kOk;
}
