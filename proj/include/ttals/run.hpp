#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shape.hpp"

namespace ttals {

enum class Method { tt_svd, rtt_svd, tt_als, rtt_als };
enum class InputFormat { frostt, dtb };
enum class InitMethod { random, tt_svd, rtt_svd };

Method parse_method(const std::string& s);
InputFormat parse_format(const std::string& s);
InitMethod parse_init(const std::string& s);
std::string to_string(Method m);
std::string to_string(InitMethod m);
/// Format from an explicit name, or from the file extension (.tns -> frostt, .dtb -> dtb).
InputFormat resolve_format(const std::optional<std::string>& name, const std::filesystem::path& path);

struct RunConfig {
  std::filesystem::path input;
  std::optional<std::string> format;
  Method method = Method::rtt_als;
  Index rank = 0;            // uniform R_1 = ... = R_{N-1}
  std::vector<Index> ranks;  // overrides `rank` when non-empty
  Index sweeps = 10;
  Index samples = 0;
  std::uint64_t seed = 0;
  std::optional<InitMethod> init;
  Index oversampling = 10;
  Index power_iterations = 1;
  std::optional<std::filesystem::path> trace;
  std::optional<std::filesystem::path> output;
};

struct RunSummary {
  std::string method;
  std::string init;
  std::vector<Index> ranks;  // R_0..R_N of the result
  Index samples = 0;
  std::uint64_t seed = 0;
  std::string input_digest;
  Index sweeps_run = 0;
  double final_fit = 0;
  double init_seconds = 0;
  double als_seconds = 0;
  double total_seconds = 0;
  double mean_sweep_seconds = 0;

  /// JSON object; the timing fields are the only nondeterministic members.
  std::string to_json() const;
};

/// Loads the input, runs init and the configured method, writes the trace CSV
/// and .ttb output if requested. Parsing time is excluded from all timings.
RunSummary run(const RunConfig& cfg);

struct SelftestReport {
  Index draws = 0;
  Index rows = 0;
  double total_variation = 0;
  double chi_square = 0;
  Index degrees_of_freedom = 0;
  double threshold = 0;
  bool passed = false;
  std::string message;
  /// Empirical frequency and exact probability per chain row.
  std::vector<double> empirical;
  std::vector<double> exact;

  std::string to_json() const;
};

/// Draws from a random left-orthonormal chain with mode sizes `dims` and
/// right ranks `ranks` (one per core), and compares the histogram against the
/// brute-force squared-row-norm distribution.
SelftestReport sampler_selftest(const std::vector<Index>& dims, const std::vector<Index>& ranks, Index draws,
                                std::uint64_t seed, double tv_threshold = 0.01);

/// Fit of a stored TT against a tensor file.
double fit_files(const std::filesystem::path& input, const std::optional<std::string>& format,
                 const std::filesystem::path& tt_path);

}  // namespace ttals
