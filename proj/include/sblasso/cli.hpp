#pragma once

// The sblasso command line: fit, trajectory, simulate, prox and rerun.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sblasso {

struct RunConfig {
  std::string subcommand;
  std::vector<std::string> argv;  // as given, echoed into manifests

  std::string data_path;
  std::string response = "y";
  std::vector<std::string> unpenalized;
  std::string family = "normal";
  std::string prior = "half-cauchy:1";
  bool allow_unbounded_prior = false;
  bool allow_nonconvex_prox = false;
  std::optional<double> tau;
  std::optional<double> tau_max, tau_min;
  int tau_points = 100;
  std::string mode = "sbl";
  int mc_samples = 40;
  std::optional<std::uint64_t> seed;
  int max_iter = 5000;
  double tol = 1e-8;
  std::string ablation = "full";
  double level = 0.95;
  std::string out;
  std::string trace;
  int threads = 0;  // 0: logical cores
  bool cold_start = false;

  // simulate
  int reps = 50;
  int n = 250;
  int p = 50;
  std::vector<double> active{-2.5, -2.0, -1.5, 1.5, 2.0, 2.5};
  double noise_sd = 1.0;
  std::string data_out;
  bool timing = false;

  // prox
  double x0 = 0.0, lambda0 = 0.0, s_x = 1.0, s_lambda = 1.0;
  bool oracle = false;
};

// Parses and validates everything that can be checked without running.
// Throws DomainError on bad input. Returns nullopt when help was printed.
std::optional<RunConfig> parse_args(const std::vector<std::string>& args);

// Executes a parsed configuration; returns the process exit code.
int run(const RunConfig& config);

// parse_args + run with errors reported as JSON on stderr.
int cli_main(const std::vector<std::string>& args);

}  // namespace sblasso
