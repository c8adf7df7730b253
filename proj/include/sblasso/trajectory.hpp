#pragma once

// Warm-started tau paths (MAP, SBL, or a fixed-weight lasso baseline) and the
// replicate simulation harness.

#include "sblasso/glm.hpp"
#include "sblasso/hyperprior.hpp"
#include "sblasso/vb.hpp"
#include "sblasso/vista.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace sblasso {

enum class FitMode { map, sbl, lasso_baseline };
FitMode parse_fit_mode(std::string_view s);
std::string_view fit_mode_name(FitMode m);

// Log-spaced, traversed from tau_max down to tau_min.
struct TauGrid {
  double tau_max = 1.0;
  double tau_min = 0.01;
  int n_points = 100;

  std::vector<double> values() const;
};

struct TrajectoryRecord {
  double tau = 0.0;
  FitMode mode = FitMode::map;
  Vec estimate;  // beta for map and lasso, eta for sbl
  Vec nu;        // sbl only, else empty
  Vec lambda;
  Vec ci_lo, ci_hi;  // sbl only, else empty
  double aux = 0.0;
  double aux_nu = 0.0;
  double sparsity_fraction = 0.0;
  int iterations = 0;
  double cost = 0.0;
  bool converged = false;
};

// Fraction of penalized coefficients that are exactly zero.
double sparsity_fraction(const GlmProblem& problem, const Vec& estimate);

struct TrajectoryOptions {
  FitMode mode = FitMode::map;
  VistaConfig cfg;  // tau is overwritten per grid point
  int mc_samples = 40;
  std::uint64_t seed = 1;
  bool warm_start = true;
  double credible_level = 0.95;
};

std::vector<TrajectoryRecord> run_trajectory(const GlmProblem& problem, const HyperPrior& prior,
                                             const TauGrid& grid, const TrajectoryOptions& opt);

// Auxiliary parameter (log sigma^2 etc.) of the beta = 0 fit; 0 when the
// family has none. Trajectories start from here rather than from aux = 0.
double null_model_aux(const GlmProblem& problem);

// Smallest tau at which beta = 0 solves 1/2 ||y - X beta||^2 + tau ||beta||_1.
double lasso_critical_tau(const GlmProblem& problem);

// Auxiliary parameter (log sigma^2 etc.) of the beta = 0 fit; 0 when the
// family has none. Trajectories start from here rather than from aux = 0.
double null_model_aux(const GlmProblem& problem);

// Smallest tau at which beta = 0 (with lambda = 1 and the auxiliary parameter
// at its beta = 0 optimum) is stationary for the MAP objective. This is the
// lasso value rescaled by the fitted noise level.
double map_critical_tau(const GlmProblem& problem);

// FISTA on 1/2 ||y - X beta||^2 + tau sum_p |beta_p| over penalized columns,
// warm-started along the grid. Normal family only.
std::vector<TrajectoryRecord> lasso_baseline(const GlmProblem& problem, const std::vector<double>& taus,
                                             int max_iter = 20000, double tol = 1e-10);

struct SimOptions {
  LikelihoodSpec likelihood{};
  FitMode mode = FitMode::sbl;
  int n_reps = 50;
  double tau = 1.0;
  std::uint64_t seed = 1;
  int n = 250;
  int p = 50;
  std::vector<double> active_values{-2.5, -2.0, -1.5, 1.5, 2.0, 2.5};
  double noise_sd = 1.0;
  int mc_samples = 40;
  int threads = 1;
  double credible_level = 0.95;
  VistaConfig cfg;  // tau is overwritten
  HyperPrior prior = HyperPrior::half_cauchy();
};

struct SimMetrics {
  double fnr = 0.0;
  double fpr = 0.0;
  // Coverage over truly nonzero coefficients, and over all coefficients.
  std::optional<double> beta_coverage;
  std::optional<double> beta_coverage_all;
  std::optional<double> sigma2_coverage;
  int n_reps = 0;
  int n_failed = 0;
  int n_converged = 0;
  double mean_iterations = 0.0;
  double wall_seconds = 0.0;
};

// Seeds for replicate r: the r-th output of splitmix64 started at seed.
std::uint64_t replicate_seed(std::uint64_t seed, int r);

SimMetrics simulate_table(const SimOptions& opt);

}  // namespace sblasso
