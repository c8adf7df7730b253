#pragma once

// Sparse Bayesian Lasso: variational inference with a Laplace family on the
// penalized coefficients, fitted by VISTA on a fixed Monte Carlo draw.
//
// Penalized beta_p ~ Laplace(eta_p, nu_p). Unpenalized coefficients get a
// Normal(eta, nu^2) family against a N(0, 10^2) prior, and the auxiliary
// parameter gets a Normal family on its log scale (so LogNormal for sigma^2)
// against the same prior.

#include "sblasso/glm.hpp"
#include "sblasso/hyperprior.hpp"
#include "sblasso/map_fit.hpp"
#include "sblasso/vista.hpp"

#include <cstdint>

namespace sblasso {

enum class VarFamily { normal, log_normal, logit_normal };
std::string_view var_family_name(VarFamily f);

inline constexpr double kNuFloor = 1e-10;
inline constexpr double kSmoothPriorSd = 10.0;

double g_kl(double eta, double nu, double lambda, double tau);
double g_ns(double eta, double nu, double lambda, double tau);

// KL(Q || P) for two distributions of the same family, computed on the
// underlying Gaussians N(eta_q, nu_q^2) and N(eta_p, nu_p^2).
double kl_smooth(VarFamily q_family, double eta_q, double nu_q, VarFamily p_family, double eta_p,
                 double nu_p);

struct VariationalState {
  Vec eta_beta;  // P
  Vec nu_beta;   // P
  Vec lambda;    // P, 0 on unpenalized columns
  std::vector<bool> laplace;  // per coefficient: Laplace (penalized) or Normal
  bool has_aux = false;
  VarFamily aux_family = VarFamily::log_normal;
  double eta_aux = 0.0;
  double nu_aux = 0.1;
  double tau = 1.0;
};

// Cold start: eta = 0, lambda = 1, Laplace scales min(1, 1/tau) floored at
// 1e-3, Normal scales 0.1.
VariationalState initial_variational_state(const GlmProblem& problem, double tau);

// Standard normal draws, B rows by D columns, fixed for a whole fit.
struct SaaDraw {
  Mat eps;
  std::uint64_t seed = 0;
  bool antithetic = true;
  Eigen::Index rows() const { return eps.rows(); }
  Eigen::Index dim() const { return eps.cols(); }
};

// With antithetic set, row 2k+1 is the negation of row 2k; B must be even.
SaaDraw make_draw(Eigen::Index B, Eigen::Index D, std::uint64_t seed, bool antithetic = true);

// Inverse-CDF map from a standard normal draw to a standard Laplace one.
double laplace_from_normal(double eps);

struct ElboResult {
  double cost = 0.0;     // full objective, including tau lambda |eta|
  double mc_term = 0.0;  // Monte Carlo average of the negative log-likelihood
  double mc_se = 0.0;    // its standard error, from pair means when antithetic
  Vec row_nll;           // per draw row
  // Gradient of everything except tau sum lambda |eta|.
  Vec grad_eta;
  Vec grad_nu;
  Vec grad_lambda;
  double grad_eta_aux = 0.0;
  double grad_nu_aux = 0.0;
};

ElboResult saa_elbo(const GlmProblem& problem, const VariationalState& vs, const SaaDraw& draw,
                    const HyperPrior& prior, bool want_grad = true);

// Expected Gaussian negative log-likelihood under Laplace Q_beta and LogNormal
// Q_sigma2 with nu_aux the standard deviation of log sigma^2.
double closed_form_gaussian_elbo(const GlmProblem& problem, const VariationalState& vs);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return lo <= v && v <= hi; }
};

// Equal-tailed interval at the given level for coefficient j.
Interval credible_interval(const VariationalState& vs, Eigen::Index j, double level = 0.95);
// Interval for the auxiliary parameter on its log scale.
Interval aux_interval(const VariationalState& vs, double level = 0.95);

struct SblFit {
  VariationalState state;
  SaaDraw draw;
  VistaResult run;
};

struct SblOptions {
  int mc_samples = 40;
  std::uint64_t seed = 1;
  bool antithetic = true;
};

// VISTA layout [eta_pen | lambda | log nu_pen, eta_unpen, log nu_unpen, eta_aux, log nu_aux].
SmoothObjective sbl_objective(const GlmProblem& problem, const SaaDraw& draw, double tau);
Vec pack_variational(const GlmProblem& problem, const VariationalState& vs);
VariationalState unpack_variational(const GlmProblem& problem, const Vec& x, double tau);
VistaLayout sbl_layout(const GlmProblem& problem);

SblFit fit_sbl(const GlmProblem& problem, const HyperPrior& prior, const VistaConfig& cfg,
               const SblOptions& opt, const VistaState* warm = nullptr, bool record_trace = false);

// Same, reusing an existing draw (trajectories share one draw across tau).
SblFit fit_sbl(const GlmProblem& problem, const HyperPrior& prior, const VistaConfig& cfg,
               const SaaDraw& draw, const VistaState* warm = nullptr, bool record_trace = false);

}  // namespace sblasso
