#pragma once

// Proximal gradient descent for objectives of the form
//
//   F(beta, lambda, theta) = L(beta, lambda, theta)
//                            + sum_p [ -log lambda_p + rho(lambda_p) ]
//                            + tau sum_p lambda_p |beta_p|
//
// where L is smooth and supplied by the caller. The last term is handled by
// the joint (beta, lambda) prox; the middle term comes from the hyperprior and
// is added here. Step sizes are controlled by a trust region on the
// penalty-inclusive quadratic model, with Nesterov momentum and an Adam-style
// diagonal preconditioner.

#include "sblasso/common.hpp"
#include "sblasso/hyperprior.hpp"

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace sblasso {

enum class Ablation { full, no_precond, no_nesterov, plain_gradient };

Ablation parse_ablation(std::string_view s);
std::string_view ablation_name(Ablation a);

struct VistaConfig {
  double tau = 1.0;
  int max_iter = 5000;
  double tol = 1e-8;
  double init_step = 1.0;
  double tr_shrink = 0.25;
  double tr_expand = 2.0;
  double tr_low = 0.25;
  double tr_high = 0.75;
  int nesterov_reset_after = 3;
  double ema_decay = 0.999;
  double ema_eps = 1e-8;
  // Lower bound on the preconditioner entry of each lambda coordinate.
  double lambda_precond_floor = 1e-2;
  Ablation ablation = Ablation::full;
  // Upper bound on tau^2 s_beta s_lambda per coordinate, keeping the prox in
  // its continuous regime. Ignored when allow_nonconvex_prox is set.
  double max_step_product = 0.99;
  bool allow_nonconvex_prox = false;
  bool allow_unbounded_prior = false;
};

// Variable layout: x = [beta (n_pen) | lambda (n_pen) | theta (n_theta)].
struct VistaLayout {
  Eigen::Index n_pen = 0;
  Eigen::Index n_theta = 0;
  Eigen::Index size() const { return 2 * n_pen + n_theta; }
};

// Smooth part L. cost_and_grad writes the gradient into grad (already sized).
// Return +inf (or NaN) outside the domain; such points are never accepted.
struct SmoothObjective {
  std::function<double(const Vec& x)> cost;
  std::function<double(const Vec& x, Vec& grad)> cost_and_grad;
};

struct VistaState {
  VistaLayout layout;
  Vec x;
  Vec x_prev;  // previous accepted iterate, for momentum
  double nesterov_t = 1.0;
  double step = 1.0;
  double step_before_shrinks = 1.0;
  Vec ema_sq_grad;
  long ema_count = 0;
  int consecutive_shrinks = 0;
  int iter = 0;
  double cost = 0.0;  // full objective F at x

  // Cached evaluation at the extrapolation point.
  bool cache_valid = false;
  Vec y;
  double smooth_at_y = 0.0;
  Vec grad_at_y;

  auto beta() const { return x.head(layout.n_pen); }
  auto lambda() const { return x.segment(layout.n_pen, layout.n_pen); }
  auto theta() const { return x.tail(layout.n_theta); }
};

struct StepReport {
  bool accepted = false;
  bool stationary = false;  // gradient mapping at the current iterate is ~0
  double ratio = 0.0;       // actual / predicted reduction
  double cost_change = 0.0;
  double step_norm = 0.0;   // max-norm of the accepted move
  double step = 0.0;        // step size after the trust-region update
};

// Cold or warm start. Evaluates F at x and validates the prior.
VistaState make_vista_state(VistaLayout layout, Vec x0, const SmoothObjective& f,
                            const HyperPrior& prior, const VistaConfig& cfg);

// Continue from a previous solve under a new configuration (typically a new
// tau): keeps the iterate, step size and preconditioner, drops momentum.
VistaState warm_start(VistaState prev, const SmoothObjective& f, const HyperPrior& prior,
                      const VistaConfig& cfg);

// Full objective at x.
double vista_objective(const Vec& x, const VistaLayout& layout, const SmoothObjective& f,
                       const HyperPrior& prior, double tau);

StepReport vista_step(VistaState& state, const SmoothObjective& f, const HyperPrior& prior,
                      const VistaConfig& cfg);

struct TraceRow {
  int iter = 0;
  double cost = 0.0;
  double step = 0.0;
  Eigen::Index nnz = 0;
  bool accepted = false;
};

struct VistaResult {
  VistaState state;
  bool converged = false;
  bool stalled = false;
  int iterations = 0;
  std::vector<TraceRow> trace;
};

VistaResult vista_run(const SmoothObjective& f, const HyperPrior& prior, const VistaConfig& cfg,
                      VistaState init, bool record_trace = false);

}  // namespace sblasso
