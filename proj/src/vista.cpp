#include "sblasso/vista.hpp"

#include "sblasso/simd/kernels.hpp"

#include <algorithm>
#include <limits>

namespace sblasso {

Ablation parse_ablation(std::string_view s) {
  if (s == "full") return Ablation::full;
  if (s == "no-precond") return Ablation::no_precond;
  if (s == "no-nesterov") return Ablation::no_nesterov;
  if (s == "plain-gradient") return Ablation::plain_gradient;
  throw DomainError("unknown ablation mode '" + std::string(s) + "'");
}

std::string_view ablation_name(Ablation a) {
  switch (a) {
    case Ablation::full:
      return "full";
    case Ablation::no_precond:
      return "no-precond";
    case Ablation::no_nesterov:
      return "no-nesterov";
    case Ablation::plain_gradient:
      return "plain-gradient";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::span<const double> view(const auto& v) { return {v.data(), std::size_t(v.size())}; }

bool uses_momentum(Ablation a) { return a == Ablation::full || a == Ablation::no_precond; }
bool uses_precond(Ablation a) { return a == Ablation::full || a == Ablation::no_nesterov; }

// Smooth part S = L + sum(-log lambda + rho(lambda)); +inf off the domain.
double smooth_value(const Vec& x, const VistaLayout& lay, const SmoothObjective& f,
                    const HyperPrior& prior, Vec* grad) {
  double extra = 0.0;
  for (Eigen::Index p = 0; p < lay.n_pen; ++p) {
    const double l = x[lay.n_pen + p];
    if (!(l > 0.0)) return kInf;
    extra += -std::log(l) + prior.rho(l);
  }
  double v;
  if (grad) {
    grad->setZero(x.size());
    v = f.cost_and_grad(x, *grad);
    for (Eigen::Index p = 0; p < lay.n_pen; ++p) {
      const double l = x[lay.n_pen + p];
      (*grad)[lay.n_pen + p] += -1.0 / l + prior.rho_prime(l);
    }
  } else {
    v = f.cost(x);
  }
  if (std::isnan(v)) return kInf;
  return v + extra;
}

double penalty(const Vec& x, const VistaLayout& lay, double tau) {
  if (lay.n_pen == 0) return 0.0;
  return tau * simd::weighted_l1(view(x.segment(lay.n_pen, lay.n_pen)), view(x.head(lay.n_pen)));
}

}  // namespace

double vista_objective(const Vec& x, const VistaLayout& lay, const SmoothObjective& f,
                       const HyperPrior& prior, double tau) {
  const double s = smooth_value(x, lay, f, prior, nullptr);
  if (!std::isfinite(s)) return kInf;
  return s + penalty(x, lay, tau);
}

VistaState make_vista_state(VistaLayout layout, Vec x0, const SmoothObjective& f,
                            const HyperPrior& prior, const VistaConfig& cfg) {
  require(x0.size() == layout.size(), "vista: initial point does not match layout");
  require(cfg.tau > 0.0 && std::isfinite(cfg.tau), "vista: tau must be positive");
  require(cfg.init_step > 0.0, "vista: init_step must be positive");
  require(cfg.ema_decay > 0.0 && cfg.ema_decay < 1.0, "vista: ema_decay must lie in (0,1)");
  require(cfg.lambda_precond_floor > 0.0, "vista: lambda_precond_floor must be positive");
  if (prior.unbounded_objective() && !cfg.allow_unbounded_prior) {
    throw UnboundedObjectiveError("prior '" + prior.to_string() +
                                  "' leaves the objective unbounded; pass an explicit override to use it");
  }
  VistaState st;
  st.layout = layout;
  st.x = std::move(x0);
  st.x_prev = st.x;
  st.step = cfg.init_step;
  st.step_before_shrinks = cfg.init_step;
  st.ema_sq_grad = Vec::Zero(layout.size());
  st.cost = vista_objective(st.x, layout, f, prior, cfg.tau);
  if (!std::isfinite(st.cost)) throw NumericError("vista: objective is not finite at the initial point", st.x);
  return st;
}

VistaState warm_start(VistaState prev, const SmoothObjective& f, const HyperPrior& prior,
                      const VistaConfig& cfg) {
  VistaState st = make_vista_state(prev.layout, std::move(prev.x), f, prior, cfg);
  st.step = prev.step;
  st.step_before_shrinks = prev.step;
  if (prev.ema_sq_grad.size() == st.ema_sq_grad.size()) {
    st.ema_sq_grad = std::move(prev.ema_sq_grad);
    st.ema_count = prev.ema_count;
  }
  return st;
}

StepReport vista_step(VistaState& st, const SmoothObjective& f, const HyperPrior& prior,
                      const VistaConfig& cfg) {
  const VistaLayout& lay = st.layout;
  const Eigen::Index n = lay.size();
  const Eigen::Index np = lay.n_pen;
  const bool momentum = uses_momentum(cfg.ablation);
  const bool precond = uses_precond(cfg.ablation);
  const bool adaptive = cfg.ablation != Ablation::plain_gradient;
  const double tau = cfg.tau;
  ++st.iter;

  if (!st.cache_valid) {
    st.y = st.x;
    bool extrapolated = false;
    if (momentum && st.nesterov_t > 1.0) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * st.nesterov_t * st.nesterov_t));
      const double m = (st.nesterov_t - 1.0) / t_next;
      st.y = st.x + m * (st.x - st.x_prev);
      extrapolated = true;
    }
    st.grad_at_y.resize(n);
    st.smooth_at_y = smooth_value(st.y, lay, f, prior, &st.grad_at_y);
    if (extrapolated && !(std::isfinite(st.smooth_at_y) && st.grad_at_y.allFinite())) {
      // Extrapolated off the domain: drop the momentum.
      st.x_prev = st.x;
      st.nesterov_t = 1.0;
      st.y = st.x;
      st.smooth_at_y = smooth_value(st.y, lay, f, prior, &st.grad_at_y);
    }
    if (!std::isfinite(st.smooth_at_y) || !st.grad_at_y.allFinite()) {
      throw NumericError("vista: non-finite cost or gradient at iteration " + std::to_string(st.iter), st.y);
    }
    if (precond) {
      st.ema_sq_grad = cfg.ema_decay * st.ema_sq_grad + (1.0 - cfg.ema_decay) * st.grad_at_y.cwiseAbs2();
      ++st.ema_count;
    }
    st.cache_valid = true;
  }

  // Per-coordinate effective steps.
  Vec s(n);
  if (precond) {
    const double correction = 1.0 - std::pow(cfg.ema_decay, double(st.ema_count));
    for (Eigen::Index i = 0; i < n; ++i) {
      s[i] = st.step / (std::sqrt(st.ema_sq_grad[i] / correction) + cfg.ema_eps);
    }
    // A lambda whose gradient has been ~0 (e.g. sitting at the prior mode)
    // would otherwise get a step of order step / eps, and the prox then
    // drives it straight to zero whatever the trust region does.
    const double cap = st.step / cfg.lambda_precond_floor;
    for (Eigen::Index p = 0; p < np; ++p) s[np + p] = std::min(s[np + p], cap);
  } else {
    s.setConstant(st.step);
  }
  if (!cfg.allow_nonconvex_prox) {
    for (Eigen::Index p = 0; p < np; ++p) {
      const double prod = tau * tau * s[p] * s[np + p];
      if (prod > cfg.max_step_product) s[np + p] *= cfg.max_step_product / prod;
    }
  }

  Vec cand = st.y - s.cwiseProduct(st.grad_at_y);
  if (np > 0) {
    const Vec sx = tau * s.head(np);
    const Vec sl = tau * s.segment(np, np);
    Vec bz = cand.head(np), lz = cand.segment(np, np);
    for (Eigen::Index p = 0; p < np; ++p) lz[p] = std::max(lz[p], 0.0);
    simd::prox_vc_l1(view(bz), view(lz), view(sx), view(sl), {cand.data(), std::size_t(np)},
                     {cand.data() + np, std::size_t(np)});
  }

  const double cand_cost = vista_objective(cand, lay, f, prior, tau);
  const Vec d = cand - st.y;
  const double cost_at_y = st.smooth_at_y + penalty(st.y, lay, tau);
  const Vec inv_s = s.cwiseInverse();
  const double model = st.smooth_at_y + simd::dot(view(st.grad_at_y), view(d)) +
                       0.5 * simd::weighted_sq_norm(view(d), view(inv_s)) + penalty(cand, lay, tau);
  const double predicted = model - cost_at_y;
  const double actual = cand_cost - cost_at_y;

  StepReport rep;
  // Proximal gradient mapping d / s: zero exactly at a stationary point, and
  // unlike the move itself it does not shrink with the step.
  const double gmap = (d.cwiseProduct(inv_s)).cwiseAbs().maxCoeff();
  rep.stationary = (st.y.array() == st.x.array()).all() &&
                   ((d.array() == 0.0).all() || gmap <= cfg.tol * std::max(1.0, std::fabs(st.cost)));
  rep.ratio = predicted < 0.0 ? actual / predicted : (actual <= 0.0 ? 1.0 : -kInf);
  rep.accepted = std::isfinite(cand_cost) && cand_cost <= st.cost;

  if (adaptive) {
    if (!rep.accepted || rep.ratio < cfg.tr_low) {
      if (st.consecutive_shrinks == 0) st.step_before_shrinks = st.step;
      st.step *= cfg.tr_shrink;
      ++st.consecutive_shrinks;
    } else {
      st.consecutive_shrinks = 0;
      if (rep.ratio > cfg.tr_high) st.step *= cfg.tr_expand;
    }
  } else if (!rep.accepted) {
    st.step *= cfg.tr_shrink;
  }

  if (rep.accepted) {
    rep.step_norm = (cand - st.x).cwiseAbs().maxCoeff();
    rep.cost_change = cand_cost - st.cost;
    st.x_prev = st.x;
    st.x = cand;
    st.cost = cand_cost;
    if (momentum) st.nesterov_t = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * st.nesterov_t * st.nesterov_t));
    st.cache_valid = false;
  }

  if (adaptive && momentum && st.consecutive_shrinks >= cfg.nesterov_reset_after && st.nesterov_t > 1.0) {
    st.x_prev = st.x;
    st.nesterov_t = 1.0;
    st.step = st.step_before_shrinks;
    st.consecutive_shrinks = 0;
    st.cache_valid = false;
  }
  rep.step = st.step;
  return rep;
}

VistaResult vista_run(const SmoothObjective& f, const HyperPrior& prior, const VistaConfig& cfg,
                      VistaState init, bool record_trace) {
  VistaResult res;
  res.state = std::move(init);
  VistaState& st = res.state;
  const int start_iter = st.iter;
  auto nnz = [&] {
    return Eigen::Index((st.beta().array() != 0.0).count());
  };
  if (record_trace) res.trace.push_back({st.iter, st.cost, st.step, nnz(), true});

  while (st.iter - start_iter < cfg.max_iter) {
    const double before = st.cost;
    const StepReport rep = vista_step(st, f, prior, cfg);
    if (record_trace) res.trace.push_back({st.iter, st.cost, st.step, nnz(), rep.accepted});
    if (rep.stationary) {
      res.converged = true;
      break;
    }
    // A tiny move is only convergence when the trust region is not asking
    // for a longer step; after a run of shrinks the step itself can be ~1e-9.
    // A decrease below rounding does not count.
    const bool step_limited = cfg.ablation != Ablation::plain_gradient && rep.ratio > cfg.tr_high &&
                              -rep.cost_change > 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(before));
    if (rep.accepted && !step_limited) {
      const double rel = std::fabs(rep.cost_change) / std::max(1.0, std::fabs(before));
      if (rel < cfg.tol && rep.step_norm < cfg.tol) {
        res.converged = true;
        break;
      }
    }
    if (!(st.step > 1e-300)) {
      res.stalled = true;
      break;
    }
  }
  if (res.converged) {
    // Hand back a state at rest so a further step starts from x itself.
    st.x_prev = st.x;
    st.nesterov_t = 1.0;
    st.cache_valid = false;
  }
  res.iterations = st.iter - start_iter;
  return res;
}

}  // namespace sblasso
