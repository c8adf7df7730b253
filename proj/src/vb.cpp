#include "sblasso/vb.hpp"

#include <boost/math/distributions/normal.hpp>

#include <memory>
#include <numbers>
#include <random>

namespace sblasso {

std::string_view var_family_name(VarFamily f) {
  switch (f) {
    case VarFamily::normal:
      return "normal";
    case VarFamily::log_normal:
      return "lognormal";
    case VarFamily::logit_normal:
      return "logitnormal";
  }
  return "?";
}

double g_kl(double eta, double nu, double lambda, double tau) {
  require(nu > 0.0 && lambda > 0.0 && tau > 0.0, "g_kl: nu, lambda and tau must be positive");
  const double a = std::fabs(eta);
  return tau * lambda * (nu * std::exp(-a / nu) + a) - std::log(nu) - std::log(lambda);
}

double g_ns(double eta, double nu, double lambda, double tau) {
  require(nu > 0.0 && lambda > 0.0 && tau > 0.0, "g_ns: nu, lambda and tau must be positive");
  return tau * lambda * (nu + std::fabs(eta)) - std::log(nu) - std::log(lambda) - 1.0;
}

double kl_smooth(VarFamily q_family, double eta_q, double nu_q, VarFamily p_family, double eta_p,
                 double nu_p) {
  if (q_family != p_family) {
    throw DomainError("kl_smooth: family mismatch (" + std::string(var_family_name(q_family)) + " vs " +
                      std::string(var_family_name(p_family)) + ")");
  }
  require(nu_q > 0.0 && nu_p > 0.0, "kl_smooth: scales must be positive");
  const double d = eta_q - eta_p;
  return std::log(nu_p / nu_q) + (nu_q * nu_q + d * d) / (2.0 * nu_p * nu_p) - 0.5;
}

VariationalState initial_variational_state(const GlmProblem& problem, double tau) {
  require(tau > 0.0, "variational state: tau must be positive");
  const Eigen::Index p = problem.p();
  VariationalState vs;
  vs.tau = tau;
  vs.eta_beta = Vec::Zero(p);
  vs.nu_beta.resize(p);
  vs.lambda.resize(p);
  vs.laplace = problem.penalized;
  const double nu0 = std::max(1e-3, std::min(1.0, 1.0 / tau));
  for (Eigen::Index j = 0; j < p; ++j) {
    const bool pen = problem.penalized[std::size_t(j)];
    vs.nu_beta[j] = pen ? nu0 : 0.1;
    vs.lambda[j] = pen ? 1.0 : 0.0;
  }
  vs.has_aux = problem.likelihood.has_aux();
  vs.aux_family = VarFamily::log_normal;
  vs.eta_aux = 0.0;
  vs.nu_aux = 0.1;
  return vs;
}

SaaDraw make_draw(Eigen::Index B, Eigen::Index D, std::uint64_t seed, bool antithetic) {
  require(B >= 2 && D >= 1, "draw: need at least two rows and one column");
  require(!antithetic || B % 2 == 0, "draw: antithetic sampling needs an even number of rows");
  SaaDraw d;
  d.seed = seed;
  d.antithetic = antithetic;
  d.eps.resize(B, D);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  for (Eigen::Index b = 0; b < B; ++b) {
    if (antithetic && b % 2 == 1) {
      d.eps.row(b) = -d.eps.row(b - 1);
      continue;
    }
    for (Eigen::Index j = 0; j < D; ++j) d.eps(b, j) = z(rng);
  }
  return d;
}

double laplace_from_normal(double eps) {
  // u = Phi(eps) - 1/2 and 1 - 2|u| = erfc(|eps| / sqrt 2).
  const double a = std::fabs(eps) / std::numbers::sqrt2;
  const double c = std::erfc(a);
  // Asymptotic log erfc for the far tail, where erfc underflows.
  const double log_c = c > 0.0 ? std::log(c) : -a * a - std::log(a * std::sqrt(std::numbers::pi));
  return eps < 0.0 ? log_c : -log_c;
}

namespace {

// Transformed draws, one column per row of eps: Laplace for penalized
// coefficients, Normal for the rest.
Mat standardized(const SaaDraw& draw, const std::vector<bool>& laplace) {
  Mat z = draw.eps.transpose();
  for (std::size_t j = 0; j < laplace.size(); ++j) {
    if (!laplace[j]) continue;
    for (Eigen::Index b = 0; b < z.cols(); ++b) z(Eigen::Index(j), b) = laplace_from_normal(z(Eigen::Index(j), b));
  }
  return z;
}

struct McTerm {
  double mean = 0.0;
  double se = 0.0;
  Vec row;
  Vec g_eta, g_nu;
  double g_eta_aux = 0.0, g_nu_aux = 0.0;
};

McTerm mc_term(const GlmProblem& pr, const Mat& z, bool antithetic, const Vec& eta, const Vec& nu,
               bool has_aux, double eta_aux, double nu_aux, bool grad) {
  const Eigen::Index p = pr.p(), n = pr.n(), B = z.cols();
  const Mat betas = (nu.asDiagonal() * z.topRows(p)).colwise() + eta;
  const Mat e = pr.X * betas;
  Mat de(grad ? n : 0, grad ? B : 0);
  Vec daux = Vec::Zero(B);
  McTerm m;
  m.row.resize(B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const double a = has_aux ? eta_aux + nu_aux * z(p, b) : 0.0;
    double da = 0.0;
    m.row[b] = column_loss(pr, e.col(b).data(), a, grad ? de.col(b).data() : nullptr, grad ? &da : nullptr);
    if (std::isnan(m.row[b]) || (grad && (std::isnan(da) || de.col(b).hasNaN()))) {
      throw NumericError("saa_elbo: NaN in Monte Carlo term at draw row " + std::to_string(b), betas.col(b));
    }
    daux[b] = da;
  }
  m.mean = m.row.mean();

  // Standard error over independent units: antithetic pairs or single rows.
  Vec units;
  if (antithetic) {
    units.resize(B / 2);
    for (Eigen::Index k = 0; k < B / 2; ++k) units[k] = 0.5 * (m.row[2 * k] + m.row[2 * k + 1]);
  } else {
    units = m.row;
  }
  const Eigen::Index K = units.size();
  if (K > 1) {
    const double var = (units.array() - units.mean()).square().sum() / double(K - 1);
    m.se = std::sqrt(var / double(K));
  }

  if (grad) {
    const Mat g = pr.X.transpose() * de;
    m.g_eta = g.rowwise().mean();
    m.g_nu = g.cwiseProduct(z.topRows(p)).rowwise().mean();
    if (has_aux) {
      m.g_eta_aux = daux.mean();
      m.g_nu_aux = daux.dot(z.row(p).transpose()) / double(B);
    }
  }
  return m;
}

void check_state(const GlmProblem& pr, const VariationalState& vs, const SaaDraw& draw) {
  const Eigen::Index p = pr.p();
  require(vs.eta_beta.size() == p && vs.nu_beta.size() == p && vs.lambda.size() == p &&
              vs.laplace.size() == std::size_t(p),
          "variational state does not match the problem dimension");
  require(vs.has_aux == pr.likelihood.has_aux(), "variational state auxiliary flag does not match the family");
  require(draw.dim() == p + (vs.has_aux ? 1 : 0), "draw dimension must equal P plus the auxiliary count");
  require(vs.tau > 0.0, "variational state: tau must be positive");
  for (Eigen::Index j = 0; j < p; ++j) {
    require(vs.nu_beta[j] > 0.0, "variational scales must be positive");
    if (vs.laplace[std::size_t(j)]) require(vs.lambda[j] > 0.0, "penalty weights must be positive");
  }
  require(!vs.has_aux || vs.nu_aux > 0.0, "auxiliary scale must be positive");
}

constexpr double kInvPriorVar = 1.0 / (kSmoothPriorSd * kSmoothPriorSd);

}  // namespace

ElboResult saa_elbo(const GlmProblem& problem, const VariationalState& vs, const SaaDraw& draw,
                    const HyperPrior& prior, bool want_grad) {
  check_state(problem, vs, draw);
  const Mat z = standardized(draw, vs.laplace);
  McTerm m = mc_term(problem, z, draw.antithetic, vs.eta_beta, vs.nu_beta, vs.has_aux, vs.eta_aux, vs.nu_aux,
                     want_grad);
  ElboResult r;
  r.mc_term = m.mean;
  r.mc_se = m.se;
  r.row_nll = std::move(m.row);
  double cost = m.mean;
  const Eigen::Index p = problem.p();
  const double tau = vs.tau;
  if (want_grad) {
    r.grad_eta = std::move(m.g_eta);
    r.grad_nu = std::move(m.g_nu);
    r.grad_lambda = Vec::Zero(p);
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    const double eta = vs.eta_beta[j], nu = vs.nu_beta[j];
    if (vs.laplace[std::size_t(j)]) {
      const double l = vs.lambda[j];
      cost += g_ns(eta, nu, l, tau) + prior.rho(l);
      if (want_grad) {
        r.grad_nu[j] += tau * l - 1.0 / nu;
        r.grad_lambda[j] = tau * nu - 1.0 / l + prior.rho_prime(l);
      }
    } else {
      cost += kl_smooth(VarFamily::normal, eta, nu, VarFamily::normal, 0.0, kSmoothPriorSd);
      if (want_grad) {
        r.grad_eta[j] += eta * kInvPriorVar;
        r.grad_nu[j] += -1.0 / nu + nu * kInvPriorVar;
      }
    }
  }
  if (vs.has_aux) {
    cost += kl_smooth(vs.aux_family, vs.eta_aux, vs.nu_aux, vs.aux_family, 0.0, kSmoothPriorSd);
    if (want_grad) {
      r.grad_eta_aux = m.g_eta_aux + vs.eta_aux * kInvPriorVar;
      r.grad_nu_aux = m.g_nu_aux - 1.0 / vs.nu_aux + vs.nu_aux * kInvPriorVar;
    }
  }
  r.cost = cost;
  return r;
}

double closed_form_gaussian_elbo(const GlmProblem& problem, const VariationalState& vs) {
  if (problem.likelihood.family != Family::normal) {
    throw DomainError("closed_form_gaussian_elbo: requires the normal family, got " + problem.likelihood.name());
  }
  require(vs.eta_beta.size() == problem.p() && vs.nu_beta.size() == problem.p(),
          "variational state does not match the problem dimension");
  // E||y - X beta||^2 = ||y - X eta||^2 + sum_p Var(beta_p) ||x_p||^2
  double xi = (problem.y - problem.X * vs.eta_beta).squaredNorm();
  for (Eigen::Index j = 0; j < problem.p(); ++j) {
    const double nu = vs.nu_beta[j];
    const double var = vs.laplace[std::size_t(j)] ? 2.0 * nu * nu : nu * nu;
    xi += var * problem.X.col(j).squaredNorm();
  }
  const double n = double(problem.n());
  const double inv_sigma2 = std::exp(-vs.eta_aux + 0.5 * vs.nu_aux * vs.nu_aux);
  return 0.5 * xi * inv_sigma2 + 0.5 * n * vs.eta_aux + 0.5 * n * std::log(2.0 * std::numbers::pi);
}

Interval credible_interval(const VariationalState& vs, Eigen::Index j, double level) {
  require(level > 0.0 && level < 1.0, "credible level must lie in (0,1)");
  require(j >= 0 && j < vs.eta_beta.size(), "credible interval: index out of range");
  const double eta = vs.eta_beta[j], nu = vs.nu_beta[j];
  double half;
  if (vs.laplace[std::size_t(j)]) {
    half = nu * std::log(1.0 / (1.0 - level));
  } else {
    half = nu * boost::math::quantile(boost::math::normal(), 0.5 * (1.0 + level));
  }
  return {eta - half, eta + half};
}

Interval aux_interval(const VariationalState& vs, double level) {
  require(vs.has_aux, "aux_interval: family has no auxiliary parameter");
  require(level > 0.0 && level < 1.0, "credible level must lie in (0,1)");
  const double half = vs.nu_aux * boost::math::quantile(boost::math::normal(), 0.5 * (1.0 + level));
  return {vs.eta_aux - half, vs.eta_aux + half};
}

// ---- VISTA glue ----------------------------------------------------------

VistaLayout sbl_layout(const GlmProblem& problem) {
  const ParamIndex idx(problem);
  return {idx.n_pen(), idx.n_pen() + 2 * idx.n_unpen() + (idx.aux ? 2 : 0)};
}

Vec pack_variational(const GlmProblem& problem, const VariationalState& vs) {
  const ParamIndex idx(problem);
  const VistaLayout lay = sbl_layout(problem);
  const Eigen::Index np = idx.n_pen(), nu = idx.n_unpen();
  Vec x(lay.size());
  for (Eigen::Index k = 0; k < np; ++k) {
    x[k] = vs.eta_beta[idx.pen[k]];
    x[np + k] = vs.lambda[idx.pen[k]];
    x[2 * np + k] = std::log(vs.nu_beta[idx.pen[k]]);
  }
  for (Eigen::Index k = 0; k < nu; ++k) {
    x[3 * np + k] = vs.eta_beta[idx.unpen[k]];
    x[3 * np + nu + k] = std::log(vs.nu_beta[idx.unpen[k]]);
  }
  if (idx.aux) {
    x[3 * np + 2 * nu] = vs.eta_aux;
    x[3 * np + 2 * nu + 1] = std::log(vs.nu_aux);
  }
  return x;
}

VariationalState unpack_variational(const GlmProblem& problem, const Vec& x, double tau) {
  const ParamIndex idx(problem);
  const Eigen::Index np = idx.n_pen(), nu = idx.n_unpen();
  require(x.size() == sbl_layout(problem).size(), "variational vector does not match the layout");
  VariationalState vs = initial_variational_state(problem, tau);
  auto scale = [](double log_nu) { return std::max(std::exp(log_nu), kNuFloor); };
  for (Eigen::Index k = 0; k < np; ++k) {
    vs.eta_beta[idx.pen[k]] = x[k];
    vs.lambda[idx.pen[k]] = x[np + k];
    vs.nu_beta[idx.pen[k]] = scale(x[2 * np + k]);
  }
  for (Eigen::Index k = 0; k < nu; ++k) {
    vs.eta_beta[idx.unpen[k]] = x[3 * np + k];
    vs.nu_beta[idx.unpen[k]] = scale(x[3 * np + nu + k]);
  }
  if (idx.aux) {
    vs.eta_aux = x[3 * np + 2 * nu];
    vs.nu_aux = scale(x[3 * np + 2 * nu + 1]);
  }
  return vs;
}

namespace {

struct SblEvaluator {
  const GlmProblem* pr;
  ParamIndex idx;
  Mat z;
  bool antithetic;
  double tau;

  // Smooth part without -log lambda + rho(lambda), which VISTA adds.
  double eval(const Vec& x, Vec* grad) const {
    const Eigen::Index np = idx.n_pen(), nu_n = idx.n_unpen(), p = pr->p();
    Vec eta(p), nu(p);
    auto scale = [](double log_nu) { return std::max(std::exp(log_nu), kNuFloor); };
    for (Eigen::Index k = 0; k < np; ++k) {
      eta[idx.pen[k]] = x[k];
      nu[idx.pen[k]] = scale(x[2 * np + k]);
    }
    for (Eigen::Index k = 0; k < nu_n; ++k) {
      eta[idx.unpen[k]] = x[3 * np + k];
      nu[idx.unpen[k]] = scale(x[3 * np + nu_n + k]);
    }
    const Eigen::Index ia = 3 * np + 2 * nu_n;
    const double eta_a = idx.aux ? x[ia] : 0.0;
    const double nu_a = idx.aux ? scale(x[ia + 1]) : 0.0;
    for (Eigen::Index k = 0; k < np; ++k) {
      if (!(x[np + k] > 0.0)) return std::numeric_limits<double>::infinity();
    }

    const McTerm m = mc_term(*pr, z, antithetic, eta, nu, idx.aux, eta_a, nu_a, grad != nullptr);
    double cost = m.mean;
    for (Eigen::Index k = 0; k < np; ++k) {
      const Eigen::Index j = idx.pen[k];
      const double l = x[np + k];
      cost += tau * l * nu[j] - std::log(nu[j]) - 1.0;
      if (grad) {
        (*grad)[k] = m.g_eta[j];
        (*grad)[np + k] = tau * nu[j];
        (*grad)[2 * np + k] = nu[j] * (m.g_nu[j] + tau * l) - 1.0;
      }
    }
    for (Eigen::Index k = 0; k < nu_n; ++k) {
      const Eigen::Index j = idx.unpen[k];
      cost += kl_smooth(VarFamily::normal, eta[j], nu[j], VarFamily::normal, 0.0, kSmoothPriorSd);
      if (grad) {
        (*grad)[3 * np + k] = m.g_eta[j] + eta[j] * kInvPriorVar;
        (*grad)[3 * np + nu_n + k] = nu[j] * m.g_nu[j] - 1.0 + nu[j] * nu[j] * kInvPriorVar;
      }
    }
    if (idx.aux) {
      cost += kl_smooth(VarFamily::log_normal, eta_a, nu_a, VarFamily::log_normal, 0.0, kSmoothPriorSd);
      if (grad) {
        (*grad)[ia] = m.g_eta_aux + eta_a * kInvPriorVar;
        (*grad)[ia + 1] = nu_a * m.g_nu_aux - 1.0 + nu_a * nu_a * kInvPriorVar;
      }
    }
    return cost;
  }
};

}  // namespace

SmoothObjective sbl_objective(const GlmProblem& problem, const SaaDraw& draw, double tau) {
  const ParamIndex idx(problem);
  require(draw.dim() == problem.p() + (idx.aux ? 1 : 0), "draw dimension must equal P plus the auxiliary count");
  auto ev = std::make_shared<const SblEvaluator>(
      SblEvaluator{&problem, idx, standardized(draw, problem.penalized), draw.antithetic, tau});
  SmoothObjective f;
  f.cost = [ev](const Vec& x) { return ev->eval(x, nullptr); };
  f.cost_and_grad = [ev](const Vec& x, Vec& g) { return ev->eval(x, &g); };
  return f;
}

SblFit fit_sbl(const GlmProblem& problem, const HyperPrior& prior, const VistaConfig& cfg,
               const SaaDraw& draw, const VistaState* warm, bool record_trace) {
  const SmoothObjective f = sbl_objective(problem, draw, cfg.tau);
  VistaState init = warm ? warm_start(*warm, f, prior, cfg)
                         : make_vista_state(sbl_layout(problem),
                                            pack_variational(problem, initial_variational_state(problem, cfg.tau)),
                                            f, prior, cfg);
  SblFit fit;
  fit.draw = draw;
  fit.run = vista_run(f, prior, cfg, std::move(init), record_trace);
  fit.state = unpack_variational(problem, fit.run.state.x, cfg.tau);
  return fit;
}

SblFit fit_sbl(const GlmProblem& problem, const HyperPrior& prior, const VistaConfig& cfg,
               const SblOptions& opt, const VistaState* warm, bool record_trace) {
  require(opt.mc_samples >= 2, "fit_sbl: need at least two Monte Carlo samples");
  const SaaDraw draw = make_draw(opt.mc_samples, problem.p() + (problem.likelihood.has_aux() ? 1 : 0), opt.seed,
                                 opt.antithetic);
  return fit_sbl(problem, prior, cfg, draw, warm, record_trace);
}

}  // namespace sblasso
