#include "sblasso/trajectory.hpp"

#include "sblasso/map_fit.hpp"
#include "sblasso/simd/kernels.hpp"

#include <atomic>
#include <chrono>
#include <thread>

namespace sblasso {

FitMode parse_fit_mode(std::string_view s) {
  if (s == "map") return FitMode::map;
  if (s == "sbl") return FitMode::sbl;
  if (s == "lasso-baseline" || s == "lasso") return FitMode::lasso_baseline;
  throw DomainError("unknown mode '" + std::string(s) + "'");
}

std::string_view fit_mode_name(FitMode m) {
  switch (m) {
    case FitMode::map:
      return "map";
    case FitMode::sbl:
      return "sbl";
    case FitMode::lasso_baseline:
      return "lasso-baseline";
  }
  return "?";
}

std::vector<double> TauGrid::values() const {
  require(std::isfinite(tau_max) && std::isfinite(tau_min), "tau grid: bounds must be finite");
  require(tau_min > 0.0 && tau_min < tau_max, "tau grid: need 0 < tau_min < tau_max");
  require(n_points >= 2, "tau grid: need at least two points");
  std::vector<double> v(static_cast<std::size_t>(n_points));
  const double lo = std::log(tau_min), hi = std::log(tau_max);
  for (int i = 0; i < n_points; ++i) v[std::size_t(i)] = std::exp(hi + (lo - hi) * double(i) / double(n_points - 1));
  v.front() = tau_max;
  v.back() = tau_min;
  return v;
}

double sparsity_fraction(const GlmProblem& problem, const Vec& estimate) {
  const Eigen::Index np = problem.n_penalized();
  if (np == 0) return 0.0;
  Eigen::Index zeros = 0;
  for (Eigen::Index j = 0; j < problem.p(); ++j) {
    if (problem.penalized[std::size_t(j)] && estimate[j] == 0.0) ++zeros;
  }
  return double(zeros) / double(np);
}

namespace {

// beta = 0, lambda = 1 and the auxiliary parameter at its null-model fit.
VistaState null_start(const GlmProblem& problem, const HyperPrior& prior, const VistaConfig& cfg, FitMode mode,
                      const std::optional<SaaDraw>& draw) {
  const double aux = null_model_aux(problem);
  if (mode == FitMode::map) {
    VistaState st = map_initial_state(problem, prior, cfg);
    if (!problem.likelihood.has_aux()) return st;
    Vec x = st.x;
    x[x.size() - 1] = aux;
    return make_vista_state(st.layout, std::move(x), map_objective(problem), prior, cfg);
  }
  VariationalState vs = initial_variational_state(problem, cfg.tau);
  vs.eta_aux = aux;
  return make_vista_state(sbl_layout(problem), pack_variational(problem, vs), sbl_objective(problem, *draw, cfg.tau),
                          prior, cfg);
}

}  // namespace

std::vector<TrajectoryRecord> run_trajectory(const GlmProblem& problem, const HyperPrior& prior,
                                             const TauGrid& grid, const TrajectoryOptions& opt) {
  const std::vector<double> taus = grid.values();
  if (opt.mode == FitMode::lasso_baseline) return lasso_baseline(problem, taus, opt.cfg.max_iter);

  std::vector<TrajectoryRecord> out;
  out.reserve(taus.size());
  std::optional<SaaDraw> draw;
  if (opt.mode == FitMode::sbl) {
    draw = make_draw(opt.mc_samples, problem.p() + (problem.likelihood.has_aux() ? 1 : 0), opt.seed);
  }
  std::optional<VistaState> prev;
  for (double tau : taus) {
    VistaConfig cfg = opt.cfg;
    cfg.tau = tau;
    if (!opt.warm_start || !prev) prev = null_start(problem, prior, cfg, opt.mode, draw);
    const VistaState* warm = &*prev;
    TrajectoryRecord rec;
    rec.tau = tau;
    rec.mode = opt.mode;
    VistaResult* run = nullptr;
    MapFit mf;
    SblFit sf;
    if (opt.mode == FitMode::map) {
      mf = fit_map(problem, prior, cfg, warm);
      rec.estimate = mf.beta;
      rec.lambda = mf.lambda;
      rec.aux = mf.aux;
      run = &mf.run;
    } else {
      sf = fit_sbl(problem, prior, cfg, *draw, warm);
      const VariationalState& vs = sf.state;
      rec.estimate = vs.eta_beta;
      rec.nu = vs.nu_beta;
      rec.lambda = vs.lambda;
      rec.ci_lo.resize(problem.p());
      rec.ci_hi.resize(problem.p());
      for (Eigen::Index j = 0; j < problem.p(); ++j) {
        const Interval ci = credible_interval(vs, j, opt.credible_level);
        rec.ci_lo[j] = ci.lo;
        rec.ci_hi[j] = ci.hi;
      }
      rec.aux = vs.eta_aux;
      rec.aux_nu = vs.has_aux ? vs.nu_aux : 0.0;
      run = &sf.run;
    }
    rec.sparsity_fraction = sparsity_fraction(problem, rec.estimate);
    rec.iterations = run->iterations;
    rec.cost = run->state.cost;
    rec.converged = run->converged;
    prev = std::move(run->state);
    out.push_back(std::move(rec));
  }
  return out;
}

double lasso_critical_tau(const GlmProblem& problem) {
  const Vec g = problem.X.transpose() * problem.y;
  double m = 0.0;
  for (Eigen::Index j = 0; j < problem.p(); ++j) {
    if (problem.penalized[std::size_t(j)]) m = std::max(m, std::fabs(g[j]));
  }
  return m;
}

double null_model_aux(const GlmProblem& problem) {
  if (!problem.likelihood.has_aux()) return 0.0;
  const Vec zero = Vec::Zero(problem.p());
  // nll(0, a) is unimodal in a for every family with an auxiliary parameter.
  double lo = -30.0, hi = 30.0;
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - r * (hi - lo), b = lo + r * (hi - lo);
  double fa = nll(problem, zero, a), fb = nll(problem, zero, b);
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - r * (hi - lo);
      fa = nll(problem, zero, a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + r * (hi - lo);
      fb = nll(problem, zero, b);
    }
  }
  return 0.5 * (lo + hi);
}

double map_critical_tau(const GlmProblem& problem) {
  const Vec zero = Vec::Zero(problem.p());
  const double aux = null_model_aux(problem);
  const Vec g = nll_grad(problem, zero, aux).grad_beta;
  double m = 0.0;
  for (Eigen::Index j = 0; j < problem.p(); ++j) {
    if (problem.penalized[std::size_t(j)]) m = std::max(m, std::fabs(g[j]));
  }
  return m;
}

std::vector<TrajectoryRecord> lasso_baseline(const GlmProblem& problem, const std::vector<double>& taus,
                                             int max_iter, double tol) {
  if (problem.likelihood.family != Family::normal) {
    throw DomainError("lasso_baseline: requires the normal family, got " + problem.likelihood.name());
  }
  const Eigen::Index p = problem.p();
  const Mat xtx = problem.X.transpose() * problem.X;
  const Vec xty = problem.X.transpose() * problem.y;
  const double L = Eigen::SelfAdjointEigenSolver<Mat>(xtx, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const double step = 1.0 / L;
  Vec mask(p);
  for (Eigen::Index j = 0; j < p; ++j) mask[j] = problem.penalized[std::size_t(j)] ? 1.0 : 0.0;

  std::vector<TrajectoryRecord> out;
  Vec beta = Vec::Zero(p);
  for (double tau : taus) {
    require(tau >= 0.0 && std::isfinite(tau), "lasso_baseline: tau must be non-negative");
    const Vec thr = mask * (tau * step);
    Vec prev = beta, y = beta, z(p), next(p);
    double t = 1.0;
    bool converged = false;
    int it = 0;
    while (it < max_iter) {
      ++it;
      z = y - step * (xtx * y - xty);
      simd::soft_threshold({z.data(), std::size_t(p)}, {thr.data(), std::size_t(p)}, {next.data(), std::size_t(p)});
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double move = (next - beta).cwiseAbs().maxCoeff();
      // Restart momentum when it points uphill.
      if ((y - next).dot(next - beta) > 0.0) {
        t = 1.0;
        y = next;
      } else {
        y = next + ((t - 1.0) / t_next) * (next - beta);
        t = t_next;
      }
      beta = next;
      if (move <= tol * std::max(1.0, beta.cwiseAbs().maxCoeff())) {
        converged = true;
        break;
      }
    }
    TrajectoryRecord rec;
    rec.tau = tau;
    rec.mode = FitMode::lasso_baseline;
    rec.estimate = beta;
    rec.lambda = mask;
    rec.sparsity_fraction = sparsity_fraction(problem, beta);
    rec.iterations = it;
    rec.cost = 0.5 * (problem.y - problem.X * beta).squaredNorm() + tau * beta.cwiseProduct(mask).cwiseAbs().sum();
    rec.converged = converged;
    out.push_back(std::move(rec));
  }
  return out;
}

std::uint64_t replicate_seed(std::uint64_t seed, int r) {
  std::uint64_t z = seed + std::uint64_t(r + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

struct RepResult {
  bool ok = false;
  bool converged = false;
  int iterations = 0;
  long fn = 0, pos = 0, fp = 0, neg = 0;
  long covered_active = 0, covered_all = 0;
  int aux_covered = -1;  // -1 when not applicable
};

RepResult run_replicate(const SimOptions& opt, int r) {
  RepResult res;
  WorkingExampleOptions wo;
  wo.n = opt.n;
  wo.p = opt.p;
  wo.active_values = opt.active_values;
  wo.noise_sd = opt.noise_sd;
  wo.seed = replicate_seed(opt.seed, r);
  wo.likelihood = opt.likelihood;
  const WorkingExample ex = generate_working_example(wo);
  VistaConfig cfg = opt.cfg;
  cfg.tau = opt.tau;

  Vec est;
  std::optional<VariationalState> vs;
  if (opt.mode == FitMode::map) {
    MapFit f = fit_map(ex.problem, opt.prior, cfg);
    est = f.beta;
    res.converged = f.run.converged;
    res.iterations = f.run.iterations;
  } else if (opt.mode == FitMode::sbl) {
    SblOptions so;
    so.mc_samples = opt.mc_samples;
    so.seed = replicate_seed(wo.seed, 0);
    SblFit f = fit_sbl(ex.problem, opt.prior, cfg, so);
    est = f.state.eta_beta;
    vs = std::move(f.state);
    res.converged = f.run.converged;
    res.iterations = f.run.iterations;
  } else {
    auto recs = lasso_baseline(ex.problem, {opt.tau}, cfg.max_iter);
    est = recs.front().estimate;
    res.converged = recs.front().converged;
    res.iterations = recs.front().iterations;
  }

  for (Eigen::Index j = 0; j < ex.problem.p(); ++j) {
    const bool truly_active = ex.true_beta[j] != 0.0;
    const bool selected = est[j] != 0.0;
    if (truly_active) {
      ++res.pos;
      if (!selected) ++res.fn;
    } else {
      ++res.neg;
      if (selected) ++res.fp;
    }
    if (vs) {
      const bool cov = credible_interval(*vs, j, opt.credible_level).contains(ex.true_beta[j]);
      res.covered_all += cov;
      if (truly_active) res.covered_active += cov;
    }
  }
  if (vs && vs->has_aux) res.aux_covered = aux_interval(*vs, opt.credible_level).contains(ex.true_aux) ? 1 : 0;
  res.ok = true;
  return res;
}

}  // namespace

SimMetrics simulate_table(const SimOptions& opt) {
  require(opt.n_reps >= 1, "simulate: need at least one replicate");
  require(opt.tau > 0.0, "simulate: tau must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<RepResult> results(std::size_t(opt.n_reps));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < opt.n_reps; r = next++) {
      try {
        results[std::size_t(r)] = run_replicate(opt, r);
      } catch (const std::exception&) {
        results[std::size_t(r)] = RepResult{};
      }
    }
  };
  const int nt = std::max(1, std::min(opt.threads, opt.n_reps));
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  SimMetrics m;
  m.n_reps = opt.n_reps;
  long fn = 0, pos = 0, fp = 0, neg = 0, cov_act = 0, cov_all = 0, aux_cov = 0, aux_n = 0;
  double iters = 0.0;
  for (const RepResult& r : results) {
    if (!r.ok) {
      ++m.n_failed;
      continue;
    }
    m.n_converged += r.converged;
    iters += r.iterations;
    fn += r.fn;
    pos += r.pos;
    fp += r.fp;
    neg += r.neg;
    cov_act += r.covered_active;
    cov_all += r.covered_all;
    if (r.aux_covered >= 0) {
      aux_cov += r.aux_covered;
      ++aux_n;
    }
  }
  const int ok = m.n_reps - m.n_failed;
  m.fnr = pos > 0 ? double(fn) / double(pos) : 0.0;
  m.fpr = neg > 0 ? double(fp) / double(neg) : 0.0;
  m.mean_iterations = ok > 0 ? iters / ok : 0.0;
  if (opt.mode == FitMode::sbl && ok > 0) {
    if (pos > 0) m.beta_coverage = double(cov_act) / double(pos);
    m.beta_coverage_all = double(cov_all) / double(pos + neg);
  }
  if (aux_n > 0) m.sigma2_coverage = double(aux_cov) / double(aux_n);
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

}  // namespace sblasso
