#include "sblasso/map_fit.hpp"

#include <memory>

namespace sblasso {

ParamIndex::ParamIndex(const GlmProblem& problem) : aux(problem.likelihood.has_aux()) {
  for (Eigen::Index j = 0; j < problem.p(); ++j) (problem.penalized[std::size_t(j)] ? pen : unpen).push_back(j);
}

namespace {

struct MapUnpack {
  ParamIndex idx;
  Eigen::Index p;

  void beta(const Vec& x, Vec& b) const {
    b.resize(p);
    for (Eigen::Index k = 0; k < idx.n_pen(); ++k) b[idx.pen[k]] = x[k];
    const Eigen::Index off = 2 * idx.n_pen();
    for (Eigen::Index k = 0; k < idx.n_unpen(); ++k) b[idx.unpen[k]] = x[off + k];
  }
  double aux(const Vec& x) const { return idx.aux ? x[x.size() - 1] : 0.0; }
};

}  // namespace

SmoothObjective map_objective(const GlmProblem& problem) {
  auto u = std::make_shared<const MapUnpack>(MapUnpack{ParamIndex(problem), problem.p()});
  const GlmProblem* pr = &problem;
  SmoothObjective f;
  f.cost = [u, pr](const Vec& x) {
    Vec b;
    u->beta(x, b);
    return nll(*pr, b, u->aux(x));
  };
  f.cost_and_grad = [u, pr](const Vec& x, Vec& grad) {
    Vec b;
    u->beta(x, b);
    const double a = u->aux(x);
    const Vec eta = pr->X * b;
    Vec d_eta(pr->n());
    double d_aux = 0.0;
    const double v = column_loss(*pr, eta.data(), a, d_eta.data(), &d_aux);
    const Vec gb = pr->X.transpose() * d_eta;
    grad.setZero();
    const Eigen::Index np = u->idx.n_pen();
    for (Eigen::Index k = 0; k < np; ++k) grad[k] = gb[u->idx.pen[k]];
    for (Eigen::Index k = 0; k < u->idx.n_unpen(); ++k) grad[2 * np + k] = gb[u->idx.unpen[k]];
    if (u->idx.aux) grad[grad.size() - 1] = d_aux;
    return v;
  };
  return f;
}

VistaState map_initial_state(const GlmProblem& problem, const HyperPrior& prior, const VistaConfig& cfg) {
  const ParamIndex idx(problem);
  VistaLayout lay{idx.n_pen(), idx.n_unpen() + (idx.aux ? 1 : 0)};
  Vec x0 = Vec::Zero(lay.size());
  x0.segment(lay.n_pen, lay.n_pen).setOnes();
  return make_vista_state(lay, std::move(x0), map_objective(problem), prior, cfg);
}

MapFit unpack_map(const GlmProblem& problem, VistaResult run) {
  const MapUnpack u{ParamIndex(problem), problem.p()};
  MapFit fit;
  u.beta(run.state.x, fit.beta);
  fit.lambda = Vec::Zero(problem.p());
  for (Eigen::Index k = 0; k < u.idx.n_pen(); ++k) fit.lambda[u.idx.pen[k]] = run.state.x[u.idx.n_pen() + k];
  fit.aux = u.aux(run.state.x);
  fit.run = std::move(run);
  return fit;
}

MapFit fit_map(const GlmProblem& problem, const HyperPrior& prior, const VistaConfig& cfg,
               const VistaState* warm, bool record_trace) {
  const SmoothObjective f = map_objective(problem);
  VistaState init = warm ? warm_start(*warm, f, prior, cfg) : map_initial_state(problem, prior, cfg);
  return unpack_map(problem, vista_run(f, prior, cfg, std::move(init), record_trace));
}

}  // namespace sblasso
