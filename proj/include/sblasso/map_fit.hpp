#pragma once

// Penalized maximum a posteriori fit of a GLM with learned penalty weights:
// the VISTA layout is [beta_pen | lambda | beta_unpen, aux].

#include "sblasso/glm.hpp"
#include "sblasso/vista.hpp"

namespace sblasso {

struct MapFit {
  Vec beta;    // all P coefficients, in column order
  Vec lambda;  // P entries; 0 for unpenalized columns
  double aux = 0.0;
  VistaResult run;
};

// Index bookkeeping shared by the MAP and variational fits.
struct ParamIndex {
  std::vector<Eigen::Index> pen;
  std::vector<Eigen::Index> unpen;
  bool aux = false;

  explicit ParamIndex(const GlmProblem& problem);
  Eigen::Index n_pen() const { return Eigen::Index(pen.size()); }
  Eigen::Index n_unpen() const { return Eigen::Index(unpen.size()); }
};

SmoothObjective map_objective(const GlmProblem& problem);

// Cold start beta = 0, lambda = 1, aux = 0 unless warm is given.
VistaState map_initial_state(const GlmProblem& problem, const HyperPrior& prior, const VistaConfig& cfg);

MapFit fit_map(const GlmProblem& problem, const HyperPrior& prior, const VistaConfig& cfg,
               const VistaState* warm = nullptr, bool record_trace = false);

// Unpacks a VISTA state laid out by map_objective.
MapFit unpack_map(const GlmProblem& problem, VistaResult run);

}  // namespace sblasso
