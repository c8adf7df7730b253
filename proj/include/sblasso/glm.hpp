#pragma once

#include "sblasso/common.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sblasso {

enum class Family { normal, bernoulli, poisson, neg_binomial, cauchy };

// Likelihood family with its fixed link (identity, logit, log, log, identity)
// and an auxiliary parameter kept on an unconstrained log scale:
//   normal        aux = log sigma^2
//   neg_binomial  aux = log sigma^2, number of failures r = 1 / sigma^2
//   cauchy        aux = log scale
struct LikelihoodSpec {
  Family family = Family::normal;

  static LikelihoodSpec parse(std::string_view name);
  std::string name() const;
  bool has_aux() const noexcept { return family == Family::normal || family == Family::neg_binomial || family == Family::cauchy; }
  std::string aux_name() const;
};

// Linear predictors are clamped to this magnitude before exponentiation.
inline constexpr double kEtaClamp = 30.0;

struct GlmProblem {
  Mat X;
  Vec y;
  LikelihoodSpec likelihood;
  std::vector<bool> penalized;
  std::vector<std::string> column_names;
  std::string response_name = "y";
  // log(y!) for count families, filled by make_problem; empty otherwise.
  Vec log_factorial_y;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
  Eigen::Index n_penalized() const;
};

// Checks shapes, finiteness and response support; fills default names and
// an all-penalized mask when those are empty.
GlmProblem make_problem(Mat X, Vec y, LikelihoodSpec lik, std::vector<bool> penalized = {},
                        std::vector<std::string> names = {}, std::string response_name = "y");
void validate(const GlmProblem& problem);

// Exact negative log-likelihood, normalizing constants included.
double nll(const GlmProblem& problem, const Vec& beta, double aux = 0.0);

struct NllGradient {
  Vec grad_beta;
  double grad_aux = 0.0;
};
NllGradient nll_grad(const GlmProblem& problem, const Vec& beta, double aux = 0.0);

// Pointwise evaluation for one column of linear predictors: returns the summed
// loss, writes d loss / d eta into d_eta (may be null) and d loss / d aux into
// *d_aux (may be null). log_factorial, when given, holds log(y_i!) for the
// count families and saves recomputing it.
double column_loss(Family family, const double* y, const double* eta, Eigen::Index n, double aux,
                   double* d_eta, double* d_aux, const double* log_factorial = nullptr);
// Same, with the response and cached constants taken from the problem.
double column_loss(const GlmProblem& problem, const double* eta, double aux, double* d_eta, double* d_aux);

struct WorkingExampleOptions {
  int n = 250;
  int p = 50;
  std::vector<double> active_values{-2.5, -2.0, -1.5, 1.5, 2.0, 2.5};
  double noise_sd = 1.0;
  std::uint64_t seed = 1;
  LikelihoodSpec likelihood{};
};

struct WorkingExample {
  GlmProblem problem;
  Vec true_beta;
  double true_aux = 0.0;  // on the same log scale as LikelihoodSpec aux
};

// Standard normal design, the active values in the leading coordinates and
// a response drawn from the family at X beta.
WorkingExample generate_working_example(const WorkingExampleOptions& opt);

}  // namespace sblasso
