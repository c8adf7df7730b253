#pragma once

#include "sblasso/common.hpp"

#include <string>
#include <string_view>

namespace sblasso {

// Hyperprior on a penalty weight lambda > 0, represented by
// rho(lambda) = -log p(lambda) up to an additive constant.
class HyperPrior {
 public:
  enum class Kind { half_cauchy, half_gaussian, exponential, power_inverse, uniform };

  static HyperPrior half_cauchy(double scale = 1.0);
  static HyperPrior half_gaussian(double location, double scale);
  static HyperPrior exponential(double scale);
  static HyperPrior power_inverse(double exponent);
  static HyperPrior uniform();

  // "half-cauchy:1.0", "half-gaussian:m,b", "exponential:a", "power-inverse:a", "uniform"
  static HyperPrior parse(std::string_view spec);
  std::string to_string() const;

  Kind kind() const noexcept { return kind_; }
  double param1() const noexcept { return p1_; }
  double param2() const noexcept { return p2_; }

  double rho(double lambda) const;
  double rho_prime(double lambda) const;
  double rho_double_prime(double lambda) const;

  // Uniform and power-inverse (exponent != 1) priors leave the penalized
  // objective unbounded below; optimizers refuse them unless overridden.
  bool unbounded_objective() const noexcept;
  // True when rho' is bounded on (0, inf) and the density decreases.
  bool bounded_log_derivative() const noexcept;

 private:
  HyperPrior(Kind k, double p1, double p2) : kind_(k), p1_(p1), p2_(p2) {}
  Kind kind_;
  double p1_;
  double p2_;
};

struct ProfiledPenaltyPoint {
  double beta_abs = 0.0;
  double tau = 0.0;
  double lambda_star = 0.0;
  double g_value = 0.0;
  double g_prime = 0.0;
  double g_double_prime = 0.0;
};

// Fixed point lambda* = 1 / (tau |beta| + rho'(lambda*)) by bisection,
// together with the profiled penalty and its first two derivatives.
ProfiledPenaltyPoint solve_lambda_star(double beta_abs, double tau, const HyperPrior& prior);

// min over lambda of tau lambda |beta| - log lambda + rho(lambda)
double g_tau(double beta_abs, double tau, const HyperPrior& prior);

// The weight minimizing -log lambda + rho(lambda), i.e. lambda* at beta = 0.
double lambda_at_origin(const HyperPrior& prior);

struct OrthogonalSolution {
  double beta_star = 0.0;
  double lambda_star = 0.0;
};

// Joint minimizer of (beta - beta_hat)^2 / (2 s) + tau lambda |beta| - log lambda + rho(lambda)
// with s = sigma_sq / sum_x_sq, the single-coordinate problem of an orthogonal
// Gaussian design with known noise variance.
OrthogonalSolution orthogonal_halfgaussian_solution(double beta_hat, double sum_x_sq, double sigma_sq,
                                                    double tau, double m_lambda, double b_lambda);
OrthogonalSolution orthogonal_halfcauchy_solution(double beta_hat, double sum_x_sq, double sigma_sq,
                                                  double tau, double a_lambda);

// Profile cost over lambda (beta profiled out by soft thresholding).
double orthogonal_profile_cost(double lambda, double beta_hat, double s, double tau,
                               const HyperPrior& prior);

}  // namespace sblasso
