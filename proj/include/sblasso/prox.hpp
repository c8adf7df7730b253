#pragma once

// Proximal operators for the l1 penalty with a fixed weight (soft
// thresholding) and with a learnable weight, i.e. the joint prox of
// g(x, lambda) = lambda |x| over (x, lambda >= 0).

#include "sblasso/common.hpp"

namespace sblasso {

struct ProxQuery {
  double x0 = 0.0;
  double lambda0 = 0.0;
  double s_x = 1.0;
  double s_lambda = 1.0;
};

struct ProxResult {
  double x_star = 0.0;
  double lambda_star = 0.0;
  // Two global optima; lambda_star then reports lambda0.
  bool tie = false;
};

// (|x| - threshold)^+ sgn(x)
double soft_threshold(double x, double threshold);

// Minimizes lambda|x| + (x - x0)^2 / (2 s_x) + (lambda - lambda0)^2 / (2 s_lambda).
// For s_x s_lambda < 1 the program is convex in lambda after profiling out x and
// the operator is continuous; otherwise lambda* is either 0 or lambda0.
ProxResult prox_vc_l1(const ProxQuery& q);

struct ProxVecResult {
  Vec x_star;
  Vec lambda_star;
};

ProxVecResult prox_vc_l1_vec(const Vec& x0, const Vec& lambda0, const Vec& s_x, const Vec& s_lambda);

double prox_cost(double x, double lambda, const ProxQuery& q);

// lambda* as a function of lambda0, a = |x0|/s_x and b = s_x s_lambda < 1.
double reduced_prox_lambda(double lambda0, double a, double b);

struct LatticeMinimum {
  double x = 0.0;
  double lambda = 0.0;
  double cost = 0.0;
  double spacing_x = 0.0;
  double spacing_lambda = 0.0;
};

// Brute-force minimum of prox_cost over an n-by-n lattice on
// [x_lo, x_hi] x [0, lambda_hi]. A debugging aid for the closed form.
LatticeMinimum prox_lattice_minimum(const ProxQuery& q, int n = 2001, double x_lo = -3.0, double x_hi = 3.0,
                                    double lambda_hi = 3.0);

// Validates a query, clamping lambda0 in (-1e-12, 0) to zero.
ProxQuery validated(ProxQuery q);

}  // namespace sblasso
