#include "sblasso/prox.hpp"

#include "sblasso/simd/kernels.hpp"

#include <array>
#include <cstdint>
#include <limits>

namespace sblasso {

namespace {
constexpr double kLambdaDrift = 1e-12;
}

double soft_threshold(double x, double threshold) {
  require(std::isfinite(x) && std::isfinite(threshold), "soft_threshold: non-finite input");
  require(threshold >= 0.0, "soft_threshold: threshold must be non-negative");
  std::array<double, 1> out{};
  simd::scalar::table().soft_threshold({&x, 1}, {&threshold, 1}, out);
  return out[0];
}

ProxQuery validated(ProxQuery q) {
  require(std::isfinite(q.x0) && std::isfinite(q.lambda0) && std::isfinite(q.s_x) &&
              std::isfinite(q.s_lambda),
          "prox: non-finite query");
  require(q.s_x > 0.0 && q.s_lambda > 0.0, "prox: step sizes must be positive");
  if (q.lambda0 < 0.0) {
    require(q.lambda0 > -kLambdaDrift, "prox: lambda0 must be non-negative");
    q.lambda0 = 0.0;
  }
  return q;
}

ProxResult prox_vc_l1(const ProxQuery& query) {
  const ProxQuery q = validated(query);
  double x = 0.0, lam = 0.0;
  std::uint8_t tie = 0;
  simd::scalar::table().prox_vc_l1({&q.x0, 1}, {&q.lambda0, 1}, {&q.s_x, 1}, {&q.s_lambda, 1},
                                   {&x, 1}, {&lam, 1}, {&tie, 1});
  return {x, lam, tie != 0};
}

ProxVecResult prox_vc_l1_vec(const Vec& x0, const Vec& lambda0, const Vec& s_x, const Vec& s_lambda) {
  const auto n = x0.size();
  require(lambda0.size() == n && s_x.size() == n && s_lambda.size() == n,
          "prox_vc_l1_vec: length mismatch");
  Vec l0 = lambda0;
  for (Eigen::Index i = 0; i < n; ++i) {
    l0[i] = validated({x0[i], lambda0[i], s_x[i], s_lambda[i]}).lambda0;
  }
  ProxVecResult r{Vec(n), Vec(n)};
  simd::prox_vc_l1({x0.data(), std::size_t(n)}, {l0.data(), std::size_t(n)},
                   {s_x.data(), std::size_t(n)}, {s_lambda.data(), std::size_t(n)},
                   {r.x_star.data(), std::size_t(n)}, {r.lambda_star.data(), std::size_t(n)});
  return r;
}

double prox_cost(double x, double lambda, const ProxQuery& q) {
  require(lambda >= 0.0, "prox_cost: lambda must be non-negative");
  const double dx = x - q.x0;
  const double dl = lambda - q.lambda0;
  return lambda * std::fabs(x) + dx * dx / (2.0 * q.s_x) + dl * dl / (2.0 * q.s_lambda);
}

double reduced_prox_lambda(double lambda0, double a, double b) {
  require(b < 1.0, "reduced_prox_lambda: b must be < 1");
  require(b > 0.0 && a >= 0.0 && lambda0 >= 0.0, "reduced_prox_lambda: invalid arguments");
  if (lambda0 >= a) return lambda0;
  const double num = lambda0 - a * b;
  return (num > 0.0 ? num : 0.0) / (1.0 - b);
}

LatticeMinimum prox_lattice_minimum(const ProxQuery& query, int n, double x_lo, double x_hi, double lambda_hi) {
  require(n >= 2 && x_lo < x_hi && lambda_hi > 0.0, "prox lattice: invalid bounds");
  const ProxQuery q = validated(query);
  LatticeMinimum best;
  best.spacing_x = (x_hi - x_lo) / double(n - 1);
  best.spacing_lambda = lambda_hi / double(n - 1);
  best.cost = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double x = x_lo + best.spacing_x * double(i);
    for (int k = 0; k < n; ++k) {
      const double l = best.spacing_lambda * double(k);
      const double c = prox_cost(x, l, q);
      if (c < best.cost) best = {x, l, c, best.spacing_x, best.spacing_lambda};
    }
  }
  return best;
}

}  // namespace sblasso
