#include "sblasso/hyperprior.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <limits>
#include <vector>

namespace sblasso {

HyperPrior HyperPrior::half_cauchy(double scale) {
  require(std::isfinite(scale) && scale > 0.0, "half-cauchy scale must be positive");
  return {Kind::half_cauchy, scale, 0.0};
}

HyperPrior HyperPrior::half_gaussian(double location, double scale) {
  require(std::isfinite(location) && location >= 0.0, "half-gaussian location must be >= 0");
  require(std::isfinite(scale) && scale > 0.0, "half-gaussian scale must be positive");
  return {Kind::half_gaussian, location, scale};
}

HyperPrior HyperPrior::exponential(double scale) {
  require(std::isfinite(scale) && scale > 0.0, "exponential scale must be positive");
  return {Kind::exponential, scale, 0.0};
}

HyperPrior HyperPrior::power_inverse(double exponent) {
  require(std::isfinite(exponent) && exponent > 0.0, "power-inverse exponent must be positive");
  return {Kind::power_inverse, exponent, 0.0};
}

HyperPrior HyperPrior::uniform() { return {Kind::uniform, 0.0, 0.0}; }

namespace {

std::vector<double> parse_numbers(std::string_view s) {
  std::vector<double> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    const std::string token(s.substr(0, comma));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == token.size() && !token.empty(), "invalid number '" + token + "' in prior spec");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

HyperPrior HyperPrior::parse(std::string_view spec) {
  const auto colon = spec.find(':');
  const std::string_view name = spec.substr(0, colon);
  const std::vector<double> args =
      colon == std::string_view::npos ? std::vector<double>{} : parse_numbers(spec.substr(colon + 1));
  auto want = [&](std::size_t n) {
    require(args.size() == n, "prior '" + std::string(name) + "' expects " + std::to_string(n) +
                                  " parameter(s)");
  };
  if (name == "half-cauchy") {
    if (args.empty()) return half_cauchy(1.0);
    want(1);
    return half_cauchy(args[0]);
  }
  if (name == "half-gaussian") {
    want(2);
    return half_gaussian(args[0], args[1]);
  }
  if (name == "exponential") {
    want(1);
    return exponential(args[0]);
  }
  if (name == "power-inverse") {
    want(1);
    return power_inverse(args[0]);
  }
  if (name == "uniform") {
    want(0);
    return uniform();
  }
  throw DomainError("unknown prior '" + std::string(name) + "'");
}

std::string HyperPrior::to_string() const {
  switch (kind_) {
    case Kind::half_cauchy:
      return "half-cauchy:" + fmt(p1_);
    case Kind::half_gaussian:
      return "half-gaussian:" + fmt(p1_) + "," + fmt(p2_);
    case Kind::exponential:
      return "exponential:" + fmt(p1_);
    case Kind::power_inverse:
      return "power-inverse:" + fmt(p1_);
    case Kind::uniform:
      return "uniform";
  }
  return "?";
}

double HyperPrior::rho(double l) const {
  switch (kind_) {
    case Kind::half_cauchy:
      return std::log1p((l / p1_) * (l / p1_));
    case Kind::half_gaussian: {
      const double d = l - p1_;
      return d * d / (p2_ * p2_);
    }
    case Kind::exponential:
      return l / p1_;
    case Kind::power_inverse:
      return p1_ * std::log(l);
    case Kind::uniform:
      return 0.0;
  }
  return 0.0;
}

double HyperPrior::rho_prime(double l) const {
  switch (kind_) {
    case Kind::half_cauchy:
      return 2.0 * l / (p1_ * p1_ + l * l);
    case Kind::half_gaussian:
      return 2.0 * (l - p1_) / (p2_ * p2_);
    case Kind::exponential:
      return 1.0 / p1_;
    case Kind::power_inverse:
      return p1_ / l;
    case Kind::uniform:
      return 0.0;
  }
  return 0.0;
}

double HyperPrior::rho_double_prime(double l) const {
  switch (kind_) {
    case Kind::half_cauchy: {
      const double a2 = p1_ * p1_;
      const double den = a2 + l * l;
      return 2.0 * (a2 - l * l) / (den * den);
    }
    case Kind::half_gaussian:
      return 2.0 / (p2_ * p2_);
    case Kind::exponential:
      return 0.0;
    case Kind::power_inverse:
      return -p1_ / (l * l);
    case Kind::uniform:
      return 0.0;
  }
  return 0.0;
}

bool HyperPrior::unbounded_objective() const noexcept {
  return kind_ == Kind::uniform || (kind_ == Kind::power_inverse && p1_ != 1.0);
}

bool HyperPrior::bounded_log_derivative() const noexcept {
  return kind_ == Kind::half_cauchy || kind_ == Kind::exponential;
}

ProfiledPenaltyPoint solve_lambda_star(double beta_abs, double tau, const HyperPrior& prior) {
  require(std::isfinite(beta_abs) && beta_abs >= 0.0, "solve_lambda_star: |beta| must be >= 0");
  require(std::isfinite(tau) && tau > 0.0, "solve_lambda_star: tau must be positive");
  if (prior.kind() == HyperPrior::Kind::uniform ||
      (prior.kind() == HyperPrior::Kind::power_inverse && prior.param1() <= 1.0)) {
    throw UnboundedObjectiveError("solve_lambda_star: prior '" + prior.to_string() +
                                  "' gives an unbounded profiled objective");
  }
  const double slope = tau * beta_abs;
  auto h = [&](double l) { return l * (slope + prior.rho_prime(l)) - 1.0; };

  double lo = 1e-12;
  double hi = 1.0;
  if (h(lo) >= 0.0) throw NumericError("solve_lambda_star: no sign change at the lower bracket");
  int doublings = 0;
  while (h(hi) <= 0.0) {
    if (++doublings > 60) throw NumericError("solve_lambda_star: failed to bracket the fixed point");
    lo = hi;
    hi *= 2.0;
  }
  // Bisect to 1e-12 absolute, continuing to a few ulps when lambda is tiny.
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (hi - lo <= std::min(1e-12, 4.0 * std::numeric_limits<double>::epsilon() * hi)) break;
    (h(mid) > 0.0 ? hi : lo) = mid;
  }
  const double l = 0.5 * (lo + hi);

  ProfiledPenaltyPoint pt;
  pt.beta_abs = beta_abs;
  pt.tau = tau;
  pt.lambda_star = l;
  pt.g_value = slope * l - std::log(l) + prior.rho(l);
  pt.g_prime = tau * l;
  pt.g_double_prime = -tau * tau / (1.0 / (l * l) + prior.rho_double_prime(l));
  return pt;
}

double g_tau(double beta_abs, double tau, const HyperPrior& prior) {
  return solve_lambda_star(beta_abs, tau, prior).g_value;
}

double lambda_at_origin(const HyperPrior& prior) {
  return solve_lambda_star(0.0, 1.0, prior).lambda_star;
}

double orthogonal_profile_cost(double lambda, double beta_hat, double s, double tau,
                               const HyperPrior& prior) {
  const double b = std::fabs(beta_hat);
  const double shrink = s * tau * lambda;
  const double fit = shrink < b ? tau * lambda * b - 0.5 * shrink * tau * lambda
                                : 0.5 * beta_hat * beta_hat / s;
  return fit - std::log(lambda) + prior.rho(lambda);
}

namespace {

OrthogonalSolution pick_best(const std::vector<double>& candidates, double beta_hat, double s,
                             double tau, const HyperPrior& prior) {
  double best_l = std::numeric_limits<double>::quiet_NaN();
  double best_c = std::numeric_limits<double>::infinity();
  for (double l : candidates) {
    if (!(l > 0.0) || !std::isfinite(l)) continue;
    const double c = orthogonal_profile_cost(l, beta_hat, s, tau, prior);
    if (c < best_c) {
      best_c = c;
      best_l = l;
    }
  }
  if (!std::isfinite(best_l)) throw NumericError("orthogonal solution: no finite candidate");
  const double mag = std::fabs(beta_hat) - s * tau * best_l;
  return {mag > 0.0 ? std::copysign(mag, beta_hat) : 0.0, best_l};
}

void check_orthogonal_args(double beta_hat, double sum_x_sq, double sigma_sq, double tau) {
  require(std::isfinite(beta_hat), "orthogonal solution: beta_hat must be finite");
  require(std::isfinite(sum_x_sq) && sum_x_sq > 0.0, "orthogonal solution: sum_x_sq must be positive");
  require(std::isfinite(sigma_sq) && sigma_sq > 0.0, "orthogonal solution: sigma_sq must be positive");
  require(std::isfinite(tau) && tau > 0.0, "orthogonal solution: tau must be positive");
}

}  // namespace

OrthogonalSolution orthogonal_halfgaussian_solution(double beta_hat, double sum_x_sq, double sigma_sq,
                                                    double tau, double m_lambda, double b_lambda) {
  check_orthogonal_args(beta_hat, sum_x_sq, sigma_sq, tau);
  const HyperPrior prior = HyperPrior::half_gaussian(m_lambda, b_lambda);
  const double s = sigma_sq / sum_x_sq;
  const double b = std::fabs(beta_hat);
  const double knot = b / (s * tau);
  const double b2 = b_lambda * b_lambda;

  std::vector<double> cand;
  const double upper = 0.5 * (m_lambda + std::sqrt(m_lambda * m_lambda + 2.0 * b2));
  if (upper >= knot) cand.push_back(upper);

  // Lower region stationarity: A l^2 + B l - 1 = 0.
  const double A = 2.0 / b2 - s * tau * tau;
  const double B = tau * b - 2.0 * m_lambda / b2;
  auto in_lower = [&](double l) {
    if (l > 0.0 && l < knot) cand.push_back(l);
  };
  if (std::fabs(A) < 1e-14 * (std::fabs(B) + 1.0)) {
    if (B > 0.0) in_lower(1.0 / B);
  } else {
    const double disc = B * B + 4.0 * A;
    if (disc >= 0.0) {
      const double r = std::sqrt(disc);
      in_lower((-B + r) / (2.0 * A));
      in_lower((-B - r) / (2.0 * A));
    }
  }
  if (knot > 0.0) cand.push_back(knot);
  return pick_best(cand, beta_hat, s, tau, prior);
}

OrthogonalSolution orthogonal_halfcauchy_solution(double beta_hat, double sum_x_sq, double sigma_sq,
                                                  double tau, double a_lambda) {
  check_orthogonal_args(beta_hat, sum_x_sq, sigma_sq, tau);
  const HyperPrior prior = HyperPrior::half_cauchy(a_lambda);
  const double s = sigma_sq / sum_x_sq;
  const double b = std::fabs(beta_hat);
  const double knot = b / (s * tau);

  std::vector<double> cand;
  // Upper region: -1/l + rho'(l) vanishes at l = a.
  if (a_lambda >= knot) cand.push_back(a_lambda);
  if (knot > 0.0) {
    cand.push_back(knot);
    // Lower region stationarity has at most four roots (a quartic after
    // clearing denominators); scan for sign changes and bisect each.
    auto d = [&](double l) {
      return tau * b - s * tau * tau * l - 1.0 / l + prior.rho_prime(l);
    };
    constexpr int kScan = 4000;
    std::vector<double> grid;
    grid.reserve(2 * kScan);
    const double lo = knot * 1e-9;
    for (int k = 0; k < kScan; ++k) grid.push_back(lo * std::pow(1e9, double(k) / kScan));
    for (int k = 0; k <= kScan; ++k) grid.push_back(knot * double(k) / kScan);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::remove_if(grid.begin(), grid.end(), [](double l) { return !(l > 0.0); }),
               grid.end());
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      double l0 = grid[k], l1 = grid[k + 1];
      double f0 = d(l0), f1 = d(l1);
      if (f0 == 0.0) cand.push_back(l0);
      if ((f0 < 0.0) == (f1 < 0.0)) continue;
      for (int it = 0; it < 200 && l1 - l0 > 1e-15 * l1; ++it) {
        const double mid = 0.5 * (l0 + l1);
        const double fm = d(mid);
        if ((fm < 0.0) == (f0 < 0.0)) {
          l0 = mid;
          f0 = fm;
        } else {
          l1 = mid;
        }
      }
      cand.push_back(0.5 * (l0 + l1));
    }
  }
  return pick_best(cand, beta_hat, s, tau, prior);
}

}  // namespace sblasso
