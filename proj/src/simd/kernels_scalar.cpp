#include "sblasso/simd/kernels.hpp"

#include <cmath>

namespace sblasso::simd::scalar {
namespace {

inline double signed_magnitude(double magnitude, double sign_source) {
  return magnitude > 0.0 ? std::copysign(magnitude, sign_source) : 0.0;
}

void soft_threshold(In x, In threshold, Out out) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = signed_magnitude(std::fabs(x[i]) - threshold[i], x[i]);
  }
}

void prox_vc_l1(In x0, In lambda0, In s_x, In s_lambda, Out x_out, Out lambda_out,
                std::span<std::uint8_t> tie) {
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double ax = std::fabs(x0[i]);
    const double l0 = lambda0[i];
    const double sx = s_x[i];
    const double sl = s_lambda[i];
    const double prod = sx * sl;
    double lam;
    bool is_tie = false;
    if (prod < 1.0) {
      if (l0 >= ax / sx) {
        lam = l0;
      } else {
        const double num = l0 - sl * ax;
        lam = (num > 0.0 ? num : 0.0) / (1.0 - prod);
      }
    } else {
      // Nonconvex marginal: compare the two branch optima.
      const double keep = l0 / std::sqrt(sl);
      const double drop = ax / std::sqrt(sx);
      if (keep > drop) {
        lam = l0;
      } else if (keep < drop) {
        lam = 0.0;
      } else {
        lam = l0;
        is_tie = true;
      }
    }
    lambda_out[i] = lam;
    x_out[i] = signed_magnitude(ax - sx * lam, x0[i]);
    if (!tie.empty()) tie[i] = is_tie ? 1 : 0;
  }
}

double weighted_l1(In w, In x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::fabs(x[i]);
  return s;
}

double dot(In a, In b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double weighted_sq_norm(In d, In w) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) s += w[i] * (d[i] * d[i]);
  return s;
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{soft_threshold, prox_vc_l1, weighted_l1, dot, weighted_sq_norm};
  return t;
}

}  // namespace sblasso::simd::scalar
