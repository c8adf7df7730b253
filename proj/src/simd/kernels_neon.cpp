#include "sblasso/simd/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

#include <cmath>

namespace sblasso::simd::neon {
namespace {

constexpr std::size_t kWidth = 2;

inline float64x2_t signed_magnitude(float64x2_t magnitude, float64x2_t sign_source) {
  const uint64x2_t sign_bit =
      vandq_u64(vreinterpretq_u64_f64(sign_source), vdupq_n_u64(0x8000000000000000ULL));
  const uint64x2_t positive = vcgtq_f64(magnitude, vdupq_n_f64(0.0));
  const uint64x2_t v = vorrq_u64(vreinterpretq_u64_f64(magnitude), sign_bit);
  return vreinterpretq_f64_u64(vandq_u64(v, positive));
}

void soft_threshold(In x, In threshold, Out out) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const float64x2_t xv = vld1q_f64(x.data() + i);
    const float64x2_t m = vsubq_f64(vabsq_f64(xv), vld1q_f64(threshold.data() + i));
    vst1q_f64(out.data() + i, signed_magnitude(m, xv));
  }
  if (i < n) {
    scalar::table().soft_threshold(x.subspan(i), threshold.subspan(i), out.subspan(i));
  }
}

void prox_vc_l1(In x0, In lambda0, In s_x, In s_lambda, Out x_out, Out lambda_out,
                std::span<std::uint8_t> tie) {
  const std::size_t n = x0.size();
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t one = vdupq_n_f64(1.0);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const float64x2_t xv = vld1q_f64(x0.data() + i);
    const float64x2_t ax = vabsq_f64(xv);
    const float64x2_t l0 = vld1q_f64(lambda0.data() + i);
    const float64x2_t sx = vld1q_f64(s_x.data() + i);
    const float64x2_t sl = vld1q_f64(s_lambda.data() + i);
    const float64x2_t prod = vmulq_f64(sx, sl);

    const uint64x2_t keep_convex = vcgeq_f64(l0, vdivq_f64(ax, sx));
    const float64x2_t num = vmaxq_f64(vsubq_f64(l0, vmulq_f64(sl, ax)), zero);
    const float64x2_t shrunk = vdivq_f64(num, vsubq_f64(one, prod));
    const float64x2_t lam_convex = vbslq_f64(keep_convex, l0, shrunk);

    const float64x2_t keep = vdivq_f64(l0, vsqrtq_f64(sl));
    const float64x2_t drop = vdivq_f64(ax, vsqrtq_f64(sx));
    const uint64x2_t drop_lambda = vcltq_f64(keep, drop);
    const float64x2_t lam_nonconvex = vbslq_f64(drop_lambda, zero, l0);
    const uint64x2_t is_tie = vceqq_f64(keep, drop);

    const uint64x2_t convex = vcltq_f64(prod, one);
    const float64x2_t lam = vbslq_f64(convex, lam_convex, lam_nonconvex);
    const float64x2_t m = vsubq_f64(ax, vmulq_f64(sx, lam));

    vst1q_f64(lambda_out.data() + i, lam);
    vst1q_f64(x_out.data() + i, signed_magnitude(m, xv));
    if (!tie.empty()) {
      const uint64x2_t t = vbicq_u64(is_tie, convex);
      tie[i] = vgetq_lane_u64(t, 0) ? 1 : 0;
      tie[i + 1] = vgetq_lane_u64(t, 1) ? 1 : 0;
    }
  }
  if (i < n) {
    scalar::table().prox_vc_l1(x0.subspan(i), lambda0.subspan(i), s_x.subspan(i),
                               s_lambda.subspan(i), x_out.subspan(i), lambda_out.subspan(i),
                               tie.empty() ? tie : tie.subspan(i));
  }
}

double weighted_l1(In w, In x) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + kWidth <= x.size(); i += kWidth) {
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(w.data() + i), vabsq_f64(vld1q_f64(x.data() + i))));
  }
  double s = vaddvq_f64(acc);
  for (; i < x.size(); ++i) s += w[i] * std::fabs(x[i]);
  return s;
}

double dot(In a, In b) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + kWidth <= a.size(); i += kWidth) {
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a.data() + i), vld1q_f64(b.data() + i)));
  }
  double s = vaddvq_f64(acc);
  for (; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double weighted_sq_norm(In d, In w) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + kWidth <= d.size(); i += kWidth) {
    const float64x2_t dv = vld1q_f64(d.data() + i);
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(w.data() + i), vmulq_f64(dv, dv)));
  }
  double s = vaddvq_f64(acc);
  for (; i < d.size(); ++i) s += w[i] * (d[i] * d[i]);
  return s;
}

}  // namespace

const KernelTable* table() {
  static const KernelTable t{soft_threshold, prox_vc_l1, weighted_l1, dot, weighted_sq_norm};
  return &t;
}

}  // namespace sblasso::simd::neon

#else

namespace sblasso::simd::neon {
const KernelTable* table() { return nullptr; }
}  // namespace sblasso::simd::neon

#endif
