#include "sblasso/simd/kernels.hpp"

#if defined(SBLASSO_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>

namespace sblasso::simd::avx2 {
namespace {

constexpr std::size_t kWidth = 4;

inline __m256d abs_pd(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

// magnitude > 0 ? copysign(magnitude, sign_source) : +0
inline __m256d signed_magnitude(__m256d magnitude, __m256d sign_source) {
  const __m256d sign_bit = _mm256_and_pd(sign_source, _mm256_set1_pd(-0.0));
  const __m256d positive = _mm256_cmp_pd(magnitude, _mm256_setzero_pd(), _CMP_GT_OQ);
  return _mm256_and_pd(_mm256_or_pd(magnitude, sign_bit), positive);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void soft_threshold(In x, In threshold, Out out) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d xv = _mm256_loadu_pd(x.data() + i);
    const __m256d tv = _mm256_loadu_pd(threshold.data() + i);
    const __m256d m = _mm256_sub_pd(abs_pd(xv), tv);
    _mm256_storeu_pd(out.data() + i, signed_magnitude(m, xv));
  }
  if (i < n) {
    scalar::table().soft_threshold(x.subspan(i), threshold.subspan(i), out.subspan(i));
  }
}

void prox_vc_l1(In x0, In lambda0, In s_x, In s_lambda, Out x_out, Out lambda_out,
                std::span<std::uint8_t> tie) {
  const std::size_t n = x0.size();
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d xv = _mm256_loadu_pd(x0.data() + i);
    const __m256d ax = abs_pd(xv);
    const __m256d l0 = _mm256_loadu_pd(lambda0.data() + i);
    const __m256d sx = _mm256_loadu_pd(s_x.data() + i);
    const __m256d sl = _mm256_loadu_pd(s_lambda.data() + i);
    const __m256d prod = _mm256_mul_pd(sx, sl);

    // Convex regime.
    const __m256d keep_convex = _mm256_cmp_pd(l0, _mm256_div_pd(ax, sx), _CMP_GE_OQ);
    const __m256d num = _mm256_max_pd(_mm256_sub_pd(l0, _mm256_mul_pd(sl, ax)), zero);
    const __m256d shrunk = _mm256_div_pd(num, _mm256_sub_pd(one, prod));
    const __m256d lam_convex = _mm256_blendv_pd(shrunk, l0, keep_convex);

    // Nonconvex regime: lambda0 or 0, lambda0 on ties.
    const __m256d keep = _mm256_div_pd(l0, _mm256_sqrt_pd(sl));
    const __m256d drop = _mm256_div_pd(ax, _mm256_sqrt_pd(sx));
    const __m256d drop_lambda = _mm256_cmp_pd(keep, drop, _CMP_LT_OQ);
    const __m256d lam_nonconvex = _mm256_andnot_pd(drop_lambda, l0);
    const __m256d is_tie = _mm256_cmp_pd(keep, drop, _CMP_EQ_OQ);

    const __m256d convex = _mm256_cmp_pd(prod, one, _CMP_LT_OQ);
    const __m256d lam = _mm256_blendv_pd(lam_nonconvex, lam_convex, convex);
    const __m256d m = _mm256_sub_pd(ax, _mm256_mul_pd(sx, lam));

    _mm256_storeu_pd(lambda_out.data() + i, lam);
    _mm256_storeu_pd(x_out.data() + i, signed_magnitude(m, xv));
    if (!tie.empty()) {
      const int bits = _mm256_movemask_pd(_mm256_andnot_pd(convex, is_tie));
      for (std::size_t k = 0; k < kWidth; ++k) tie[i + k] = (bits >> k) & 1;
    }
  }
  if (i < n) {
    scalar::table().prox_vc_l1(x0.subspan(i), lambda0.subspan(i), s_x.subspan(i),
                               s_lambda.subspan(i), x_out.subspan(i), lambda_out.subspan(i),
                               tie.empty() ? tie : tie.subspan(i));
  }
}

double weighted_l1(In w, In x) {
  const std::size_t n = x.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d t = _mm256_mul_pd(_mm256_loadu_pd(w.data() + i),
                                    abs_pd(_mm256_loadu_pd(x.data() + i)));
    acc = _mm256_add_pd(acc, t);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * std::fabs(x[i]);
  return s;
}

double dot(In a, In b) {
  const std::size_t n = a.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a.data() + i),
                                           _mm256_loadu_pd(b.data() + i)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_sq_norm(In d, In w) {
  const std::size_t n = d.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d dv = _mm256_loadu_pd(d.data() + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(w.data() + i), _mm256_mul_pd(dv, dv)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * (d[i] * d[i]);
  return s;
}

}  // namespace

const KernelTable* table() {
  static const KernelTable t{soft_threshold, prox_vc_l1, weighted_l1, dot, weighted_sq_norm};
  return &t;
}

}  // namespace sblasso::simd::avx2

#else

namespace sblasso::simd::avx2 {
const KernelTable* table() { return nullptr; }
}  // namespace sblasso::simd::avx2

#endif
