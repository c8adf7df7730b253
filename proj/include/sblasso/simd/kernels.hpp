#pragma once

// Data-parallel inner loops shared by the optimizers. Every kernel has a
// scalar reference version plus vector variants; the dispatching entry points
// at the bottom pick the widest backend the CPU supports at runtime.
//
// Elementwise kernels (soft_threshold, prox_vc_l1) are bitwise identical
// across backends. Reductions differ only in summation order.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace sblasso::simd {

enum class Backend { scalar, avx2, neon };

using In = std::span<const double>;
using Out = std::span<double>;

// Per-backend kernel table. Inputs are assumed validated (equal lengths,
// positive steps, non-negative thresholds).
struct KernelTable {
  void (*soft_threshold)(In x, In threshold, Out out);
  // tie may be empty; otherwise one flag per coordinate.
  void (*prox_vc_l1)(In x0, In lambda0, In s_x, In s_lambda, Out x_out, Out lambda_out,
                     std::span<std::uint8_t> tie);
  double (*weighted_l1)(In weight, In x);              // sum w_i |x_i|
  double (*dot)(In a, In b);                           // sum a_i b_i
  double (*weighted_sq_norm)(In d, In weight);         // sum w_i d_i^2
};

namespace scalar {
const KernelTable& table();
}
namespace avx2 {
// Null when the library was built without AVX2 support.
const KernelTable* table();
}
namespace neon {
const KernelTable* table();
}

bool backend_available(Backend b);
Backend detected_backend();
Backend active_backend();
// Throws DomainError if the backend is not available on this machine.
void set_backend(Backend b);
std::string_view backend_name(Backend b);
const KernelTable& kernels_for(Backend b);
const KernelTable& kernels();

inline void soft_threshold(In x, In threshold, Out out) {
  kernels().soft_threshold(x, threshold, out);
}
inline void prox_vc_l1(In x0, In lambda0, In s_x, In s_lambda, Out x_out, Out lambda_out,
                       std::span<std::uint8_t> tie = {}) {
  kernels().prox_vc_l1(x0, lambda0, s_x, s_lambda, x_out, lambda_out, tie);
}
inline double weighted_l1(In weight, In x) { return kernels().weighted_l1(weight, x); }
inline double dot(In a, In b) { return kernels().dot(a, b); }
inline double weighted_sq_norm(In d, In weight) { return kernels().weighted_sq_norm(d, weight); }

}  // namespace sblasso::simd
