#include "sblasso/common.hpp"
#include "sblasso/simd/kernels.hpp"

#include <atomic>

namespace sblasso::simd {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

std::atomic<Backend>& active() {
  static std::atomic<Backend> b{detected_backend()};
  return b;
}

}  // namespace

bool backend_available(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
      return avx2::table() != nullptr && cpu_has_avx2();
    case Backend::neon:
      return neon::table() != nullptr;
  }
  return false;
}

Backend detected_backend() {
  if (backend_available(Backend::avx2)) return Backend::avx2;
  if (backend_available(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

Backend active_backend() { return active().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_available(b)) {
    throw DomainError("SIMD backend '" + std::string(backend_name(b)) +
                      "' is not available on this machine");
  }
  active().store(b, std::memory_order_relaxed);
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

const KernelTable& kernels_for(Backend b) {
  switch (b) {
    case Backend::avx2:
      if (backend_available(b)) return *avx2::table();
      break;
    case Backend::neon:
      if (backend_available(b)) return *neon::table();
      break;
    case Backend::scalar:
      break;
  }
  return scalar::table();
}

const KernelTable& kernels() { return kernels_for(active_backend()); }

}  // namespace sblasso::simd
