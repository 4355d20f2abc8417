#include "dgp/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace dgp::kern {

// Defined in the backend translation units; null when the target
// architecture was not compiled in.
const Ops* avx2_table();
const Ops* neon_table();

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

bool cpu_has_neon() {
#if defined(__aarch64__)
  return true;  // advanced SIMD is mandatory on aarch64
#else
  return false;
#endif
}

std::atomic<const Ops*> g_active{nullptr};
std::atomic<Backend> g_selected{Backend::Auto};

Backend env_override() {
  const char* s = std::getenv("DGP_SIMD");
  if (!s || !*s) return Backend::Auto;
  if (std::strcmp(s, "scalar") == 0) return Backend::Scalar;
  if (std::strcmp(s, "avx2") == 0) return Backend::Avx2;
  if (std::strcmp(s, "neon") == 0) return Backend::Neon;
  return Backend::Auto;
}

void apply(Backend b) {
  const Ops* table = &scalar_ops();
  Backend chosen = Backend::Scalar;
  switch (b) {
    case Backend::Auto:
      if (backend_available(Backend::Avx2)) {
        table = avx2_table();
        chosen = Backend::Avx2;
      } else if (backend_available(Backend::Neon)) {
        table = neon_table();
        chosen = Backend::Neon;
      }
      break;
    case Backend::Avx2:
      if (backend_available(Backend::Avx2)) {
        table = avx2_table();
        chosen = Backend::Avx2;
      }
      break;
    case Backend::Neon:
      if (backend_available(Backend::Neon)) {
        table = neon_table();
        chosen = Backend::Neon;
      }
      break;
    case Backend::Scalar:
      break;
  }
  g_active.store(table, std::memory_order_release);
  g_selected.store(chosen, std::memory_order_release);
}

const Ops* ensure() {
  const Ops* t = g_active.load(std::memory_order_acquire);
  if (t) return t;
  apply(env_override());
  return g_active.load(std::memory_order_acquire);
}

}  // namespace

bool backend_available(Backend b) {
  switch (b) {
    case Backend::Scalar:
    case Backend::Auto:
      return true;
    case Backend::Avx2:
      return avx2_table() != nullptr && cpu_has_avx2();
    case Backend::Neon:
      return neon_table() != nullptr && cpu_has_neon();
  }
  return false;
}

void select_backend(Backend b) {
  if (b == Backend::Auto) {
    Backend env = env_override();
    apply(env);
  } else {
    apply(b);
  }
}

Backend selected_backend() {
  ensure();
  return g_selected.load(std::memory_order_acquire);
}

const Ops& ops() { return *ensure(); }

const char* backend_name() { return ensure()->name; }

}  // namespace dgp::kern
