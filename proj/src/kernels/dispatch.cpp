#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "ugs/kernels/kernels.hpp"

namespace ugs::kernels {

#if defined(UGS_HAVE_AVX2)
const Kernels* avx2_table();
#endif

bool avx2_supported() {
#if defined(UGS_HAVE_AVX2)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const Kernels* avx2() {
#if defined(UGS_HAVE_AVX2)
  if (avx2_supported()) return avx2_table();
#endif
  return nullptr;
}

namespace {

struct Dispatch {
  std::atomic<const Kernels*> table;
  std::atomic<Backend> backend;

  Dispatch() {
    Backend want = Backend::kAuto;
    if (const char* env = std::getenv("UGS_KERNELS")) {
      if (std::strcmp(env, "scalar") == 0) want = Backend::kScalar;
      if (std::strcmp(env, "avx2") == 0) want = Backend::kAvx2;
    }
    select(want);
  }

  void select(Backend b) {
    if (b == Backend::kAuto) b = avx2() ? Backend::kAvx2 : Backend::kScalar;
    if (b == Backend::kAvx2) {
      const Kernels* k = avx2();
      if (!k) throw std::runtime_error("AVX2 kernels unavailable on this CPU");
      table.store(k);
    } else {
      table.store(&scalar());
    }
    backend.store(b);
  }
};

Dispatch& dispatch() {
  static Dispatch d;
  return d;
}

}  // namespace

const Kernels& active() { return *dispatch().table.load(); }

Backend active_backend() { return dispatch().backend.load(); }

void force(Backend b) { dispatch().select(b); }

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    default:
      return "auto";
  }
}

}  // namespace ugs::kernels
