#include <cstdlib>
#include <string>

#include "pgu/simd/kernels.hpp"

namespace pgu::simd {
namespace {

bool cpu_has_avx2() {
#if defined(PGU_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() {
  if (const char* env = std::getenv("PGU_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return scalar_table();
    if (want == "avx2" && available(Isa::avx2)) return table(Isa::avx2);
    if (want == "neon" && available(Isa::neon)) return table(Isa::neon);
  }
  if (available(Isa::avx2)) return table(Isa::avx2);
  if (available(Isa::neon)) return table(Isa::neon);
  return scalar_table();
}

}  // namespace

bool available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2: {
      static const bool has = cpu_has_avx2();
      return has;
    }
    case Isa::neon:
#if defined(PGU_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
#if defined(PGU_HAVE_AVX2)
  if (isa == Isa::avx2 && available(isa)) return avx2_table();
#endif
#if defined(PGU_HAVE_NEON)
  if (isa == Isa::neon) return neon_table();
#endif
  (void)isa;
  return scalar_table();
}

const KernelTable& active() {
  static const KernelTable& chosen = select();
  return chosen;
}

std::string_view name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace pgu::simd
