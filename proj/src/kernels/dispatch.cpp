#include <cstdlib>
#include <stdexcept>
#include <string>

#include "potflow/kernels.hpp"

namespace potflow::kernels {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(POTFLOW_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(POTFLOW_HAVE_NEON)
      return true;  // baseline on AArch64
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!available(isa))
    throw std::invalid_argument("kernel ISA not available: " + std::string(isa_name(isa)));
  switch (isa) {
#if defined(POTFLOW_HAVE_AVX2)
    case Isa::Avx2: return avx2_table();
#endif
#if defined(POTFLOW_HAVE_NEON)
    case Isa::Neon: return neon_table();
#endif
    default: return scalar_table();
  }
}

namespace {
Isa resolve() {
  if (const char* env = std::getenv("POTFLOW_ISA")) {
    const std::string s(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon})
      if (s == isa_name(isa) && available(isa)) return isa;
  }
  if (available(Isa::Avx2)) return Isa::Avx2;
  if (available(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}
}  // namespace

Isa active_isa() {
  static const Isa isa = resolve();
  return isa;
}

const KernelTable& active() {
  static const KernelTable& t = table(active_isa());
  return t;
}

}  // namespace potflow::kernels
