#include "shearlab/kernels/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace shearlab::kernels {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

bool available(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(SHEARLAB_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__)) && \
    (defined(__x86_64__) || defined(__i386__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!available(isa))
    throw std::runtime_error("kernel ISA not available: " + std::string(isa_name(isa)));
#if defined(SHEARLAB_HAVE_AVX2)
  if (isa == Isa::avx2) return detail::avx2_table;
#endif
  return detail::scalar_table;
}

const KernelTable& active() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* env = std::getenv("SHEARLAB_SIMD");
    if (env != nullptr && std::string(env) == "scalar") return detail::scalar_table;
    if (available(Isa::avx2)) return table(Isa::avx2);
    return detail::scalar_table;
  }();
  return chosen;
}

}  // namespace shearlab::kernels
