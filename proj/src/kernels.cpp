#include <cstdlib>
#include <string>

#include "qsc/kernels.hpp"

namespace qsc::kernels {

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(QSC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      __builtin_cpu_init();
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
#if defined(QSC_HAVE_AVX2)
  if (isa == Isa::avx2 && isa_available(Isa::avx2)) return avx2_table();
#endif
  (void)isa;
  return scalar_table();
}

const KernelTable& active() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* env = std::getenv("QSC_KERNELS");
    if (env != nullptr && std::string(env) == "scalar") return scalar_table();
    return table(Isa::avx2);
  }();
  return chosen;
}

std::string_view isa_name(Isa isa) {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

}  // namespace qsc::kernels
