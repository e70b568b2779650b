#include "aipw/kernels.hpp"

#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"

namespace aipw::kernels {

namespace {

bool cpu_has_avx2() noexcept {
#if defined(AIPW_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable kScalar{
    "scalar",           detail::sum_scalar,        detail::dot_scalar,    detail::dot3_scalar,
    detail::axpy_scalar, detail::aipw_terms_scalar, detail::divide_scalar,
};

#if defined(AIPW_HAVE_AVX2)
const KernelTable kAvx2{
    "avx2",           detail::sum_avx2,        detail::dot_avx2,    detail::dot3_avx2,
    detail::axpy_avx2, detail::aipw_terms_avx2, detail::divide_avx2,
};
#endif

const KernelTable& select() noexcept {
  const KernelTable* vector_table = avx2_table();
  if (const char* env = std::getenv("AIPW_KERNELS")) {
    const std::string_view want(env);
    if (want == "scalar") return kScalar;
    if (want == "avx2" && vector_table != nullptr) return *vector_table;
  }
  return vector_table != nullptr ? *vector_table : kScalar;
}

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

const KernelTable* avx2_table() noexcept {
#if defined(AIPW_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept {
  static const KernelTable& table = select();
  return table;
}

}  // namespace aipw::kernels
