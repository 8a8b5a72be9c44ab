#include <cstdlib>
#include <string>

#include "belltime/errors.hpp"
#include "belltime/kernels.hpp"

namespace belltime::kernels {

std::string_view to_string(SimdLevel level) noexcept {
  switch (level) {
    case SimdLevel::kScalar:
      return "scalar";
    case SimdLevel::kAvx2:
      return "avx2";
  }
  return "unknown";
}

std::optional<SimdLevel> parse_simd_level(std::string_view name) noexcept {
  if (name == "scalar") return SimdLevel::kScalar;
  if (name == "avx2") return SimdLevel::kAvx2;
  return std::nullopt;
}

bool is_supported(SimdLevel level) noexcept {
  switch (level) {
    case SimdLevel::kScalar:
      return true;
    case SimdLevel::kAvx2:
#if defined(BELLTIME_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

SimdLevel detected_level() noexcept {
  return is_supported(SimdLevel::kAvx2) ? SimdLevel::kAvx2 : SimdLevel::kScalar;
}

SimdLevel active_level() {
  if (const char* env = std::getenv("BELLTIME_SIMD"); env != nullptr && *env != '\0') {
    const auto requested = parse_simd_level(env);
    if (!requested) {
      throw ValidationError(std::string("BELLTIME_SIMD: unknown level '") + env + "'");
    }
    if (!is_supported(*requested)) {
      throw UnsupportedOperationError(std::string("BELLTIME_SIMD: level '") + env +
                                      "' not supported on this machine");
    }
    return *requested;
  }
  return detected_level();
}

const KernelTable& kernels(SimdLevel level) {
  if (!is_supported(level)) {
    throw UnsupportedOperationError("SIMD level '" + std::string(to_string(level)) +
                                    "' not supported on this machine");
  }
#if defined(BELLTIME_HAVE_AVX2)
  if (level == SimdLevel::kAvx2) return detail::avx2_kernels();
#endif
  return detail::scalar_kernels();
}

}  // namespace belltime::kernels
