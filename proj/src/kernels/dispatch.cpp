#include <atomic>
#include <cstdlib>
#include <string>

#include "afil/core/error.hpp"
#include "kernels_internal.hpp"

namespace afil::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(AFIL_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* default_table() {
  const char* env = std::getenv("AFIL_KERNELS");
  if (env != nullptr && std::string(env) == "scalar") return &detail::scalar_table();
  return &table(available(Isa::avx2) ? Isa::avx2 : Isa::scalar);
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> t{default_table()};
  return t;
}

}  // namespace

bool available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return cpu_has_avx2();
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!available(isa))
    throw ConfigError("kernel set '" + std::string(to_string(isa)) + "' unavailable on this CPU");
#if defined(AFIL_WITH_AVX2)
  if (isa == Isa::avx2) return detail::avx2_table();
#endif
  return detail::scalar_table();
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(Isa isa) { current().store(&table(isa), std::memory_order_release); }

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "?";
}

}  // namespace afil::kernels
