#pragma once

#include <cstddef>
#include <string_view>

// Dense double-precision inner loops. Each instruction set provides the same
// table; callers go through active() so the choice is made once at startup.
//
// Layout is row-major everywhere. Matrix kernels accumulate every output
// element in ascending k order and never mix rows, so a row's result does not
// depend on how many other rows share the call.
namespace afil::kernels {

enum class Isa { scalar, avx2 };

struct AdamCoeffs {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias_corr1;  // 1 - beta1^t
  double bias_corr2;  // 1 - beta2^t
};

struct KernelTable {
  Isa isa;
  const char* name;

  // c[m,n] (+)= a[m,k] * b[k,n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c, bool accumulate);
  // c[m,n] (+)= a[m,k] * b[n,k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c, bool accumulate);
  // c[m,n] (+)= a[k,m]^T * b[k,n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c, bool accumulate);

  double (*dot)(std::size_t n, const double* x, const double* y);

  void (*add)(std::size_t n, const double* x, const double* y, double* out);
  void (*sub)(std::size_t n, const double* x, const double* y, double* out);
  void (*mul)(std::size_t n, const double* x, const double* y, double* out);
  void (*scale)(std::size_t n, double s, const double* x, double* out);
  // y += a * x
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  // out = base + s * (toward - base)
  void (*lerp)(std::size_t n, const double* base, const double* toward, double s,
               double* out);
  // In-place bias-corrected Adam update.
  void (*adam)(std::size_t n, double* param, const double* grad, double* m, double* v,
               const AdamCoeffs& c);
};

const KernelTable& table(Isa isa);
bool available(Isa isa);
const KernelTable& active();

// Overrides the automatic choice (AVX2+FMA when the CPU has it, unless the
// AFIL_KERNELS environment variable says "scalar"). Throws ConfigError if the
// requested set is not available on this machine.
void select(Isa isa);

std::string_view to_string(Isa isa);

}  // namespace afil::kernels
