#include <doctest.h>

#include <cmath>
#include <vector>

#include "afil/core/rng.hpp"
#include "afil/kernels/kernels.hpp"

using namespace afil;
using kernels::Isa;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

bool close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("scalar kernels are always available and selectable") {
  CHECK(kernels::available(Isa::scalar));
  CHECK(kernels::table(Isa::scalar).isa == Isa::scalar);
}

TEST_CASE("SIMD kernels agree with the scalar reference") {
  if (!kernels::available(Isa::avx2)) {
    MESSAGE("AVX2 not available; equivalence test skipped");
    return;
  }
  const auto& ref = kernels::table(Isa::scalar);
  const auto& simd = kernels::table(Isa::avx2);
  Rng rng(7);

  // Tails in every dimension: sizes straddle the 4-wide lanes and the 4-row block.
  for (std::size_t m : {1u, 3u, 4u, 5u, 9u})
    for (std::size_t n : {1u, 2u, 4u, 7u, 16u, 19u})
      for (std::size_t k : {1u, 5u, 8u, 13u}) {
        auto a = random_vec(m * k, rng), b = random_vec(k * n, rng);
        auto bt = random_vec(n * k, rng), at = random_vec(k * m, rng);
        for (bool acc : {false, true}) {
          std::vector<double> c0 = random_vec(m * n, rng), c1 = c0;
          ref.gemm_nn(m, n, k, a.data(), b.data(), c0.data(), acc);
          simd.gemm_nn(m, n, k, a.data(), b.data(), c1.data(), acc);
          for (std::size_t i = 0; i < c0.size(); ++i) REQUIRE(close(c0[i], c1[i], 1e-12));

          c0 = random_vec(m * n, rng), c1 = c0;
          ref.gemm_nt(m, n, k, a.data(), bt.data(), c0.data(), acc);
          simd.gemm_nt(m, n, k, a.data(), bt.data(), c1.data(), acc);
          for (std::size_t i = 0; i < c0.size(); ++i) REQUIRE(close(c0[i], c1[i], 1e-12));

          c0 = random_vec(m * n, rng), c1 = c0;
          ref.gemm_tn(m, n, k, at.data(), b.data(), c0.data(), acc);
          simd.gemm_tn(m, n, k, at.data(), b.data(), c1.data(), acc);
          for (std::size_t i = 0; i < c0.size(); ++i) REQUIRE(close(c0[i], c1[i], 1e-12));
        }
      }

  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 31u, 64u, 257u}) {
    auto x = random_vec(n, rng), y = random_vec(n, rng);
    CHECK(close(ref.dot(n, x.data(), y.data()), simd.dot(n, x.data(), y.data()), 1e-12));

    // Elementwise kernels carry no fused ops: bitwise agreement.
    std::vector<double> o0(n), o1(n);
    ref.add(n, x.data(), y.data(), o0.data());
    simd.add(n, x.data(), y.data(), o1.data());
    CHECK(o0 == o1);
    ref.sub(n, x.data(), y.data(), o0.data());
    simd.sub(n, x.data(), y.data(), o1.data());
    CHECK(o0 == o1);
    ref.mul(n, x.data(), y.data(), o0.data());
    simd.mul(n, x.data(), y.data(), o1.data());
    CHECK(o0 == o1);
    ref.scale(n, -0.37, x.data(), o0.data());
    simd.scale(n, -0.37, x.data(), o1.data());
    CHECK(o0 == o1);
    ref.lerp(n, x.data(), y.data(), 2.5, o0.data());
    simd.lerp(n, x.data(), y.data(), 2.5, o1.data());
    CHECK(o0 == o1);
    std::vector<double> y0 = y, y1 = y;
    ref.axpy(n, 0.3, x.data(), y0.data());
    simd.axpy(n, 0.3, x.data(), y1.data());
    CHECK(y0 == y1);

    std::vector<double> p0 = x, p1 = x, m0(n, 0.1), m1 = m0, v0(n, 0.2), v1 = v0;
    const kernels::AdamCoeffs c{1e-3, 0.9, 0.999, 1e-8, 1.0 - 0.9 * 0.9, 1.0 - 0.999 * 0.999};
    ref.adam(n, p0.data(), y.data(), m0.data(), v0.data(), c);
    simd.adam(n, p1.data(), y.data(), m1.data(), v1.data(), c);
    CHECK(p0 == p1);
    CHECK(m0 == m1);
    CHECK(v0 == v1);
  }
}

TEST_CASE("gemm rows are independent of batch size") {
  for (Isa isa : {Isa::scalar, Isa::avx2}) {
    if (!kernels::available(isa)) continue;
    const auto& k = kernels::table(isa);
    Rng rng(3);
    const std::size_t m = 7, n = 10, kk = 11;
    auto a = random_vec(m * kk, rng), b = random_vec(kk * n, rng);
    std::vector<double> full(m * n);
    k.gemm_nn(m, n, kk, a.data(), b.data(), full.data(), false);
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<double> row(n);
      k.gemm_nn(1, n, kk, a.data() + i * kk, b.data(), row.data(), false);
      for (std::size_t j = 0; j < n; ++j) CHECK(row[j] == full[i * n + j]);
    }
  }
}

TEST_CASE("select switches the active table") {
  const Isa before = kernels::active().isa;
  kernels::select(Isa::scalar);
  CHECK(kernels::active().isa == Isa::scalar);
  kernels::select(before);
  CHECK(kernels::active().isa == before);
}
