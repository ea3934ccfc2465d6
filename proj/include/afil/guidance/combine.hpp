#pragma once

#include <span>
#include <string>
#include <vector>

#include "afil/numerics/tensor.hpp"

// Score / velocity combiners. All of them are affine in their vector arguments
// with scalar coefficients; shapes must match exactly.
namespace afil::guidance {

using numerics::Tensor;

enum class GuidanceKind { none, cfg, np, static_fi, adaptive_fi };

std::string to_string(GuidanceKind kind);
GuidanceKind parse_kind(const std::string& text);

struct GuidanceSpec {
  GuidanceKind kind = GuidanceKind::none;
  double lambda = 0.0;     // cfg, np, static_fi
  double alpha = 0.0;      // adaptive_fi
  double cos_floor = 1e-8; // norms below this make the adaptive scale zero

  // Throws ConfigError when a parameter the kind reads is negative or
  // non-finite. Parameters the kind ignores are not inspected.
  void validate() const;
  bool needs_failure_head() const { return kind != GuidanceKind::none; }
  std::string describe() const;
};

// s_uc + lambda * (s_c - s_uc)
Tensor cfg_combine(const Tensor& s_uncond, const Tensor& s_cond, double lambda);

// s_uc + lambda * (s_neg - s_uc), sign as written for negative prompting.
Tensor np_combine(const Tensor& s_uncond, const Tensor& s_neg, double lambda);

// eps_succ - lambda * (eps_fail - eps_succ)
Tensor fi_combine_static(const Tensor& eps_succ, const Tensor& eps_fail, double lambda);

// Cosine of the two flattened vectors, or nothing when either norm is below
// cos_floor.
struct Cosine {
  bool defined = false;
  double value = 0.0;
};
Cosine cosine(std::span<const double> a, std::span<const double> b, double cos_floor);

// alpha * (1 - cos(eps_succ, eps_fail)) over the whole flattened chunk; 0 when
// a norm falls under cos_floor. Always within [0, 2 * alpha].
double adaptive_lambda(std::span<const double> eps_succ, std::span<const double> eps_fail,
                       double alpha, double cos_floor);
double adaptive_lambda(const Tensor& eps_succ, const Tensor& eps_fail, double alpha, double cos_floor);

// Static FI with the adaptive scale. Rank-1 inputs are one chunk; rank-2
// inputs are a batch and each row gets its own scale. The per-row scales
// (and cosines, NaN where undefined) are appended to the optional outputs.
Tensor fi_combine_adaptive(const Tensor& eps_succ, const Tensor& eps_fail, double alpha,
                           double cos_floor, std::vector<double>* lambdas = nullptr,
                           std::vector<double>* cosines = nullptr);

// Debug only: eps_succ - lambda_hat * eps_fail. Not equal to the form above for
// a shared scale; kept for side-by-side inspection, never used in evaluation.
Tensor fi_combine_hat(const Tensor& eps_succ, const Tensor& eps_fail, double lambda_hat);

}  // namespace afil::guidance
