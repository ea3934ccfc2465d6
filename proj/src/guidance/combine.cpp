#include "afil/guidance/combine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "afil/core/error.hpp"
#include "afil/kernels/kernels.hpp"

namespace afil::guidance {

std::string to_string(GuidanceKind kind) {
  switch (kind) {
    case GuidanceKind::none:
      return "none";
    case GuidanceKind::cfg:
      return "cfg";
    case GuidanceKind::np:
      return "np";
    case GuidanceKind::static_fi:
      return "static_fi";
    case GuidanceKind::adaptive_fi:
      return "adaptive_fi";
  }
  return "?";
}

GuidanceKind parse_kind(const std::string& text) {
  for (auto k : {GuidanceKind::none, GuidanceKind::cfg, GuidanceKind::np, GuidanceKind::static_fi,
                 GuidanceKind::adaptive_fi})
    if (to_string(k) == text) return k;
  throw ConfigError("unknown guidance kind '" + text + "' (expected none|cfg|np|static_fi|adaptive_fi)");
}

void GuidanceSpec::validate() const {
  auto check = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0)
      throw ConfigError(std::string("guidance ") + name + " must be finite and non-negative");
  };
  switch (kind) {
    case GuidanceKind::none:
      break;
    case GuidanceKind::cfg:
    case GuidanceKind::np:
    case GuidanceKind::static_fi:
      check(lambda, "lambda");
      break;
    case GuidanceKind::adaptive_fi:
      check(alpha, "alpha");
      check(cos_floor, "cos_floor");
      break;
  }
}

std::string GuidanceSpec::describe() const {
  switch (kind) {
    case GuidanceKind::none:
      return "none";
    case GuidanceKind::adaptive_fi:
      return "adaptive_fi(alpha=" + std::to_string(alpha) + ")";
    default:
      return to_string(kind) + "(lambda=" + std::to_string(lambda) + ")";
  }
}

namespace {

void same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape " + numerics::to_string(a.shape()) + " vs " +
                     numerics::to_string(b.shape()));
}

Tensor copy_of(const Tensor& t) { return Tensor::from(t.shape(), {t.data().begin(), t.data().end()}); }

// Endpoints are returned exactly; a + 1 * (b - a) need not round to b.
Tensor lerp(const Tensor& base, const Tensor& toward, double s) {
  if (s == 0.0) return copy_of(base);
  if (s == 1.0) return copy_of(toward);
  std::vector<double> out(base.numel());
  kernels::active().lerp(out.size(), base.data().data(), toward.data().data(), s, out.data());
  return Tensor::from(base.shape(), std::move(out));
}

}  // namespace

Tensor cfg_combine(const Tensor& s_uncond, const Tensor& s_cond, double lambda) {
  same_shape(s_uncond, s_cond, "cfg_combine");
  return lerp(s_uncond, s_cond, lambda);
}

Tensor np_combine(const Tensor& s_uncond, const Tensor& s_neg, double lambda) {
  same_shape(s_uncond, s_neg, "np_combine");
  return lerp(s_uncond, s_neg, lambda);
}

Tensor fi_combine_static(const Tensor& eps_succ, const Tensor& eps_fail, double lambda) {
  same_shape(eps_succ, eps_fail, "fi_combine_static");
  // eps_s + (-lambda) * (eps_f - eps_s) is the same float expression as
  // eps_s - lambda * (eps_f - eps_s).
  return lerp(eps_succ, eps_fail, -lambda);
}

Cosine cosine(std::span<const double> a, std::span<const double> b, double cos_floor) {
  if (a.size() != b.size())
    throw ShapeError("cosine: length " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  const auto& k = kernels::active();
  const double na = std::sqrt(k.dot(a.size(), a.data(), a.data()));
  const double nb = std::sqrt(k.dot(b.size(), b.data(), b.data()));
  if (!(na >= cos_floor) || !(nb >= cos_floor) || na == 0.0 || nb == 0.0) return {};
  const double c = k.dot(a.size(), a.data(), b.data()) / (na * nb);
  return {true, std::clamp(c, -1.0, 1.0)};
}

double adaptive_lambda(std::span<const double> eps_succ, std::span<const double> eps_fail,
                       double alpha, double cos_floor) {
  const Cosine c = cosine(eps_succ, eps_fail, cos_floor);
  if (!c.defined) return 0.0;
  return alpha * (1.0 - c.value);
}

double adaptive_lambda(const Tensor& eps_succ, const Tensor& eps_fail, double alpha, double cos_floor) {
  same_shape(eps_succ, eps_fail, "adaptive_lambda");
  return adaptive_lambda(eps_succ.data(), eps_fail.data(), alpha, cos_floor);
}

Tensor fi_combine_adaptive(const Tensor& eps_succ, const Tensor& eps_fail, double alpha,
                           double cos_floor, std::vector<double>* lambdas,
                           std::vector<double>* cosines) {
  same_shape(eps_succ, eps_fail, "fi_combine_adaptive");
  const std::size_t rows = eps_succ.rank() == 2 ? eps_succ.dim(0) : 1;
  const std::size_t dim = eps_succ.numel() / rows;
  std::vector<double> out(eps_succ.data().begin(), eps_succ.data().end());
  const double* s = eps_succ.data().data();
  const double* f = eps_fail.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::span<const double> sr(s + r * dim, dim), fr(f + r * dim, dim);
    const Cosine c = cosine(sr, fr, cos_floor);
    const double lam = c.defined ? alpha * (1.0 - c.value) : 0.0;
    if (lambdas) lambdas->push_back(lam);
    if (cosines) cosines->push_back(c.defined ? c.value : std::numeric_limits<double>::quiet_NaN());
    if (lam != 0.0) kernels::active().lerp(dim, sr.data(), fr.data(), -lam, out.data() + r * dim);
  }
  return Tensor::from(eps_succ.shape(), std::move(out));
}

Tensor fi_combine_hat(const Tensor& eps_succ, const Tensor& eps_fail, double lambda_hat) {
  same_shape(eps_succ, eps_fail, "fi_combine_hat");
  std::vector<double> out(eps_succ.data().begin(), eps_succ.data().end());
  kernels::active().axpy(out.size(), -lambda_hat, eps_fail.data().data(), out.data());
  return Tensor::from(eps_succ.shape(), std::move(out));
}

}  // namespace afil::guidance
