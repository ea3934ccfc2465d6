#include "afil/numerics/ops.hpp"

#include <cmath>

#include "afil/core/error.hpp"
#include "afil/kernels/kernels.hpp"

namespace afil::numerics {
namespace {

using NodePtr = std::shared_ptr<detail::Node>;

const kernels::KernelTable& K() { return kernels::active(); }

void check_finite(const std::vector<double>& v, const char* op) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericError(std::string(op) + ": non-finite output");
}

// Builds the output node; records it on the tape when any input needs grad.
Tensor make_result(Shape shape, std::vector<double> value, std::initializer_list<Tensor> inputs,
                   std::function<void(detail::Node&)> grad_fn, const char* op) {
  check_finite(value, op);
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool needs = false;
  if (!NoGradGuard::active())
    for (const auto& t : inputs) needs = needs || t.requires_grad();
  if (needs) {
    node->requires_grad = true;
    node->leaf = false;
    for (const auto& t : inputs) node->parents.push_back(t.node());
    node->backward = std::move(grad_fn);
  }
  return Tensor(std::move(node));
}

void accumulate(detail::Node& target, const double* g) {
  if (!target.requires_grad) return;
  auto& dst = target.ensure_grad();
  K().axpy(dst.size(), 1.0, g, dst.data());
}

double sum_of(const std::vector<double>& g) {
  double s = 0.0;
  for (double x : g) s += x;
  return s;
}

enum class Bcast { none, left_scalar, right_scalar };

Bcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Bcast::none;
  if (a.numel() == 1) return Bcast::left_scalar;
  if (b.numel() == 1) return Bcast::right_scalar;
  throw ShapeError(std::string(op) + ": shape " + to_string(a.shape()) + " vs " + to_string(b.shape()));
}

template <class F>
std::vector<double> elementwise(const Tensor& a, const Tensor& b, Bcast bc, F f) {
  const auto av = a.data();
  const auto bv = b.data();
  const std::size_t n = bc == Bcast::left_scalar ? bv.size() : av.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = bc == Bcast::left_scalar ? av[0] : av[i];
    const double y = bc == Bcast::right_scalar ? bv[0] : bv[i];
    out[i] = f(x, y);
  }
  return out;
}

// Gradient flowing into an operand that may have been broadcast.
void push_grad(detail::Node& parent, const std::vector<double>& g, bool was_scalar) {
  if (!parent.requires_grad) return;
  if (was_scalar) {
    parent.ensure_grad()[0] += sum_of(g);
  } else {
    accumulate(parent, g.data());
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const Bcast bc = broadcast_kind(a, b, "add");
  std::vector<double> out;
  if (bc == Bcast::none) {
    out.resize(a.numel());
    K().add(out.size(), a.data().data(), b.data().data(), out.data());
  } else {
    out = elementwise(a, b, bc, [](double x, double y) { return x + y; });
  }
  Shape shape = bc == Bcast::left_scalar ? b.shape() : a.shape();
  return make_result(std::move(shape), std::move(out), {a, b}, [bc](detail::Node& self) {
    push_grad(*self.parents[0], self.grad, bc == Bcast::left_scalar);
    push_grad(*self.parents[1], self.grad, bc == Bcast::right_scalar);
  }, "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const Bcast bc = broadcast_kind(a, b, "sub");
  std::vector<double> out;
  if (bc == Bcast::none) {
    out.resize(a.numel());
    K().sub(out.size(), a.data().data(), b.data().data(), out.data());
  } else {
    out = elementwise(a, b, bc, [](double x, double y) { return x - y; });
  }
  Shape shape = bc == Bcast::left_scalar ? b.shape() : a.shape();
  return make_result(std::move(shape), std::move(out), {a, b}, [bc](detail::Node& self) {
    push_grad(*self.parents[0], self.grad, bc == Bcast::left_scalar);
    if (self.parents[1]->requires_grad) {
      std::vector<double> neg(self.grad.size());
      K().scale(neg.size(), -1.0, self.grad.data(), neg.data());
      push_grad(*self.parents[1], neg, bc == Bcast::right_scalar);
    }
  }, "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const Bcast bc = broadcast_kind(a, b, "mul");
  std::vector<double> out;
  if (bc == Bcast::none) {
    out.resize(a.numel());
    K().mul(out.size(), a.data().data(), b.data().data(), out.data());
  } else {
    out = elementwise(a, b, bc, [](double x, double y) { return x * y; });
  }
  Shape shape = bc == Bcast::left_scalar ? b.shape() : a.shape();
  return make_result(std::move(shape), std::move(out), {a, b}, [bc](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    const std::size_t n = self.grad.size();
    auto operand = [&](const detail::Node& p, std::size_t i, bool scalar) {
      return scalar ? p.value[0] : p.value[i];
    };
    if (pa.requires_grad) {
      std::vector<double> g(n);
      for (std::size_t i = 0; i < n; ++i)
        g[i] = self.grad[i] * operand(pb, i, bc == Bcast::right_scalar);
      push_grad(pa, g, bc == Bcast::left_scalar);
    }
    if (pb.requires_grad) {
      std::vector<double> g(n);
      for (std::size_t i = 0; i < n; ++i)
        g[i] = self.grad[i] * operand(pa, i, bc == Bcast::left_scalar);
      push_grad(pb, g, bc == Bcast::right_scalar);
    }
  }, "mul");
}

Tensor mul(const Tensor& a, double s) {
  std::vector<double> out(a.numel());
  K().scale(out.size(), s, a.data().data(), out.data());
  return make_result(a.shape(), std::move(out), {a}, [s](detail::Node& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    K().axpy(self.grad.size(), s, self.grad.data(), p.ensure_grad().data());
  }, "mul");
}

Tensor add(const Tensor& a, double s) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& x : out) x += s;
  return make_result(a.shape(), std::move(out), {a}, [](detail::Node& self) {
    accumulate(*self.parents[0], self.grad.data());
  }, "add");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul: shape " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  K().gemm_nn(m, n, k, a.data().data(), b.data().data(), out.data(), false);
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad)  // dA = dC * B^T
      K().gemm_nt(m, k, n, self.grad.data(), pb.value.data(), pa.ensure_grad().data(), true);
    if (pb.requires_grad)  // dB = A^T * dC
      K().gemm_tn(k, n, m, pa.value.data(), self.grad.data(), pb.ensure_grad().data(), true);
  }, "matmul");
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& bias) {
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0))
    throw ShapeError("affine: shape " + to_string(x.shape()) + " vs " + to_string(w.shape()));
  if (bias.numel() != w.dim(1))
    throw ShapeError("affine: bias shape " + to_string(bias.shape()) + " vs " + to_string(w.shape()));
  const std::size_t m = x.dim(0), k = x.dim(1), n = w.dim(1);
  std::vector<double> out(m * n);
  const double* bv = bias.data().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = bv[j];
  K().gemm_nn(m, n, k, x.data().data(), w.data().data(), out.data(), true);
  return make_result({m, n}, std::move(out), {x, w, bias}, [m, k, n](detail::Node& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    auto& pb = *self.parents[2];
    if (px.requires_grad)
      K().gemm_nt(m, k, n, self.grad.data(), pw.value.data(), px.ensure_grad().data(), true);
    if (pw.requires_grad)
      K().gemm_tn(k, n, m, px.value.data(), self.grad.data(), pw.ensure_grad().data(), true);
    if (pb.requires_grad) {
      auto& gb = pb.ensure_grad();
      for (std::size_t i = 0; i < m; ++i) K().axpy(n, 1.0, self.grad.data() + i * n, gb.data());
    }
  }, "affine");
}

Tensor tanh(const Tensor& x) {
  std::vector<double> out(x.numel());
  const auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(xv[i]);
  return make_result(x.shape(), std::move(out), {x}, [](detail::Node& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = self.value[i];
      g[i] += self.grad[i] * (1.0 - y * y);
    }
  }, "tanh");
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.numel());
  const auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  return make_result(x.shape(), std::move(out), {x}, [](detail::Node& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (p.value[i] > 0.0) g[i] += self.grad[i];
  }, "relu");
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_result({1}, {s}, {x}, [](detail::Node& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (auto& gi : g) gi += self.grad[0];
  }, "sum");
}

Tensor mean(const Tensor& x) {
  const double inv = 1.0 / static_cast<double>(x.numel());
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_result({1}, {s * inv}, {x}, [inv](detail::Node& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (auto& gi : g) gi += self.grad[0] * inv;
  }, "mean");
}

namespace {

Tensor squared_error_scaled(const Tensor& a, const Tensor& b, double factor, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  std::vector<double> diff(a.numel());
  K().sub(diff.size(), a.data().data(), b.data().data(), diff.data());
  double s = 0.0;
  for (double d : diff) s += d * d;
  return make_result({1}, {s * factor}, {a, b},
                     [diff = std::move(diff), factor](detail::Node& self) {
                       const double c = 2.0 * factor * self.grad[0];
                       auto& pa = *self.parents[0];
                       auto& pb = *self.parents[1];
                       if (pa.requires_grad) K().axpy(diff.size(), c, diff.data(), pa.ensure_grad().data());
                       if (pb.requires_grad) K().axpy(diff.size(), -c, diff.data(), pb.ensure_grad().data());
                     },
                     op);
}

}  // namespace

Tensor squared_error(const Tensor& a, const Tensor& b) {
  return squared_error_scaled(a, b, 1.0, "squared_error");
}

Tensor mse(const Tensor& a, const Tensor& b) {
  return squared_error_scaled(a, b, 1.0 / static_cast<double>(a.numel()), "mse");
}

Tensor concat_last(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_last: no inputs");
  const Shape& first = parts[0].shape();
  Shape lead(first.begin(), first.end() - 1);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size() || !std::equal(lead.begin(), lead.end(), s.begin()))
      throw ShapeError("concat_last: shape " + to_string(first) + " vs " + to_string(s));
    widths.push_back(s.back());
    total += s.back();
  }
  const std::size_t rows = shape_numel(lead.empty() ? Shape{1} : lead);
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const double* src = parts[p].data().data();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(src + r * widths[p], widths[p], out.data() + r * total + offset);
    offset += widths[p];
  }
  Shape shape = lead;
  shape.push_back(total);

  check_finite(out, "concat_last");
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(out);
  bool needs = false;
  if (!NoGradGuard::active())
    for (const auto& p : parts) needs = needs || p.requires_grad();
  if (needs) {
    node->requires_grad = true;
    node->leaf = false;
    for (const auto& p : parts) node->parents.push_back(p.node());
    node->backward = [widths, rows, total](detail::Node& self) {
      std::size_t off = 0;
      for (std::size_t p = 0; p < self.parents.size(); ++p) {
        auto& parent = *self.parents[p];
        if (parent.requires_grad) {
          auto& g = parent.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            K().axpy(widths[p], 1.0, self.grad.data() + r * total + off, g.data() + r * widths[p]);
        }
        off += widths[p];
      }
    };
  }
  return Tensor(std::move(node));
}

}  // namespace afil::numerics
