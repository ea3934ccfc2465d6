#pragma once

#include <span>

#include "afil/numerics/tensor.hpp"

// Differentiable operations. Elementwise ops accept equal shapes or one
// operand with a single element (scalar broadcast). Every result is checked for
// finiteness; a NaN/Inf raises NumericError naming the op.
namespace afil::numerics {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, double s);
Tensor add(const Tensor& a, double s);

// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// x[B,in] * w[in,out] + bias[out], bias repeated over rows.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& bias);

Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// sum((a - b)^2) and its mean over elements.
Tensor squared_error(const Tensor& a, const Tensor& b);
Tensor mse(const Tensor& a, const Tensor& b);

// Joins along the last axis; leading dimensions must agree.
Tensor concat_last(std::span<const Tensor> parts);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return mul(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return mul(a, s); }

}  // namespace afil::numerics
