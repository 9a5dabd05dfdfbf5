#pragma once

// Truncated power series arithmetic.
//
// A series is any indexable object with coefficients c[0..p], where c[k]
// is the scaled derivative u^{(k)}(t0)/k!. Each ts_* function computes a
// single output coefficient of order k, reading inputs only at the orders
// its recurrence needs; callers that interleave these per-order calls
// across many series (the code-list kernel) rely on exactly those bounds.

#include <cmath>
#include <concepts>
#include <span>
#include <vector>

#include "tsode/errors.hpp"

namespace tsode {

template <class S>
concept SeriesLike = requires(const S& s, int k) {
  { s[k] } -> std::convertible_to<double>;
};

// (u + v)_k = u_k + v_k
template <SeriesLike U, SeriesLike V>
inline double ts_add(const U& u, const V& v, int k) {
  return u[k] + v[k];
}

// (u - v)_k = u_k - v_k
template <SeriesLike U, SeriesLike V>
inline double ts_sub(const U& u, const V& v, int k) {
  return u[k] - v[k];
}

// (u * v)_k = sum_{r=0..k} u_r v_{k-r}
template <SeriesLike U, SeriesLike V>
inline double ts_mul(const U& u, const V& v, int k) {
  double acc = 0.0;
  for (int r = 0; r <= k; ++r) acc += u[r] * v[k - r];
  return acc;
}

// w = u / v:  w_k = (u_k - sum_{r=0..k-1} v_{k-r} w_r) / v_0.
// w supplies the quotient's own coefficients below order k.
template <SeriesLike U, SeriesLike V, SeriesLike W>
inline double ts_div(const U& u, const V& v, const W& w, int k) {
  const double v0 = v[0];
  if (v0 == 0.0) throw DivisionBySingularSeries("division by series with zero leading coefficient");
  double acc = u[k];
  for (int r = 0; r < k; ++r) acc -= v[k - r] * w[r];
  return acc / v0;
}

// v with v' = h(u, v) * u':  v_k = (1/k) sum_{i=1..k} i u_i h_{k-i}, k >= 1.
// h is the series of the composed right-hand side h(u(t), v(t)).
// The summation order and operand grouping are fixed so that results are
// reproducible bit-for-bit across call sites.
template <SeriesLike U, SeriesLike H>
inline double ts_subode(const U& u, const H& h, int k) {
  double acc = 0.0;
  for (int i = 1; i <= k; ++i) acc += (double(i) * u[i]) * h[k - i];
  return acc / double(k);
}

// Horner evaluation of sum_k c[k] h^k.
inline double horner(std::span<const double> c, double h) {
  double acc = 0.0;
  for (int k = int(c.size()) - 1; k >= 0; --k) acc = acc * h + c[k];
  return acc;
}

// One state's truncated Taylor expansion around t0.
struct TaylorCoeffs {
  double t0 = 0.0;
  std::vector<double> c;

  int order() const { return int(c.size()) - 1; }
  double eval_offset(double h) const { return horner(c, h); }
  double eval(double t) const { return eval_offset(t - t0); }
};

}  // namespace tsode
