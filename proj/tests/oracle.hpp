#pragma once

// Independent reference implementations used only by the tests:
//  - truncated polynomial arithmetic plus series composition through the
//    derivative sequence of each base function (long division instead of
//    gathered recurrences, Horner composition instead of sub-ODE sweeps)
//  - random domain-safe expression trees that can be evaluated both ways
//  - brute-force transversal enumeration and relaxation-based offsets
//  - finite-difference system Jacobians

#include <algorithm>
#include <cassert>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "tsode/tsode.hpp"

namespace orc {

// ---------------------------------------------------------------------------
// truncated polynomials, coefficients 0..p

using Poly = std::vector<double>;

inline Poly pzero(int p) { return Poly(std::size_t(p) + 1, 0.0); }

inline Poly pconst(double v, int p) {
  Poly r = pzero(p);
  r[0] = v;
  return r;
}

inline Poly padd(const Poly& a, const Poly& b) {
  Poly r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

inline Poly psub(const Poly& a, const Poly& b) {
  Poly r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

inline Poly pmul(const Poly& a, const Poly& b) {
  Poly r = pzero(int(a.size()) - 1);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; i + j < a.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

// Schoolbook long division: peel one quotient coefficient at a time and
// subtract its contribution from the remainder.
inline Poly pdiv(const Poly& a, const Poly& b) {
  assert(b[0] != 0.0);
  const std::size_t m = a.size();
  Poly rem = a, q = pzero(int(m) - 1);
  for (std::size_t k = 0; k < m; ++k) {
    q[k] = rem[k] / b[0];
    for (std::size_t j = k; j < m; ++j) rem[j] -= q[k] * b[j - k];
  }
  return q;
}

// ---------------------------------------------------------------------------
// scaled derivative sequences g_m = f^(m)(u0)/m! of the base functions

inline Poly gexp(double u0, int p) {
  Poly g = pzero(p);
  g[0] = std::exp(u0);
  for (int m = 1; m <= p; ++m) g[std::size_t(m)] = g[std::size_t(m) - 1] / double(m);
  return g;
}

inline Poly glog(double u0, int p) {
  Poly g = pzero(p);
  g[0] = std::log(u0);
  if (p >= 1) g[1] = 1.0 / u0;
  for (int m = 2; m <= p; ++m)
    g[std::size_t(m)] = -g[std::size_t(m) - 1] * double(m - 1) / (double(m) * u0);
  return g;
}

inline Poly gpowc(double u0, double c, int p) {
  Poly g = pzero(p);
  g[0] = std::pow(u0, c);
  for (int m = 1; m <= p; ++m)
    g[std::size_t(m)] = g[std::size_t(m) - 1] * (c - double(m - 1)) / (double(m) * u0);
  return g;
}

inline Poly gcos(double u0, int p) {
  Poly g = pzero(p);
  double fact = 1.0;
  for (int m = 0; m <= p; ++m) {
    if (m > 0) fact *= double(m);
    const double der[4] = {std::cos(u0), -std::sin(u0), -std::cos(u0), std::sin(u0)};
    g[std::size_t(m)] = der[m % 4] / fact;
  }
  return g;
}

inline Poly gsin(double u0, int p) {
  Poly g = pzero(p);
  double fact = 1.0;
  for (int m = 0; m <= p; ++m) {
    if (m > 0) fact *= double(m);
    const double der[4] = {std::sin(u0), std::cos(u0), -std::sin(u0), -std::cos(u0)};
    g[std::size_t(m)] = der[m % 4] / fact;
  }
  return g;
}

// Horner composition of the series g around u0 with the polynomial u.
inline Poly pcompose(const Poly& g, const Poly& u) {
  const int p = int(u.size()) - 1;
  Poly w = u;
  w[0] = 0.0;
  Poly acc = pconst(g[std::size_t(p)], p);
  for (int m = p - 1; m >= 0; --m) {
    acc = pmul(acc, w);
    acc[0] += g[std::size_t(m)];
  }
  return acc;
}

inline Poly fun_series(const std::string& fn, const Poly& u, double imm) {
  const int p = int(u.size()) - 1;
  if (fn == "exp") return pcompose(gexp(u[0], p), u);
  if (fn == "log") return pcompose(glog(u[0], p), u);
  if (fn == "sqrt") return pcompose(gpowc(u[0], 0.5, p), u);
  if (fn == "pow") return pcompose(gpowc(u[0], imm, p), u);
  if (fn == "cos") return pcompose(gcos(u[0], p), u);
  if (fn == "sin") return pcompose(gsin(u[0], p), u);
  if (fn == "tan") return pdiv(pcompose(gsin(u[0], p), u), pcompose(gcos(u[0], p), u));
  assert(false);
  return {};
}

// ---------------------------------------------------------------------------
// random expression trees, evaluable against polynomials and emittable
// through the tracer

struct Node;
using NP = std::shared_ptr<Node>;

struct Node {
  char k = 'c';  // s t c p + - * / F
  int i = 0;     // state index (1-based) or parameter index
  double c = 0.0;
  std::string fn;
  double imm = 0.0;
  NP a, b;
};

inline NP nst(int i) { return std::make_shared<Node>(Node{'s', i}); }
inline NP nt() { return std::make_shared<Node>(Node{'t'}); }
inline NP nc(double v) { return std::make_shared<Node>(Node{'c', 0, v}); }
inline NP npar(int i, double v) { return std::make_shared<Node>(Node{'p', i, v}); }
inline NP nbin(char k, NP a, NP b) {
  auto n = std::make_shared<Node>(Node{k});
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}
inline NP nfun(const std::string& fn, NP a, double imm = 0.0) {
  auto n = std::make_shared<Node>(Node{'F'});
  n->fn = fn;
  n->imm = imm;
  n->a = std::move(a);
  return n;
}

inline Poly eval(const NP& n, const std::vector<Poly>& xs, const Poly& tp, int p) {
  switch (n->k) {
    case 's': return xs[std::size_t(n->i - 1)];
    case 't': return tp;
    case 'c': return pconst(n->c, p);
    case 'p': return pconst(n->c, p);
    case '+': return padd(eval(n->a, xs, tp, p), eval(n->b, xs, tp, p));
    case '-': return psub(eval(n->a, xs, tp, p), eval(n->b, xs, tp, p));
    case '*': return pmul(eval(n->a, xs, tp, p), eval(n->b, xs, tp, p));
    case '/': return pdiv(eval(n->a, xs, tp, p), eval(n->b, xs, tp, p));
    case 'F': return fun_series(n->fn, eval(n->a, xs, tp, p), n->imm);
  }
  assert(false);
  return {};
}

inline tsode::Expr emit(const NP& n, tsode::Tracer& tr, const std::vector<tsode::Expr>& xs,
                        tsode::Expr t) {
  using tsode::Expr;
  switch (n->k) {
    case 's': return xs[std::size_t(n->i - 1)];
    case 't': return t;
    case 'c': return tr.constant(n->c);
    case 'p': return tr.param("q" + std::to_string(n->i), n->c);
    case '+': {
      Expr ea = emit(n->a, tr, xs, t);
      Expr eb = emit(n->b, tr, xs, t);
      return ea + eb;
    }
    case '-': {
      Expr ea = emit(n->a, tr, xs, t);
      Expr eb = emit(n->b, tr, xs, t);
      return ea - eb;
    }
    case '*': {
      Expr ea = emit(n->a, tr, xs, t);
      Expr eb = emit(n->b, tr, xs, t);
      return ea * eb;
    }
    case '/': {
      Expr ea = emit(n->a, tr, xs, t);
      Expr eb = emit(n->b, tr, xs, t);
      return ea / eb;
    }
    case 'F': {
      Expr ea = emit(n->a, tr, xs, t);
      if (n->fn == "exp") return exp(ea);
      if (n->fn == "log") return log(ea);
      if (n->fn == "sqrt") return sqrt(ea);
      if (n->fn == "pow") return pow(ea, n->imm);
      if (n->fn == "cos") return cos(ea);
      if (n->fn == "sin") return sin(ea);
      return tan(ea);
    }
  }
  assert(false);
  return tr.constant(0.0);
}

// w(e) = e / (1 + e^2/4), bounded to [-1, 1]; keeps every function argument
// inside its safe domain no matter what e does.
inline NP wrap(NP e) {
  return nbin('/', e, nbin('+', nc(1.0), nbin('*', nc(0.25), nbin('*', e, e))));
}

inline NP random_tree(std::mt19937& rng, int depth, int n_state, int& params_used) {
  auto ur = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto ui = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  if (depth <= 0) {
    const int pick = ui(0, 9);
    if (pick < 5) return nst(ui(1, n_state));
    if (pick < 7) return nt();
    if (pick == 7 && params_used < 3) {
      // A parameter only ever meets a non-constant operand; pairing it with
      // a state at birth keeps every enclosing subexpression non-constant.
      return nbin('*', npar(params_used++, ur(0.5, 2.0)), nst(ui(1, n_state)));
    }
    return nc(ur(-2.0, 2.0));
  }
  const int pick = ui(0, 9);
  if (pick < 2) return nbin('+', random_tree(rng, depth - 1, n_state, params_used),
                            random_tree(rng, depth - 1, n_state, params_used));
  if (pick < 4) return nbin('-', random_tree(rng, depth - 1, n_state, params_used),
                            random_tree(rng, depth - 1, n_state, params_used));
  if (pick < 6) return nbin('*', random_tree(rng, depth - 1, n_state, params_used),
                            random_tree(rng, depth - 1, n_state, params_used));
  if (pick == 6) {
    NP b = random_tree(rng, depth - 1, n_state, params_used);
    return nbin('/', random_tree(rng, depth - 1, n_state, params_used),
                nbin('+', nc(0.5), nbin('*', b, b)));
  }
  NP e = random_tree(rng, depth - 1, n_state, params_used);
  switch (ui(0, 6)) {
    case 0: return nfun("exp", nbin('*', nc(1.5), wrap(e)));
    case 1: return nfun("log", nbin('+', nc(1.5), wrap(e)));
    case 2: return nfun("sqrt", nbin('+', nc(1.5), wrap(e)));
    case 3: {
      static const double es[] = {-2.5, -2.0, -1.0, -0.5, 0.5, 1.5, 2.0, 3.0, 7.0};
      return nfun("pow", nbin('+', nc(1.5), wrap(e)), es[ui(0, 8)]);
    }
    case 4: return nfun("cos", nbin('*', nc(3.0), wrap(e)));
    case 5: return nfun("sin", nbin('*', nc(3.0), wrap(e)));
    default: return nfun("tan", wrap(e));
  }
}

struct RandomIvp {
  int n = 1;
  std::vector<NP> rhs;
  std::vector<double> ics;
  double t0 = 0.0;
};

inline RandomIvp random_ivp(std::mt19937& rng, int max_depth = 5) {
  auto ur = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto ui = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  RandomIvp ivp;
  ivp.n = ui(1, 4);
  int params_used = 0;
  for (int i = 0; i < ivp.n; ++i) {
    ivp.rhs.push_back(random_tree(rng, ui(1, max_depth), ivp.n, params_used));
    ivp.ics.push_back(ur(-2.0, 2.0));
  }
  ivp.t0 = ur(-1.0, 1.0);
  return ivp;
}

// Order-by-order state propagation: coefficient k of any operation depends
// only on input coefficients of order <= k, so one evaluation per order
// suffices.
inline std::vector<Poly> oracle_states(const RandomIvp& ivp, int p) {
  std::vector<Poly> xs;
  for (int i = 0; i < ivp.n; ++i) {
    Poly x = pzero(p);
    x[0] = ivp.ics[std::size_t(i)];
    xs.push_back(x);
  }
  Poly tp = pzero(p);
  tp[0] = ivp.t0;
  if (p >= 1) tp[1] = 1.0;
  for (int k = 0; k < p; ++k)
    for (int i = 0; i < ivp.n; ++i) {
      const Poly f = eval(ivp.rhs[std::size_t(i)], xs, tp, p);
      xs[std::size_t(i)][std::size_t(k) + 1] = f[std::size_t(k)] / double(k + 1);
    }
  return xs;
}

// ---------------------------------------------------------------------------
// brute-force transversals (n small)

struct BruteHvt {
  bool has = false;
  long long value = 0;
  std::vector<std::vector<int>> perms;  // every maximizing assignment
};

inline BruteHvt brute_hvt(const tsode::SigmaMatrix& s) {
  BruteHvt out;
  std::vector<int> perm(std::size_t(s.n));
  for (int j = 0; j < s.n; ++j) perm[std::size_t(j)] = j;
  std::sort(perm.begin(), perm.end());
  do {
    long long v = 0;
    bool ok = true;
    for (int i = 0; i < s.n && ok; ++i) {
      const int e = s.at(i, perm[std::size_t(i)]);
      if (!tsode::sigma_finite(e)) ok = false;
      else v += e;
    }
    if (!ok) continue;
    if (!out.has || v > out.value) {
      out.has = true;
      out.value = v;
      out.perms.assign(1, perm);
    } else if (v == out.value) {
      out.perms.push_back(perm);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

// Least fixed point of the offset constraints by plain relaxation against
// one fixed transversal.
inline tsode::Offsets brute_canonical(const tsode::SigmaMatrix& s, const std::vector<int>& hvt) {
  tsode::Offsets off;
  off.c.assign(std::size_t(s.n), 0);
  off.d.assign(std::size_t(s.n), 0);
  for (int round = 0; round < 100 * s.n * s.n + 100; ++round) {
    bool changed = false;
    for (int i = 0; i < s.n; ++i)
      for (int j = 0; j < s.n; ++j)
        if (tsode::sigma_finite(s.at(i, j)) &&
            off.d[std::size_t(j)] < off.c[std::size_t(i)] + s.at(i, j)) {
          off.d[std::size_t(j)] = off.c[std::size_t(i)] + s.at(i, j);
          changed = true;
        }
    for (int i = 0; i < s.n; ++i) {
      const int want = off.d[std::size_t(hvt[std::size_t(i)])] - s.at(i, hvt[std::size_t(i)]);
      if (off.c[std::size_t(i)] < want) {
        off.c[std::size_t(i)] = want;
        changed = true;
      }
    }
    if (!changed) return off;
  }
  assert(false && "offset relaxation did not settle");
  return off;
}

inline tsode::SigmaMatrix random_sigma(std::mt19937& rng, int nmax = 6) {
  auto ui = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  tsode::SigmaMatrix s(ui(1, nmax));
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j)
      if (ui(0, 99) < 65) s.at(i, j) = ui(0, 4);
  return s;
}

inline tsode::SigmaMatrix random_sigma_with_transversal(std::mt19937& rng, int nmax = 6) {
  for (;;) {
    tsode::SigmaMatrix s = random_sigma(rng, nmax);
    if (brute_hvt(s).has) return s;
  }
}

// ---------------------------------------------------------------------------
// finite-difference system Jacobian

inline tsode::DenseMatrix fd_jacobian(const tsode::DaeView& view, const tsode::Offsets& off,
                                      const tsode::KernelWorkspace& ws) {
  const int N = view.size();
  std::vector<double> x(static_cast<std::size_t>(N));
  std::vector<double> xd(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) {
    const int line = view.line_of_col(j);
    x[std::size_t(j)] = ws.coeff(line, 0);
    xd[std::size_t(j)] = ws.coeff(line, 1);
  }
  const double t = ws.t0();
  tsode::DenseMatrix J(N);
  for (int i = 0; i < N; ++i) {
    const double f0 = view.residual(i, x, xd, t);
    for (int j = 0; j < N; ++j) {
      const int q = off.d[std::size_t(j)] - off.c[std::size_t(i)];
      if (q != 0 && q != 1) continue;
      double* slot = q == 0 ? &x[std::size_t(j)] : &xd[std::size_t(j)];
      const double save = *slot;
      const double delta = 1e-7 * std::max(1.0, std::fabs(save));
      *slot = save + delta;
      const double f1 = view.residual(i, x, xd, t);
      *slot = save;
      J.at(i, j) = (f1 - f0) / delta;
    }
  }
  return J;
}

}  // namespace orc
