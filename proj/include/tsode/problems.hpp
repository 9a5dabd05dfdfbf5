#pragma once

// Benchmark problem definitions. Builders keep one emitting subexpression
// per statement: C++ leaves operand order of nested calls unspecified, and
// the traced line order must be reproducible.

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsode/codelist.hpp"
#include "tsode/errors.hpp"
#include "tsode/trace.hpp"

namespace tsode {

struct ProblemInstance {
  std::string name;
  CodeList cl;
  std::vector<double> ics;
  double t_begin = 0.0;
  double t_end = 0.0;
  std::map<std::string, double> params;
  std::vector<std::pair<std::string, std::function<double(std::span<const double>)>>> conserved;
  std::function<std::vector<double>(double)> exact;  // empty if no closed form
  double build_seconds = 0.0;
};

struct ProblemDef {
  std::string name;
  int n_state = 0;
  std::map<std::string, double> defaults;
  std::function<ProblemInstance(const std::map<std::string, double>&)> make;

  ProblemInstance instantiate(const std::map<std::string, double>& overrides = {}) const {
    std::map<std::string, double> p = defaults;
    for (const auto& [k, v] : overrides) {
      if (!p.count(k)) throw UnknownParameter("problem '" + name + "' has no parameter '" + k + "'");
      p[k] = v;
    }
    const auto started = std::chrono::steady_clock::now();
    ProblemInstance inst = make(p);
    inst.build_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    inst.name = name;
    inst.params = p;
    return inst;
  }
};

// Nonlinear spring pendulum in polar coordinates, states (r, s, th, w) with
// s = r', w = th':
//   r'  = s
//   s'  = r w^2 + g cos th - (k/m) ((r-a) + 1 - e^{-(r-a)})
//   th' = w
//   w'  = (-2 s w - g sin th) / r
// g stays a live parameter; k, m, a are folded at trace time. Rest length
// of the loaded spring r0 = a + m g / k provides the initial r.
inline ProblemDef problem_spring_pendulum() {
  ProblemDef def;
  def.name = "spring-pendulum";
  def.n_state = 4;
  def.defaults = {{"g", 9.81}, {"k", 40.0}, {"m", 1.0}, {"a", 1.0}};
  def.make = [](const std::map<std::string, double>& prm) {
    const double gv = prm.at("g"), kv = prm.at("k"), mv = prm.at("m"), av = prm.at("a");
    if (!(kv > 0.0) || !(mv > 0.0)) throw Error("spring-pendulum needs k > 0 and m > 0");
    ProblemInstance inst;
    inst.cl = trace(4, [&](Tracer& tr, const std::vector<Expr>& x, Expr) {
      Expr g = tr.param("g", gv);
      const double km = kv / mv;
      Expr r = x[0], s = x[1], th = x[2], w = x[3];
      Expr xm = r - av;
      Expr rw = r * w;
      Expr rww = rw * w;
      Expr gc = g * cos(th);
      Expr lift = rww + gc;
      Expr xm1 = xm + 1.0;
      Expr nxm = -xm;
      Expr ex = exp(nxm);
      Expr stretch = xm1 - ex;
      Expr pull = km * stretch;
      Expr ds = lift - pull;
      Expr ns2 = (-2.0) * s;
      Expr nsw = ns2 * w;
      Expr gs = g * sin(th);
      Expr num = nsw - gs;
      Expr dw = num / r;
      return std::vector<Expr>{s, ds, w, dw};
    });
    const double r0 = av + mv * gv / kv;
    inst.ics = {r0, 0.0, std::numbers::pi / 4.0, 4.65};
    inst.t_begin = 0.0;
    inst.t_end = 20.0;
    inst.conserved.emplace_back("energy", [gv, kv, mv, av](std::span<const double> q) {
      const double r = q[0], s = q[1], th = q[2], w = q[3];
      const double xm = r - av;
      const double vspring = 0.5 * xm * xm + std::exp(-xm) - 1.0 + xm;
      return 0.5 * mv * (s * s + (r * w) * (r * w)) + kv * vspring - mv * gv * r * std::cos(th);
    });
    return inst;
  };
  return def;
}

// Seven point masses under mutual attraction in the plane, first-order
// form (x_1..7, y_1..7, x'_1..7, y'_1..7), masses m_i = i, unit G:
//   p_i'' = sum_{j != i} m_j (p_j - p_i) / |p_j - p_i|^3
inline ProblemDef problem_pleiades() {
  ProblemDef def;
  def.name = "pleiades";
  def.n_state = 28;
  for (int i = 1; i <= 7; ++i) def.defaults["m" + std::to_string(i)] = double(i);
  def.make = [](const std::map<std::string, double>& prm) {
    std::vector<double> mass;
    for (int i = 1; i <= 7; ++i) mass.push_back(prm.at("m" + std::to_string(i)));
    ProblemInstance inst;
    inst.cl = trace(28, [&](Tracer& tr, const std::vector<Expr>& x, Expr) {
      std::vector<Expr> m;
      for (int i = 0; i < 7; ++i)
        m.push_back(tr.param("m" + std::to_string(i + 1), mass[std::size_t(i)]));
      std::vector<std::optional<Expr>> ax(7), ay(7);
      auto add_to = [](std::optional<Expr>& acc, Expr e) {
        acc = acc ? *acc + e : e;
      };
      auto sub_from = [](std::optional<Expr>& acc, Expr e) {
        acc = acc ? *acc - e : -e;
      };
      for (int i = 0; i < 7; ++i)
        for (int j = i + 1; j < 7; ++j) {
          Expr dx = x[std::size_t(j)] - x[std::size_t(i)];
          Expr dy = x[std::size_t(7 + j)] - x[std::size_t(7 + i)];
          Expr dx2 = dx * dx;
          Expr dy2 = dy * dy;
          Expr r2 = dx2 + dy2;
          Expr r = sqrt(r2);
          Expr r3 = r2 * r;
          Expr qx = dx / r3;
          Expr qy = dy / r3;
          Expr fxj = m[std::size_t(j)] * qx;
          Expr fyj = m[std::size_t(j)] * qy;
          add_to(ax[std::size_t(i)], fxj);
          add_to(ay[std::size_t(i)], fyj);
          Expr fxi = m[std::size_t(i)] * qx;
          Expr fyi = m[std::size_t(i)] * qy;
          sub_from(ax[std::size_t(j)], fxi);
          sub_from(ay[std::size_t(j)], fyi);
        }
      std::vector<Expr> out;
      for (int i = 0; i < 7; ++i) out.push_back(x[std::size_t(14 + i)]);
      for (int i = 0; i < 7; ++i) out.push_back(x[std::size_t(21 + i)]);
      for (int i = 0; i < 7; ++i) out.push_back(*ax[std::size_t(i)]);
      for (int i = 0; i < 7; ++i) out.push_back(*ay[std::size_t(i)]);
      return out;
    });
    inst.ics = {3.0,  3.0,  -1.0, -3.0,  2.0, -2.0, 2.0,   // x
                3.0,  -3.0, 2.0,  0.0,   0.0, -4.0, 4.0,   // y
                0.0,  0.0,  0.0,  0.0,   0.0, 1.75, -1.5,  // x'
                0.0,  0.0,  0.0,  -1.25, 1.0, 0.0,  0.0};  // y'
    inst.t_begin = 0.0;
    inst.t_end = 3.0;
    auto mcopy = mass;
    inst.conserved.emplace_back("momentum-x", [mcopy](std::span<const double> q) {
      double p = 0.0;
      for (int i = 0; i < 7; ++i) p += mcopy[std::size_t(i)] * q[std::size_t(14 + i)];
      return p;
    });
    inst.conserved.emplace_back("momentum-y", [mcopy](std::span<const double> q) {
      double p = 0.0;
      for (int i = 0; i < 7; ++i) p += mcopy[std::size_t(i)] * q[std::size_t(21 + i)];
      return p;
    });
    inst.conserved.emplace_back("angular-momentum", [mcopy](std::span<const double> q) {
      double L = 0.0;
      for (int i = 0; i < 7; ++i)
        L += mcopy[std::size_t(i)] * (q[std::size_t(i)] * q[std::size_t(21 + i)] -
                                      q[std::size_t(7 + i)] * q[std::size_t(14 + i)]);
      return L;
    });
    return inst;
  };
  return def;
}

// Reaction-diffusion chain on N interior grid points, states interleaved
// (u_1, v_1, ..., u_N, v_N):
//   u_i' = 1 + u_i^2 v_i - 4 u_i + c (u_{i-1} - 2 u_i + u_{i+1})
//   v_i' = 3 u_i - u_i^2 v_i + c (v_{i-1} - 2 v_i + v_{i+1})
// with c = (N+1)^2 / 50 and fixed ends u_0 = u_{N+1} = 1, v_0 = v_{N+1} = 3.
// Increasingly stiff with N; the structure changes with N, so N is a build
// argument rather than a parameter.
inline ProblemDef problem_brusselator(int N) {
  if (N < 2) throw Error("brusselator needs N >= 2");
  ProblemDef def;
  def.name = "brusselator";
  def.n_state = 2 * N;
  def.make = [N](const std::map<std::string, double>&) {
    const double c = double(N + 1) * double(N + 1) / 50.0;
    ProblemInstance inst;
    inst.cl = trace(2 * N, [&](Tracer& tr, const std::vector<Expr>& x, Expr) {
      auto u = [&](int i) { return x[std::size_t(2 * i)]; };      // 0-based i
      auto v = [&](int i) { return x[std::size_t(2 * i + 1)]; };
      std::vector<Expr> out(std::size_t(2 * N), Expr{});
      for (int i = 0; i < N; ++i) {
        Expr u2 = u(i) * u(i);
        Expr u2v = u2 * v(i);
        Expr ru = 1.0 + u2v;
        Expr fu = 4.0 * u(i);
        Expr ra = ru - fu;
        Expr tu = 2.0 * u(i);
        Expr lu = (i == 0 ? tr.constant(1.0) - tu : u(i - 1) - tu);
        Expr lu2 = (i == N - 1 ? lu + 1.0 : lu + u(i + 1));
        Expr cu = c * lu2;
        out[std::size_t(2 * i)] = ra + cu;
        Expr su = 3.0 * u(i);
        Expr rb = su - u2v;
        Expr tv = 2.0 * v(i);
        Expr lv = (i == 0 ? tr.constant(3.0) - tv : v(i - 1) - tv);
        Expr lv2 = (i == N - 1 ? lv + 3.0 : lv + v(i + 1));
        Expr cv = c * lv2;
        out[std::size_t(2 * i + 1)] = rb + cv;
      }
      return out;
    });
    for (int i = 1; i <= N; ++i) {
      inst.ics.push_back(1.0 + std::sin(2.0 * std::numbers::pi * double(i) / double(N + 1)));
      inst.ics.push_back(3.0);
    }
    inst.t_begin = 0.0;
    inst.t_end = 10.0;
    return inst;
  };
  return def;
}

// Single equation x' = e^{ -x }, closed form x(t) = log(e^{x0} + t - t0).
inline ProblemDef problem_expneg() {
  ProblemDef def;
  def.name = "expneg";
  def.n_state = 1;
  def.make = [](const std::map<std::string, double>&) {
    ProblemInstance inst;
    inst.cl = trace(1, [](Tracer&, const std::vector<Expr>& x, Expr) {
      return std::vector<Expr>{exp(-x[0])};
    });
    inst.ics = {0.0};
    inst.t_begin = 0.0;
    inst.t_end = 1.0;
    inst.exact = [](double t) { return std::vector<double>{std::log(1.0 + t)}; };
    return inst;
  };
  return def;
}

// Lookup used by the CLI and the bench suite. N applies to the problems
// that take a grid size.
inline ProblemDef problem_by_name(const std::string& name, int N = 20) {
  if (name == "spring-pendulum") return problem_spring_pendulum();
  if (name == "pleiades") return problem_pleiades();
  if (name == "brusselator") return problem_brusselator(N);
  if (name == "expneg") return problem_expneg();
  throw Error("unknown problem '" + name + "'");
}

}  // namespace tsode
