#pragma once

// Fixed-order, variable-stepsize Taylor integrator. Each step expands every
// state to order p at the current point (one kernel run), proposes a step
// from the last two coefficient magnitudes, shrinks on rejection without
// re-expanding, and advances by Horner evaluation at the accepted h.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsode/codelist.hpp"
#include "tsode/errors.hpp"
#include "tsode/kernel.hpp"
#include "tsode/series.hpp"

namespace tsode {

struct SolveConfig {
  double atol = 1e-10;
  double rtol = 1e-10;
  std::optional<int> order_override;
  double t_begin = 0.0;
  double t_end = 1.0;
  long long max_steps = 1000000;
  double safety = 0.8;
};

struct StepRecord {
  double t0 = 0.0;
  double h = 0.0;  // signed
  int p = 0;
  bool accepted = false;
  double err_est = 0.0;
};

struct Segment {
  double t0 = 0.0;
  double h = 0.0;  // signed; the segment covers t0 .. t0+h
  std::vector<std::vector<double>> coeffs;  // per state, orders 0..p
};

struct Solution {
  int p = 0;
  double t_begin = 0.0;
  double t_end = 0.0;
  std::vector<Segment> segments;
  std::vector<double> final_state;
  std::vector<StepRecord> records;
  long long accepted = 0;
  long long failed = 0;
  long long kernel_runs = 0;
  double integ_seconds = 0.0;

  // States at segment starts plus the final point.
  std::vector<std::pair<double, std::vector<double>>> mesh() const {
    std::vector<std::pair<double, std::vector<double>>> m;
    for (const Segment& s : segments) {
      std::vector<double> x;
      for (const auto& c : s.coeffs) x.push_back(c[0]);
      m.emplace_back(s.t0, std::move(x));
    }
    m.emplace_back(t_end, final_state);
    return m;
  }
};

// p = ceil(-0.5 ln(min(atol, rtol)) + 1), clamped to [4, 40].
inline int choose_order(double atol, double rtol) {
  if (!(atol > 0.0) || !(rtol > 0.0)) throw Error("tolerances must be positive");
  const double raw = std::ceil(-0.5 * std::log(std::min(atol, rtol)) + 1.0);
  return std::clamp(int(raw), 4, 40);
}

// Per-step error budget. The estimate below measures the last retained
// term, and an accepted step deposits roughly that much scaled error, so a
// mesh of N steps accumulates about N * budget tolerance units before any
// growth from the dynamics. Budget ~ 1/N for typical mesh sizes (hundreds
// of steps) keeps the whole-span total near the tolerance itself; the cost
// is mild, since step size only shrinks like budget^(1/p).
inline constexpr double kStepErrBudget = 0.001;

// Last-two-terms heuristic: with rho_q = max_i |c_{i,q}| / scale_i,
// h = safety * min_{q in {p-1, p}} (budget/rho_q)^(1/q). When both top
// orders vanish (polynomial solution) the previous step is doubled.
inline double propose_step(const std::vector<std::span<const double>>& coeffs,
                           std::span<const double> scale, int p, double safety, double h_prev) {
  double rho_lo = 0.0, rho_hi = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    rho_lo = std::max(rho_lo, std::fabs(coeffs[i][std::size_t(p - 1)]) / scale[i]);
    rho_hi = std::max(rho_hi, std::fabs(coeffs[i][std::size_t(p)]) / scale[i]);
  }
  double h = std::numeric_limits<double>::infinity();
  if (rho_lo > 0.0) h = std::min(h, std::pow(kStepErrBudget / rho_lo, 1.0 / double(p - 1)));
  if (rho_hi > 0.0) h = std::min(h, std::pow(kStepErrBudget / rho_hi, 1.0 / double(p)));
  if (!std::isfinite(h)) return 2.0 * h_prev;
  return safety * h;
}

inline double propose_step(const std::vector<TaylorCoeffs>& coeffs, std::span<const double> scale,
                           int p, double safety, double h_prev) {
  std::vector<std::span<const double>> spans;
  for (const TaylorCoeffs& tc : coeffs) spans.emplace_back(tc.c);
  return propose_step(spans, scale, p, safety, h_prev);
}

// Tail-term test: err_est = max_i |c_{i,p}| h^p / scale_i, accepted iff
// within the per-step budget.
inline std::pair<bool, double> step_accept(const std::vector<std::span<const double>>& coeffs,
                                           double h, std::span<const double> scale, int p) {
  const double hp = std::pow(std::fabs(h), double(p));
  double err = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    err = std::max(err, std::fabs(coeffs[i][std::size_t(p)]) * hp / scale[i]);
  return {err <= kStepErrBudget, err};
}

// Error-free transforms: hi + lo reproduces the exact sum / product.
struct SplitSum {
  double hi = 0.0;
  double lo = 0.0;
};

inline SplitSum two_sum(double a, double b) {
  const double s = a + b;
  const double bv = s - a;
  return {s, (a - (s - bv)) + (b - bv)};
}

inline SplitSum two_prod(double a, double b) {
  const double m = a * b;
  return {m, std::fma(a, b, -m)};
}

// Step increment sum_{k>=1} c[k] h^k as a head/tail pair: Horner with each
// operation's rounding error folded into a correction polynomial, so the
// pair carries the increment to roughly twice working precision.
inline SplitSum step_increment(std::span<const double> c, double h) {
  const int p = int(c.size()) - 1;
  if (p < 1) return {};
  double s = c[std::size_t(p)];
  double corr = 0.0;
  for (int k = p - 1; k >= 1; --k) {
    const SplitSum m = two_prod(s, h);
    const SplitSum a = two_sum(m.hi, c[std::size_t(k)]);
    s = a.hi;
    corr = corr * h + (m.lo + a.lo);
  }
  const SplitSum m = two_prod(s, h);
  return {m.hi, std::fma(corr, h, m.lo)};
}

inline Solution solve(const CodeList& cl, std::span<const double> ics, const SolveConfig& cfg) {
  if (int(ics.size()) != cl.n_state) throw Error("solve: initial-value count mismatch");
  for (double v : ics)
    if (!std::isfinite(v)) throw Error("solve: non-finite initial value");
  if (cfg.t_end == cfg.t_begin) throw Error("solve: empty time span");
  if (!(cfg.safety > 0.0) || cfg.safety >= 1.0) throw Error("solve: safety must be in (0,1)");
  const int p = cfg.order_override ? *cfg.order_override : choose_order(cfg.atol, cfg.rtol);
  if (p < 2 || p > 60) throw Error("solve: order must lie in [2, 60]");

  const double dir = cfg.t_end > cfg.t_begin ? 1.0 : -1.0;
  const auto started = std::chrono::steady_clock::now();

  Solution sol;
  sol.p = p;
  sol.t_begin = cfg.t_begin;
  sol.t_end = cfg.t_end;

  KernelWorkspace ws(cl, p);
  // The mesh state is carried as x + xlo with |xlo| below one ulp of x. Each
  // step expands the series at x and folds xlo back in through the increment,
  // so handoff rounding does not random-walk across the mesh.
  std::vector<double> x(ics.begin(), ics.end());
  std::vector<double> xlo(x.size(), 0.0);
  std::vector<double> scale(std::size_t(cl.n_state), 0.0);
  std::vector<std::span<const double>> rows(std::size_t(cl.n_state));
  double t = cfg.t_begin;
  double h_prev = std::fabs(cfg.t_end - cfg.t_begin);

  while (true) {
    if (sol.accepted + sol.failed >= cfg.max_steps)
      throw Error("solve: exceeded max_steps at t = " + std::to_string(t));
    ws.run(x, t);
    ++sol.kernel_runs;
    for (int i = 0; i < cl.n_state; ++i) {
      rows[std::size_t(i)] = ws.row(i + 1);
      scale[std::size_t(i)] = cfg.atol + cfg.rtol * std::fabs(x[std::size_t(i)]);
    }
    double h = propose_step(rows, scale, p, cfg.safety, h_prev);
    const double remaining = std::fabs(cfg.t_end - t);
    bool clipped = false;
    if (h >= remaining) {
      h = remaining;
      clipped = true;
    }
    auto [ok, err] = step_accept(rows, h, scale, p);
    while (!ok) {
      ++sol.failed;
      sol.records.push_back(StepRecord{t, dir * h, p, false, err});
      h *= std::min(0.5, 0.9 * std::pow(kStepErrBudget / err, 1.0 / double(p)));
      clipped = false;
      if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::fabs(t), 1.0))
        throw Error("solve: step size underflow at t = " + std::to_string(t));
      std::tie(ok, err) = step_accept(rows, h, scale, p);
    }
    ++sol.accepted;
    sol.records.push_back(StepRecord{t, dir * h, p, true, err});
    Segment seg;
    seg.t0 = t;
    seg.h = dir * h;
    for (int i = 0; i < cl.n_state; ++i)
      seg.coeffs.emplace_back(rows[std::size_t(i)].begin(), rows[std::size_t(i)].end());
    sol.segments.push_back(std::move(seg));
    for (int i = 0; i < cl.n_state; ++i) {
      const std::size_t ii = std::size_t(i);
      const SplitSum inc = step_increment(rows[ii], dir * h);
      const SplitSum top = two_sum(x[ii], inc.hi);
      const SplitSum fin = two_sum(top.hi, (xlo[ii] + inc.lo) + top.lo);
      x[ii] = fin.hi;
      xlo[ii] = fin.lo;
    }
    t = clipped ? cfg.t_end : t + dir * h;
    h_prev = h;
    if (clipped) break;
  }

  sol.final_state = x;
  sol.integ_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return sol;
}

// States at any t inside the span, from the covering segment's series.
inline std::vector<double> dense_eval(const Solution& sol, double t) {
  const double dir = sol.t_end > sol.t_begin ? 1.0 : -1.0;
  if (dir * (t - sol.t_begin) < 0.0 || dir * (t - sol.t_end) > 0.0)
    throw Error("dense_eval: t outside the solved span");
  if (t == sol.t_end) return sol.final_state;
  // Last segment starting at or before t (in travel order).
  std::size_t lo = 0, hi = sol.segments.size();
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (dir * (sol.segments[mid].t0 - t) <= 0.0) lo = mid;
    else hi = mid;
  }
  const Segment& seg = sol.segments[lo];
  std::vector<double> out;
  for (const auto& c : seg.coeffs) out.push_back(horner(c, t - seg.t0));
  return out;
}

}  // namespace tsode
