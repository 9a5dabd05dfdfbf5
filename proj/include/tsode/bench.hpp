#pragma once

// Accuracy/work sweeps over tolerance lists, reported as CSV.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tsode/errors.hpp"
#include "tsode/integrate.hpp"
#include "tsode/problems.hpp"

namespace tsode {

// Significant correct digits of `approx` against `ref` in the relative
// max norm. Components tiny relative to the reference vector are skipped:
// their relative error is dominated by cancellation noise, not by solver
// accuracy. Equal vectors (or error below 1e-300) count as the cap of 16.
inline double scd(std::span<const double> approx, std::span<const double> ref) {
  if (approx.size() != ref.size()) throw Error("scd: size mismatch");
  double refmax = 0.0;
  for (double r : ref) refmax = std::max(refmax, std::abs(r));
  double worst = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (std::abs(ref[i]) < 1e-12 * refmax) continue;
    worst = std::max(worst, std::abs(approx[i] - ref[i]) / std::abs(ref[i]));
  }
  return std::min(16.0, -std::log10(std::max(worst, 1e-300)));
}

struct RunReport {
  double tol = 0.0;
  int p = 0;
  double scd = 0.0;
  long long steps_accepted = 0;
  long long steps_failed = 0;
  double time_s = 0.0;   // integration only; list build time is reported separately
  bool ok = false;
  std::string error;
};

// One row per tolerance, always. A row whose run throws carries ok=false
// and the message; the sweep keeps going.
inline std::vector<RunReport> run_suite(const ProblemInstance& inst,
                                        std::span<const double> tols,
                                        double ref_tol = 3e-14) {
  SolveConfig ref_cfg;
  ref_cfg.atol = ref_cfg.rtol = ref_tol;
  ref_cfg.t_begin = inst.t_begin;
  ref_cfg.t_end = inst.t_end;
  Solution ref = solve(inst.cl, inst.ics, ref_cfg);

  std::vector<RunReport> rows;
  for (double tol : tols) {
    RunReport row;
    row.tol = tol;
    try {
      SolveConfig cfg;
      cfg.atol = cfg.rtol = tol;
      cfg.t_begin = inst.t_begin;
      cfg.t_end = inst.t_end;
      Solution sol = solve(inst.cl, inst.ics, cfg);
      row.p = sol.p;
      row.scd = scd(sol.final_state, ref.final_state);
      row.steps_accepted = sol.accepted;
      row.steps_failed = sol.failed;
      row.time_s = sol.integ_seconds;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

namespace detail {
inline std::string num17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

// CSV with CRLF row ends. A failed row keeps its tolerance and leaves the
// metric fields empty.
inline void write_csv(std::ostream& os, std::span<const RunReport> rows) {
  os << "tol,p,scd,steps_accepted,steps_failed,time_s\r\n";
  for (const RunReport& r : rows) {
    os << detail::num17(r.tol) << ',';
    if (r.ok) {
      os << r.p << ',' << detail::num17(r.scd) << ',' << r.steps_accepted << ','
         << r.steps_failed << ',' << detail::num17(r.time_s);
    } else {
      os << ",,,,";
    }
    os << "\r\n";
  }
}

}  // namespace tsode
