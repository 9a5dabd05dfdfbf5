#pragma once

// Code-list kernel. Sweep k computes the order-k coefficient of every line
// in list order, for k = 0..p:
//   k = 0   ODE lines take the caller's initial values, ALG lines evaluate
//           their operation on leading coefficients, SUB lines take the
//           built-in initial values gamma(u_0)
//   k >= 1  ODE line i:  x_{i,k} = x_{r1,k-1} / k
//           ALG lines:   the per-order recurrences of series.hpp
//           SUB lines:   x_k = (1/k) sum i x_{u,i} h_{k-i}
// Every coefficient read goes through a guard that traps if the requested
// order has not been produced yet in the current run; the guard stays armed
// permanently, and violations bump a process-wide counter.

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "tsode/codelist.hpp"
#include "tsode/errors.hpp"
#include "tsode/funcs.hpp"
#include "tsode/series.hpp"

namespace tsode {

class KernelWorkspace {
 public:
  KernelWorkspace(const CodeList& cl, int p)
      : cl_(&cl),
        p_(p),
        width_(p + 1),
        data_(std::size_t(cl.size() + 1) * std::size_t(p + 1), 0.0),
        done_(std::size_t(cl.size() + 1), -1) {
    if (p < 1) throw Error("kernel order must be at least 1");
  }

  // Fills all coefficients for the given initial values and expansion point.
  void run(std::span<const double> ics, double t0) {
    const CodeList& cl = *cl_;
    if (int(ics.size()) != cl.n_state) throw Error("initial-value count mismatch");
    t0_ = t0;
    std::fill(done_.begin(), done_.end(), -1);
    // t expands as (t0, 1, 0, ...), available at every order from the start.
    double* trow = &data_[0];
    std::fill(trow, trow + width_, 0.0);
    trow[0] = t0;
    if (p_ >= 1) trow[1] = 1.0;
    done_[0] = p_;
    for (int k = 0; k <= p_; ++k) {
      for (int j = 1; j <= cl.size(); ++j) {
        const CLLine& l = cl.line(j);
        double v = 0.0;
        switch (l.kind) {
          case CLKind::ODE:
            v = (k == 0) ? ics[std::size_t(j - 1)] : read(l.r1, k - 1) / double(k);
            break;
          case CLKind::ALG:
            v = eval_alg(l, k);
            break;
          case CLKind::SUB:
            v = eval_sub(j, l, k);
            break;
        }
        data_[std::size_t(j) * std::size_t(width_) + std::size_t(k)] = v;
        done_[std::size_t(j)] = k;
      }
    }
  }

  int p() const { return p_; }
  double t0() const { return t0_; }
  const CodeList& codelist() const { return *cl_; }

  // Post-run access (unguarded).
  double coeff(int line, int k) const {
    return data_[std::size_t(line) * std::size_t(width_) + std::size_t(k)];
  }

  std::span<const double> row(int line) const {
    return {&data_[std::size_t(line) * std::size_t(width_)], std::size_t(width_)};
  }

  TaylorCoeffs series(int line) const {
    auto r = row(line);
    return TaylorCoeffs{t0_, std::vector<double>(r.begin(), r.end())};
  }

  // Guarded read used by the sweeps (public so tests can poke it directly).
  double read(int line, int k) const {
    if (k > done_[std::size_t(line)])
      throw TrapViolation("read of line " + std::to_string(line) + " at order " +
                          std::to_string(k) + ", only " + std::to_string(done_[std::size_t(line)]) +
                          " available");
    return data_[std::size_t(line) * std::size_t(width_) + std::size_t(k)];
  }

 private:
  // A series view of one ALG operand: a guarded line row or a constant
  // embedded as (imm, 0, 0, ...).
  struct OperandSeries {
    const KernelWorkspace* ws;
    int line;
    double imm;
    bool is_ref;
    double operator[](int k) const {
      return is_ref ? ws->read(line, k) : (k == 0 ? imm : 0.0);
    }
  };

  struct GuardedRow {
    const KernelWorkspace* ws;
    int line;
    double operator[](int k) const { return ws->read(line, k); }
  };

  OperandSeries operand(const CLLine& l, bool first) const {
    const char m = first ? l.mode[0] : l.mode[1];
    if (m == 'R') return {this, first ? l.r1 : l.r2, 0.0, true};
    return {this, 0, l.imm, false};
  }

  double eval_alg(const CLLine& l, int k) const {
    const OperandSeries a = operand(l, true);
    const OperandSeries b = operand(l, false);
    if (l.op == "add") return ts_add(a, b, k);
    if (l.op == "sub") return ts_sub(a, b, k);
    if (l.op == "mul") return ts_mul(a, b, k);
    if (k == 0 && b[0] == 0.0)
      throw DivisionBySingularSeries("line " + std::to_string(l.index) +
                                     ": divisor series has zero leading coefficient");
    return ts_div(a, b, GuardedRow{this, l.index}, k);
  }

  double eval_sub(int j, const CLLine& l, int k) const {
    if (k >= 1) return ts_subode(OperandSeries{this, l.r2, 0.0, true}, GuardedRow{this, l.r1}, k);
    const SubBlock& sb = cl_->blocks[std::size_t(cl_->block_index_of(j))];
    const SubODEDef& def = registry().def(sb.func_ord);
    const double u0 = read(l.r2, 0);
    if (!def.domain(u0))
      throw BaseFunctionDomainError("line " + std::to_string(j) + ": " + sb.func + "(" +
                                    std::to_string(u0) + ") outside the domain");
    return def.base(u0, sb.imm)[std::size_t(j - sb.start)];
  }

  const CodeList* cl_;
  int p_;
  int width_;
  double t0_ = 0.0;
  std::vector<double> data_;
  std::vector<int> done_;
};

inline KernelWorkspace run_codelist(const CodeList& cl, std::span<const double> ics, double t0,
                                    int p) {
  KernelWorkspace ws(cl, p);
  ws.run(ics, t0);
  return ws;
}

}  // namespace tsode
