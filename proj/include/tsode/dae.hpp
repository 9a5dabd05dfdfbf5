#pragma once

// The DAE view of a code list: one equation row per line, plus an alias
// row binding an extra variable to t, inserted right after the states.
//
//   ODE row i       0 = x_i' - x_{r1}
//   alias row       0 = x_{n+1} - t
//   ordinary row    0 = x_j - (a op b)
//   sub-ODE row     0 = x_j' - x_{r1} x_{r2}'
//
// Columns are the same variables. From this view come the signature
// matrix, the closed-form offsets (d = 1 everywhere; c = 0 on ODE and
// sub-ODE rows, 1 on ordinary rows), and the system Jacobian
// J(i,j) = d f_i / d x_j^{(sigma_ij)} taken where d_j - c_i = sigma_ij.

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsode/codelist.hpp"
#include "tsode/errors.hpp"
#include "tsode/kernel.hpp"
#include "tsode/sigma.hpp"

namespace tsode {

enum class RowKind { Ode, Alias, Ordinary, SubOde };

struct DenseMatrix {
  int n = 0;
  std::vector<double> a;

  DenseMatrix() = default;
  explicit DenseMatrix(int size) : n(size), a(std::size_t(size) * std::size_t(size), 0.0) {}

  double at(int i, int j) const { return a[std::size_t(i) * std::size_t(n) + std::size_t(j)]; }
  double& at(int i, int j) { return a[std::size_t(i) * std::size_t(n) + std::size_t(j)]; }
};

// Partial-pivoting LU; false when some pivot collapses relative to the
// matrix scale. Small and dense is all this needs to handle.
inline bool lu_nonsingular(DenseMatrix m, double rel_tol = 1e-10) {
  const int n = m.n;
  double scale = 0.0;
  for (double v : m.a) scale = std::max(scale, std::fabs(v));
  if (scale == 0.0) return false;
  const double tol = rel_tol * scale;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(m.at(i, k)) > std::fabs(m.at(piv, k))) piv = i;
    if (std::fabs(m.at(piv, k)) <= tol) return false;
    if (piv != k)
      for (int j = 0; j < n; ++j) std::swap(m.at(piv, j), m.at(k, j));
    for (int i = k + 1; i < n; ++i) {
      const double f = m.at(i, k) / m.at(k, k);
      for (int j = k + 1; j < n; ++j) m.at(i, j) -= f * m.at(k, j);
    }
  }
  return true;
}

// One signature/Jacobian contribution: row depends on column `col` at
// derivative `order`, with partial given by `val` at a kernel point.
struct Dep {
  int col = 0;
  int order = 0;
  std::function<double(const KernelWorkspace&)> val;
};

struct DaeRow {
  RowKind kind = RowKind::Ordinary;
  int line = 0;  // code-list line, 0 for the alias row
  std::vector<Dep> deps;
};

class DaeView {
 public:
  explicit DaeView(const CodeList& cl) : cl_(&cl), n_(cl.n_state), N_(cl.size() + 1) {
    for (int r = 0; r < N_; ++r) rows_.push_back(build_row(r));
  }

  int size() const { return N_; }
  int n_state() const { return n_; }
  const CodeList& codelist() const { return *cl_; }
  const std::vector<DaeRow>& rows() const { return rows_; }

  // Column of a code-list line (0-based); TREF maps to the alias column.
  int col_of_line(int line) const { return line == TREF ? n_ : (line <= n_ ? line - 1 : line); }
  // Inverse: 0 means the alias column.
  int line_of_col(int col) const { return col < n_ ? col + 1 : (col == n_ ? 0 : col); }

  SigmaMatrix sigma() const {
    SigmaMatrix s(N_);
    for (int i = 0; i < N_; ++i)
      for (const Dep& dep : rows_[std::size_t(i)].deps)
        s.at(i, dep.col) = std::max(s.at(i, dep.col), dep.order);
    return s;
  }

  std::vector<std::string> var_names() const {
    std::vector<std::string> v;
    for (int j = 0; j < N_; ++j) {
      const int line = line_of_col(j);
      v.push_back(line == 0 ? "t" : "x" + std::to_string(line));
    }
    return v;
  }

  // Residual of one DAE row given stacked variable values and derivatives
  // (columns in this view's order). Used by finite-difference checks.
  double residual(int row, std::span<const double> x, std::span<const double> xdot,
                  double t) const {
    const DaeRow& r = rows_[std::size_t(row)];
    auto val = [&](int ref) { return x[std::size_t(col_of_line(ref))]; };
    switch (r.kind) {
      case RowKind::Ode:
        return xdot[std::size_t(row)] - val(cl_->line(r.line).r1);
      case RowKind::Alias:
        return x[std::size_t(n_)] - t;
      case RowKind::SubOde: {
        const CLLine& l = cl_->line(r.line);
        return xdot[std::size_t(col_of_line(r.line))] -
               val(l.r1) * xdot[std::size_t(col_of_line(l.r2))];
      }
      case RowKind::Ordinary: {
        const CLLine& l = cl_->line(r.line);
        const double a = l.mode[0] == 'R' ? val(l.r1) : l.imm;
        const double b = l.mode[1] == 'R' ? val(l.r2) : l.imm;
        double f = 0.0;
        if (l.op == "add") f = a + b;
        else if (l.op == "sub") f = a - b;
        else if (l.op == "mul") f = a * b;
        else f = a / b;
        return val(r.line) - f;
      }
    }
    return 0.0;
  }

 private:
  DaeRow build_row(int row) const {
    DaeRow r;
    r.line = line_of_col(row);
    const int self = row;
    if (r.line == 0) {
      r.kind = RowKind::Alias;
      r.deps.push_back(Dep{self, 0, [](const KernelWorkspace&) { return 1.0; }});
      return r;
    }
    const CLLine& l = cl_->line(r.line);
    switch (l.kind) {
      case CLKind::ODE: {
        r.kind = RowKind::Ode;
        r.deps.push_back(Dep{self, 1, [](const KernelWorkspace&) { return 1.0; }});
        r.deps.push_back(Dep{col_of_line(l.r1), 0, [](const KernelWorkspace&) { return -1.0; }});
        break;
      }
      case CLKind::SUB: {
        r.kind = RowKind::SubOde;
        const int h = l.r1, u = l.r2;
        r.deps.push_back(Dep{self, 1, [](const KernelWorkspace&) { return 1.0; }});
        r.deps.push_back(Dep{col_of_line(u), 1,
                             [h](const KernelWorkspace& ws) { return -ws.coeff(h, 0); }});
        r.deps.push_back(Dep{col_of_line(h), 0,
                             [u](const KernelWorkspace& ws) { return -ws.coeff(u, 1); }});
        break;
      }
      case CLKind::ALG: {
        r.kind = RowKind::Ordinary;
        r.deps.push_back(Dep{self, 0, [](const KernelWorkspace&) { return 1.0; }});
        const bool aR = l.mode[0] == 'R', bR = l.mode[1] == 'R';
        const int ra = l.r1, rb = l.r2;
        const double imm = l.imm;
        const int li = r.line;
        auto aval = [aR, ra, imm](const KernelWorkspace& ws) {
          return aR ? ws.coeff(ra, 0) : imm;
        };
        auto bval = [bR, rb, imm](const KernelWorkspace& ws) {
          return bR ? ws.coeff(rb, 0) : imm;
        };
        auto dep_on = [&](int ref, std::function<double(const KernelWorkspace&)> f) {
          r.deps.push_back(Dep{col_of_line(ref), 0, std::move(f)});
        };
        if (l.op == "add") {
          if (aR) dep_on(ra, [](const KernelWorkspace&) { return -1.0; });
          if (bR) dep_on(rb, [](const KernelWorkspace&) { return -1.0; });
        } else if (l.op == "sub") {
          if (aR) dep_on(ra, [](const KernelWorkspace&) { return -1.0; });
          if (bR) dep_on(rb, [](const KernelWorkspace&) { return 1.0; });
        } else if (l.op == "mul") {
          if (aR) dep_on(ra, [bval](const KernelWorkspace& ws) { return -bval(ws); });
          if (bR) dep_on(rb, [aval](const KernelWorkspace& ws) { return -aval(ws); });
        } else {  // div: x = a/b
          if (aR) dep_on(ra, [bval](const KernelWorkspace& ws) { return -1.0 / bval(ws); });
          if (bR)
            dep_on(rb, [li](const KernelWorkspace& ws) {
              // a/b^2 = x/b, with x the line's own leading coefficient
              const CLLine& me = ws.codelist().line(li);
              const double b0 = me.mode[1] == 'R' ? ws.coeff(me.r2, 0) : me.imm;
              return ws.coeff(li, 0) / b0;
            });
        }
        break;
      }
    }
    return r;
  }

  const CodeList* cl_;
  int n_;
  int N_;
  std::vector<DaeRow> rows_;
};

inline DaeView dae_view(const CodeList& cl) { return DaeView(cl); }

// Closed-form offsets for any code-list DAE.
inline Offsets codelist_offsets(const DaeView& view) {
  Offsets off;
  off.d.assign(std::size_t(view.size()), 1);
  off.c.assign(std::size_t(view.size()), 0);
  for (int i = 0; i < view.size(); ++i) {
    const RowKind k = view.rows()[std::size_t(i)].kind;
    off.c[std::size_t(i)] = (k == RowKind::Ode || k == RowKind::SubOde) ? 0 : 1;
  }
  return off;
}

// Value-mode system Jacobian at the expansion point of ws (which must be a
// run over the same code list, order >= 1).
inline DenseMatrix system_jacobian(const DaeView& view, const Offsets& off,
                                   const KernelWorkspace& ws) {
  if (&ws.codelist() != &view.codelist())
    throw Error("system_jacobian: workspace belongs to a different code list");
  if (ws.p() < 1) throw Error("system_jacobian: workspace must carry orders 0 and 1");
  DenseMatrix J(view.size());
  for (int i = 0; i < view.size(); ++i)
    for (const Dep& dep : view.rows()[std::size_t(i)].deps)
      if (off.d[std::size_t(dep.col)] - off.c[std::size_t(i)] == dep.order)
        J.at(i, dep.col) += dep.val(ws);
  return J;
}

// Sparsity-mode Jacobian: which (row, col) can be structurally nonzero.
inline std::vector<char> jacobian_pattern(const DaeView& view, const Offsets& off) {
  std::vector<char> pat(std::size_t(view.size()) * std::size_t(view.size()), 0);
  for (int i = 0; i < view.size(); ++i)
    for (const Dep& dep : view.rows()[std::size_t(i)].deps)
      if (off.d[std::size_t(dep.col)] - off.c[std::size_t(i)] == dep.order)
        pat[std::size_t(i) * std::size_t(view.size()) + std::size_t(dep.col)] = 1;
  return pat;
}

inline bool is_unit_lower_triangular(const DenseMatrix& J) {
  for (int i = 0; i < J.n; ++i) {
    if (J.at(i, i) != 1.0) return false;
    for (int j = i + 1; j < J.n; ++j)
      if (J.at(i, j) != 0.0) return false;
  }
  return true;
}

// --- validity verdict ---------------------------------------------------------

struct ValidityReport {
  bool weakly_valid = false;
  std::pair<int, int> violation{-1, -1};  // row/col of the first failure
  bool equality_transversal = false;
  bool jacobian_supplied = false;
  bool jacobian_nonsingular = false;
  std::string verdict;

  bool valid() const { return weakly_valid && equality_transversal; }
  bool certified() const { return valid() && jacobian_supplied && jacobian_nonsingular; }
};

// Weak validity, an equality transversal restricted to J's nonzeros when J
// is given, and the nonsingularity certificate. Weakly valid offsets with
// a nonsingular J are valid outright; a singular J leaves them only
// weakly certified.
inline ValidityReport check_valid(const SigmaMatrix& s, const Offsets& off,
                                  const DenseMatrix* J = nullptr) {
  ValidityReport r;
  r.weakly_valid = is_weakly_valid(s, off, &r.violation);
  if (!r.weakly_valid) {
    r.verdict = "invalid";
    return r;
  }
  std::vector<char> mask = equality_mask(s, off);
  if (J) {
    r.jacobian_supplied = true;
    if (J->n != s.n) throw Error("check_valid: Jacobian size mismatch");
    for (int i = 0; i < s.n; ++i)
      for (int j = 0; j < s.n; ++j)
        if (J->at(i, j) == 0.0) mask[std::size_t(i) * std::size_t(s.n) + std::size_t(j)] = 0;
    r.jacobian_nonsingular = lu_nonsingular(*J);
  }
  r.equality_transversal = mask_has_transversal(s.n, mask);
  r.verdict = r.certified() ? "valid, certified" : "weakly valid, not certified";
  return r;
}

}  // namespace tsode
