#pragma once

// Tracing: build a code list by executing the user's right-hand side on
// overloaded handles. Arithmetic on handles appends ALG lines, function
// calls append sub-ODE blocks plus their h fragments, and identical
// subexpressions are folded onto the existing line (structural dedup).
// Constants fold at trace time; named parameters stay live as immediates
// on the lines that carry them, so set_param can rebind them later.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tsode/codelist.hpp"
#include "tsode/errors.hpp"
#include "tsode/funcs.hpp"

namespace tsode {

class Tracer;

// A value in the traced computation: either a code-list line (line >= 1,
// or TREF for t) or a scalar constant, possibly bound to a parameter slot.
struct Expr {
  Tracer* tr = nullptr;
  int line = NOREF;
  double value = 0.0;
  int param = -1;

  bool is_const() const { return line == NOREF; }
  bool is_line() const { return line != NOREF; }
};

class Tracer {
 public:
  explicit Tracer(int n_state) {
    cl_.init_states(n_state);
    out_set_.assign(std::size_t(n_state), false);
  }

  void disable_dedup() { cl_.dedup_enabled = false; }

  Expr state(int i) {
    if (i < 1 || i > cl_.n_state) throw Error("state index out of range");
    return line_expr(i);
  }

  Expr t() { return line_expr(TREF); }

  Expr constant(double v) { return Expr{this, NOREF, v, -1}; }

  Expr param(const std::string& name, double value) {
    const int slot = cl_.add_param(name, value);
    return Expr{this, NOREF, value, slot};
  }

  Expr param(const std::string& name) {
    return Expr{this, NOREF, cl_.get_param(name), find_slot(name)};
  }

  void set_out(int i, Expr rhs) {
    if (i < 1 || i > cl_.n_state) throw Error("state index out of range");
    if (out_set_[std::size_t(i - 1)]) throw Error("derivative of state " + std::to_string(i) + " assigned twice");
    cl_.out_map[std::size_t(i - 1)] = materialize(rhs);
    out_set_[std::size_t(i - 1)] = true;
  }

  CodeList finish() {
    for (int i = 0; i < cl_.n_state; ++i)
      if (!out_set_[std::size_t(i)])
        throw Error("state " + std::to_string(i + 1) + " has no assigned derivative");
    for (int i = 0; i < cl_.n_state; ++i)
      cl_.lines[std::size_t(i)].r1 = cl_.out_map[std::size_t(i)];
    cl_.validate();
    return std::move(cl_);
  }

  // --- used by the operator layer ------------------------------------------

  Expr binop(const std::string& op, Expr a, Expr b) {
    if (a.is_const() && b.is_const()) {
      require_foldable(a);
      require_foldable(b);
      return constant(fold(op, a.value, b.value));
    }
    return line_expr(cl_.emit_alg(op, operand_of(a), operand_of(b)));
  }

  // The lines of the block computing name(u) (emitting it if new).
  std::vector<int> sub_block(const SubODEDef& def, int ord, Expr u, bool has_imm, double imm) {
    const int u_ref = u.line;
    if (const int start = cl_.find_block(def.name, u_ref, has_imm, imm)) {
      std::vector<int> out;
      for (int c = 0; c < def.m; ++c) out.push_back(start + c);
      return out;
    }
    const int start = cl_.append_sub_lines(def.name, def.m, u_ref);
    const std::vector<int> h = def.emit_h(cl_, start, u_ref, imm);
    cl_.finish_sub_block(def.name, ord, start, def.m, has_imm, imm, h);
    std::vector<int> out;
    for (int c = 0; c < def.m; ++c) out.push_back(start + c);
    return out;
  }

  Expr line_expr(int line) { return Expr{this, line, 0.0, -1}; }

  // Ensures e is represented by a line (out_map needs one even for
  // constant or t right-hand sides).
  int materialize(Expr e) {
    if (e.is_line()) {
      if (e.line == TREF) return cl_.emit_alg("mul", Operand::I(1.0), Operand::R(TREF));
      return e.line;
    }
    const int zero = cl_.emit_alg("sub", Operand::R(1), Operand::R(1));
    return cl_.emit_alg("add", operand_of(e), Operand::R(zero));
  }

 private:
  int find_slot(const std::string& name) const {
    for (std::size_t s = 0; s < cl_.params.size(); ++s)
      if (cl_.params[s].name == name) return int(s);
    throw UnknownParameter("no parameter named '" + name + "'");
  }

  static Operand operand_of(Expr e) {
    if (e.is_line()) return Operand::R(e.line);
    if (e.param >= 0) return Operand::P(e.value, e.param);
    return Operand::I(e.value);
  }

  static void require_foldable(const Expr& e) {
    if (e.param >= 0)
      throw UnsupportedParamExpression(
          "arithmetic between a parameter and constants would fold the parameter away; "
          "rewrite so the parameter meets a non-constant operand");
  }

  static double fold(const std::string& op, double a, double b) {
    if (op == "add") return a + b;
    if (op == "sub") return a - b;
    if (op == "mul") return a * b;
    if (b == 0.0) throw Error("division by zero constant while tracing");
    return a / b;
  }

  CodeList cl_;
  std::vector<bool> out_set_;
};

// --- functions ----------------------------------------------------------------

// name(u), selecting one component of the block (cs: 0 = cos, 1 = sin).
inline Expr apply_func(const std::string& name, Expr u, bool has_imm = false,
                       double imm = 0.0, int component = 0) {
  Tracer& tr = *u.tr;
  const int ord = registry().find(name);
  if (ord < 0) throw UnsupportedFunction("no registered function '" + name + "'");
  const SubODEDef& def = registry().def(ord);
  if (u.is_const()) {
    if (u.param >= 0)
      throw UnsupportedParamExpression("function of a bare parameter would fold it away");
    if (!def.domain(u.value))
      throw BaseFunctionDomainError(name + " of constant " + std::to_string(u.value) +
                                    " outside the domain");
    return tr.constant(def.base(u.value, imm)[std::size_t(component)]);
  }
  const std::vector<int> lines = tr.sub_block(def, ord, u, has_imm, imm);
  return tr.line_expr(lines[std::size_t(component)]);
}

inline Expr exp(Expr u) { return apply_func("exp", u); }
inline Expr log(Expr u) { return apply_func("log", u); }
inline Expr sqrt(Expr u) { return apply_func("sqrt", u); }
inline Expr cos(Expr u) { return apply_func("cs", u, false, 0.0, 0); }
inline Expr sin(Expr u) { return apply_func("cs", u, false, 0.0, 1); }
inline Expr tan(Expr u) { return apply_func("tan", u); }

// --- arithmetic ------------------------------------------------------------------

namespace expr_detail {
inline Expr lift(const Expr& like, double v) {
  Expr e;
  e.tr = like.tr;
  e.value = v;
  return e;
}
}  // namespace expr_detail

inline Expr operator+(Expr a, Expr b) { return a.tr ? a.tr->binop("add", a, b) : b.tr->binop("add", a, b); }
inline Expr operator-(Expr a, Expr b) { return a.tr ? a.tr->binop("sub", a, b) : b.tr->binop("sub", a, b); }
inline Expr operator*(Expr a, Expr b) { return a.tr ? a.tr->binop("mul", a, b) : b.tr->binop("mul", a, b); }
inline Expr operator/(Expr a, Expr b) { return a.tr ? a.tr->binop("div", a, b) : b.tr->binop("div", a, b); }

inline Expr operator+(Expr a, double b) { return a + expr_detail::lift(a, b); }
inline Expr operator+(double a, Expr b) { return expr_detail::lift(b, a) + b; }
inline Expr operator-(Expr a, double b) { return a - expr_detail::lift(a, b); }
inline Expr operator-(double a, Expr b) { return expr_detail::lift(b, a) - b; }
inline Expr operator*(Expr a, double b) { return a * expr_detail::lift(a, b); }
inline Expr operator*(double a, Expr b) { return expr_detail::lift(b, a) * b; }
inline Expr operator/(Expr a, double b) { return a / expr_detail::lift(a, b); }
inline Expr operator/(double a, Expr b) { return expr_detail::lift(b, a) / b; }

inline Expr operator-(Expr a) {
  if (a.is_const() && a.param < 0) return expr_detail::lift(a, -a.value);
  return expr_detail::lift(a, 0.0) - a;
}
inline Expr operator+(Expr a) { return a; }

// --- powers --------------------------------------------------------------------

// Integer exponents lower to a square-and-multiply chain of mul lines
// (negative ones behind a final reciprocal); anything else becomes a pow
// sub-ODE with the exponent as the block immediate.
inline constexpr std::int64_t kIntPowCutoff = std::int64_t(1) << 31;

inline Expr pow(Expr u, double c) {
  if (u.is_const()) {
    if (u.param >= 0)
      throw UnsupportedParamExpression("pow of a bare parameter would fold it away");
    const bool integral = std::nearbyint(c) == c;
    if (!integral && u.value <= 0.0)
      throw BaseFunctionDomainError("pow of non-positive constant base");
    return u.tr->constant(std::pow(u.value, c));
  }
  if (std::nearbyint(c) == c && std::fabs(c) < double(kIntPowCutoff)) {
    std::int64_t e = std::int64_t(c);
    Tracer& tr = *u.tr;
    if (e == 0) return tr.constant(1.0);
    const bool neg = e < 0;
    std::uint64_t a = neg ? std::uint64_t(-e) : std::uint64_t(e);
    int top = 63;
    while (!((a >> top) & 1u)) --top;
    Expr acc = u;
    for (int bit = top - 1; bit >= 0; --bit) {
      acc = acc * acc;
      if ((a >> bit) & 1u) acc = acc * u;
    }
    if (neg) acc = tr.constant(1.0) / acc;
    return acc;
  }
  return apply_func("pow", u, true, c);
}

inline Expr pow(Expr u, Expr c) {
  if (!c.is_const() || c.param >= 0)
    throw UnsupportedParamExponent("pow exponent must be a plain constant");
  return pow(u, c.value);
}

// --- whole-trace convenience ------------------------------------------------------

// f(tracer, states, t) -> one Expr per state derivative.
template <class F>
inline CodeList trace(int n_state, F&& f) {
  Tracer tr(n_state);
  std::vector<Expr> x;
  for (int i = 1; i <= n_state; ++i) x.push_back(tr.state(i));
  std::vector<Expr> outs = std::forward<F>(f)(tr, x, tr.t());
  if (int(outs.size()) != n_state)
    throw Error("right-hand side returned " + std::to_string(outs.size()) + " derivatives for " +
                std::to_string(n_state) + " states");
  for (int i = 1; i <= n_state; ++i) tr.set_out(i, outs[std::size_t(i - 1)]);
  return tr.finish();
}

}  // namespace tsode
