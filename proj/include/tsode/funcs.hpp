#pragma once

// Registry of functions usable on the right-hand side. Each entry defines
// v = gamma(u) through the relation v' = h(u, v) u', giving the kernel a
// closed convolution recurrence per component, plus:
//   base    order-0 values gamma(u0) (the built-in initial values)
//   emit_h  code-list fragment computing h's components from the block's
//           own lines and the input line
//   h_eval  plain numeric h(u, v), used for consistency checks
// register_def verifies gamma'(u) = h(u, gamma(u)) by central differences
// at the definition's sample points before admitting it.

#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tsode/codelist.hpp"
#include "tsode/errors.hpp"

namespace tsode {

struct SubODEDef {
  std::string name;
  int m = 1;            // components per block
  bool needs_imm = false;  // carries an extra scalar (power exponent)

  // gamma(u0)[c]; pre: domain(u0)
  std::function<std::vector<double>(double u0, double imm)> base;
  // true when base/h are defined at u0
  std::function<bool(double u0)> domain;
  // h(u, v)[c] numerically
  std::function<std::vector<double>(double u, std::span<const double> v, double imm)> h_eval;
  // Appends ALG lines computing h's components after the block lines
  // [block, block+m-1]; returns the line holding each component.
  std::function<std::vector<int>(CodeList& cl, int block, int u_line, double imm)> emit_h;

  std::vector<double> samples;   // self-test points, inside the domain
  std::vector<double> test_imms; // exponents to self-test with (empty: {0})
};

class Registry {
 public:
  static Registry& instance() {
    static Registry r{};
    return r;
  }

  int find(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? -1 : it->second;
  }

  const SubODEDef& def(int ord) const { return defs_[std::size_t(ord)]; }

  const SubODEDef& lookup(const std::string& name) const {
    const int ord = find(name);
    if (ord < 0) throw UnsupportedFunction("no registered function '" + name + "'");
    return defs_[std::size_t(ord)];
  }

  int register_def(SubODEDef d) {
    if (by_name_.count(d.name))
      throw Error("function '" + d.name + "' already registered");
    self_test(d);
    defs_.push_back(std::move(d));
    const int ord = int(defs_.size()) - 1;
    by_name_[defs_.back().name] = ord;
    return ord;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const SubODEDef& d : defs_) out.push_back(d.name);
    return out;
  }

 private:
  Registry();

  // gamma'(u) must match h(u, gamma(u)) componentwise at the sample points.
  static void self_test(const SubODEDef& d) {
    if (d.samples.size() < 3)
      throw InconsistentSubODE("function '" + d.name + "': too few self-test samples");
    std::vector<double> imms = d.test_imms.empty() ? std::vector<double>{0.0} : d.test_imms;
    for (double imm : imms)
      for (double u : d.samples) {
        const double du = 6e-6 * std::max(1.0, std::fabs(u));
        if (!d.domain(u) || !d.domain(u - du) || !d.domain(u + du))
          throw InconsistentSubODE("function '" + d.name + "': sample " + std::to_string(u) +
                                   " not interior to the domain");
        const std::vector<double> lo = d.base(u - du, imm);
        const std::vector<double> hi = d.base(u + du, imm);
        const std::vector<double> v = d.base(u, imm);
        const std::vector<double> h = d.h_eval(u, v, imm);
        for (int c = 0; c < d.m; ++c) {
          const double fd = (hi[std::size_t(c)] - lo[std::size_t(c)]) / (2.0 * du);
          const double err = std::fabs(fd - h[std::size_t(c)]);
          if (!(err <= 1e-6 * (1.0 + std::fabs(fd))))
            throw InconsistentSubODE("function '" + d.name + "': h disagrees with the base slope at u=" +
                                     std::to_string(u) + " component " + std::to_string(c + 1));
        }
      }
  }

  std::vector<SubODEDef> defs_;
  std::map<std::string, int> by_name_;
};

inline Registry& registry() { return Registry::instance(); }

// --- built-in definitions ----------------------------------------------------

inline Registry::Registry() {
  auto positive = [](double u) { return u > 0.0; };
  auto anywhere = [](double) { return true; };

  {
    SubODEDef d;  // v = e^u, v' = v u'
    d.name = "exp";
    d.base = [](double u, double) { return std::vector<double>{std::exp(u)}; };
    d.domain = anywhere;
    d.h_eval = [](double, std::span<const double> v, double) {
      return std::vector<double>{v[0]};
    };
    d.emit_h = [](CodeList&, int block, int, double) { return std::vector<int>{block}; };
    d.samples = {-1.5, -0.4, 0.0, 0.7, 1.3};
    register_def(std::move(d));
  }
  {
    SubODEDef d;  // v = log u, v' = (1/u) u'
    d.name = "log";
    d.base = [](double u, double) { return std::vector<double>{std::log(u)}; };
    d.domain = positive;
    d.h_eval = [](double u, std::span<const double>, double) {
      return std::vector<double>{1.0 / u};
    };
    d.emit_h = [](CodeList& cl, int, int u_line, double) {
      return std::vector<int>{cl.emit_alg("div", Operand::I(1.0), Operand::R(u_line))};
    };
    d.samples = {0.3, 0.8, 1.0, 2.0, 5.0};
    register_def(std::move(d));
  }
  {
    SubODEDef d;  // v = sqrt u, v' = (v/u)/2 u'
    d.name = "sqrt";
    d.base = [](double u, double) { return std::vector<double>{std::sqrt(u)}; };
    d.domain = positive;
    d.h_eval = [](double u, std::span<const double> v, double) {
      return std::vector<double>{0.5 * v[0] / u};
    };
    d.emit_h = [](CodeList& cl, int block, int u_line, double) {
      const int q = cl.emit_alg("div", Operand::R(block), Operand::R(u_line));
      return std::vector<int>{cl.emit_alg("mul", Operand::I(0.5), Operand::R(q))};
    };
    d.samples = {0.25, 0.7, 1.0, 2.2, 9.0};
    register_def(std::move(d));
  }
  {
    SubODEDef d;  // v = u^c, v' = c (v/u) u'
    d.name = "pow";
    d.needs_imm = true;
    d.base = [](double u, double c) { return std::vector<double>{std::pow(u, c)}; };
    d.domain = positive;
    d.h_eval = [](double u, std::span<const double> v, double c) {
      return std::vector<double>{c * v[0] / u};
    };
    d.emit_h = [](CodeList& cl, int block, int u_line, double c) {
      const int q = cl.emit_alg("div", Operand::R(block), Operand::R(u_line));
      return std::vector<int>{cl.emit_alg("mul", Operand::I(c), Operand::R(q))};
    };
    d.samples = {0.4, 0.9, 1.0, 2.0, 4.0};
    d.test_imms = {2.5, -1.3, 0.5};
    register_def(std::move(d));
  }
  {
    SubODEDef d;  // v = (cos u, sin u), v' = (-v2, v1) u'
    d.name = "cs";
    d.m = 2;
    d.base = [](double u, double) { return std::vector<double>{std::cos(u), std::sin(u)}; };
    d.domain = anywhere;
    d.h_eval = [](double, std::span<const double> v, double) {
      return std::vector<double>{-v[1], v[0]};
    };
    d.emit_h = [](CodeList& cl, int block, int, double) {
      const int neg = cl.emit_alg("sub", Operand::I(0.0), Operand::R(block + 1));
      return std::vector<int>{neg, block};
    };
    d.samples = {-2.0, -0.5, 0.0, 1.0, 2.5};
    register_def(std::move(d));
  }
  {
    SubODEDef d;  // v = tan u, v' = (1 + v^2) u'
    d.name = "tan";
    d.base = [](double u, double) { return std::vector<double>{std::tan(u)}; };
    d.domain = anywhere;
    d.h_eval = [](double, std::span<const double> v, double) {
      return std::vector<double>{1.0 + v[0] * v[0]};
    };
    d.emit_h = [](CodeList& cl, int block, int, double) {
      const int sq = cl.emit_alg("mul", Operand::R(block), Operand::R(block));
      return std::vector<int>{cl.emit_alg("add", Operand::R(sq), Operand::I(1.0))};
    };
    d.samples = {-1.2, -0.4, 0.0, 0.5, 1.1};
    register_def(std::move(d));
  }
}

}  // namespace tsode
