#pragma once

// Code-list IR.
//
// A code list is an ordered sequence of lines, each defining one variable:
//   x_i' := x_{r1}          ODE line (one per state, lines 1..n; r1 = out_map)
//   x_i  := a (op) b        ALG line, op in {add, sub, mul, div}, operands
//                           line references or one scalar immediate
//   x_i  ~ sub-ODE block    SUB line: component of a function-of-one-line
//                           block; r2 is the input line, r1 the line holding
//                           the matching component of h
// Line indices are 1-based. Reference 0 denotes the independent variable t.
// Lines are append-only while tracing; after that the only legal mutation
// is set_param, which rewrites the imm field of the lines bound to a named
// parameter slot.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "tsode/errors.hpp"

namespace tsode {

enum class CLKind { ODE, ALG, SUB };

inline constexpr int TREF = 0;   // operand slot value meaning "t"
inline constexpr int NOREF = -1; // operand slot not used

inline const char* kind_name(CLKind k) {
  switch (k) {
    case CLKind::ODE: return "ODE";
    case CLKind::ALG: return "ALG";
    default: return "SUB";
  }
}

struct CLLine {
  int index = 0;
  CLKind kind = CLKind::ALG;
  std::string op;    // add|sub|mul|div; function name on a SUB head; else ""
  std::string mode;  // "R" for ODE, else "RR", "RI", "IR"
  int r1 = NOREF;
  int r2 = NOREF;
  double imm = 0.0;
  bool has_imm = false;
  int param_ref = -1;  // parameter slot index when imm is a live parameter
};

// One operand of an ALG line.
struct Operand {
  bool is_ref = false;
  int ref = NOREF;
  double imm = 0.0;
  int param = -1;

  static Operand R(int line) { return {true, line, 0.0, -1}; }
  static Operand I(double v) { return {false, NOREF, v, -1}; }
  static Operand P(double v, int slot) { return {false, NOREF, v, slot}; }
};

struct ParamSlot {
  std::string name;
  double value = 0.0;
  std::vector<int> lines;  // lines whose imm mirrors this slot
};

struct SubBlock {
  int start = 0;       // first SUB line of the block
  int m = 1;           // number of components
  std::string func;    // registered function name
  int func_ord = -1;   // registry ordinal
  double imm = 0.0;    // extra scalar (power exponent), if any
  bool has_imm = false;
};

namespace detail {

inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 1469598103934665603ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t hash_str(const std::string& s, std::uint64_t h) {
  return fnv1a(s.data(), s.size(), h);
}

inline std::uint64_t hash_int(std::int64_t v, std::uint64_t h) {
  return fnv1a(&v, sizeof v, h);
}

inline std::uint64_t hash_bits(double v, std::uint64_t h) {
  const std::uint64_t b = std::bit_cast<std::uint64_t>(v);
  return fnv1a(&b, sizeof b, h);
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the short form when it round-trips.
  for (int prec = 1; prec <= 16; ++prec) {
    char sh[40];
    std::snprintf(sh, sizeof sh, "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(sh, "%lf", &back);
    if (back == v) return sh;
  }
  return buf;
}

}  // namespace detail

class CodeList {
 public:
  int n_state = 0;
  bool dedup_enabled = true;  // consulted by emit_alg / block lookup
  std::vector<CLLine> lines;
  std::vector<int> out_map;  // out_map[i]: line computing x_{i+1}'
  std::vector<ParamSlot> params;
  std::vector<SubBlock> blocks;
  std::vector<int> block_of;  // per line (0-based): block ordinal or -1

  int size() const { return int(lines.size()); }

  const CLLine& line(int index) const { return lines[std::size_t(index - 1)]; }

  bool is_state_line(int index) const { return index >= 1 && index <= n_state; }

  int block_index_of(int line_index) const { return block_of[std::size_t(line_index - 1)]; }

  // --- construction -------------------------------------------------------

  void init_states(int n) {
    n_state = n;
    out_map.assign(std::size_t(n), 0);
    for (int i = 1; i <= n; ++i) {
      CLLine l;
      l.index = i;
      l.kind = CLKind::ODE;
      l.mode = "R";
      lines.push_back(l);
      block_of.push_back(-1);
    }
  }

  int emit_alg(const std::string& op, Operand a, Operand b) {
    CLLine l;
    l.kind = CLKind::ALG;
    l.op = op;
    if (a.is_ref && b.is_ref) {
      l.mode = "RR";
      l.r1 = a.ref;
      l.r2 = b.ref;
    } else if (a.is_ref) {
      l.mode = "RI";
      l.r1 = a.ref;
      l.imm = b.imm;
      l.has_imm = true;
      l.param_ref = b.param;
    } else {
      l.mode = "IR";
      l.r2 = b.ref;
      l.imm = a.imm;
      l.has_imm = true;
      l.param_ref = a.param;
    }
    if (dedup_enabled) {
      const std::uint64_t h = alg_key(l);
      if (auto it = dedup_index_.find(h); it != dedup_index_.end()) {
        for (int cand : it->second)
          if (alg_equal(line(cand), l)) return cand;
      }
    }
    l.index = size() + 1;
    lines.push_back(l);
    block_of.push_back(-1);
    if (l.param_ref >= 0) params[std::size_t(l.param_ref)].lines.push_back(l.index);
    dedup_index_[alg_key(l)].push_back(l.index);
    return l.index;
  }

  // Looks up an existing block for (func, u, imm); returns its start or 0.
  int find_block(const std::string& func, int u_ref, bool has_imm, double imm) const {
    if (!dedup_enabled) return 0;
    const std::uint64_t h = block_key(func, u_ref, has_imm, imm);
    if (auto it = block_index_.find(h); it != block_index_.end()) {
      for (int b : it->second) {
        const SubBlock& sb = blocks[std::size_t(b)];
        if (sb.func == func && line(sb.start).r2 == u_ref && sb.has_imm == has_imm &&
            (!has_imm || std::bit_cast<std::uint64_t>(sb.imm) == std::bit_cast<std::uint64_t>(imm)))
          return sb.start;
      }
    }
    return 0;
  }

  // Appends the m SUB lines of a block with r1 left unpatched; the caller
  // then emits the h fragment and calls finish_sub_block.
  int append_sub_lines(const std::string& func, int m, int u_ref) {
    const int start = size() + 1;
    for (int c = 0; c < m; ++c) {
      CLLine l;
      l.index = start + c;
      l.kind = CLKind::SUB;
      l.op = (c == 0) ? func : "";
      l.mode = "RR";
      l.r1 = 0;  // patched by finish_sub_block
      l.r2 = u_ref;
      lines.push_back(l);
      block_of.push_back(int(blocks.size()));
    }
    return start;
  }

  void finish_sub_block(const std::string& func, int func_ord, int start, int m,
                        bool has_imm, double imm, const std::vector<int>& h_lines) {
    for (int c = 0; c < m; ++c) lines[std::size_t(start - 1 + c)].r1 = h_lines[std::size_t(c)];
    SubBlock sb;
    sb.start = start;
    sb.m = m;
    sb.func = func;
    sb.func_ord = func_ord;
    sb.imm = imm;
    sb.has_imm = has_imm;
    const int u_ref = line(start).r2;
    block_index_[block_key(func, u_ref, has_imm, imm)].push_back(int(blocks.size()));
    blocks.push_back(sb);
  }

  int add_param(const std::string& name, double value) {
    for (std::size_t s = 0; s < params.size(); ++s)
      if (params[s].name == name) {
        if (params[s].value != value)
          throw Error("parameter '" + name + "' registered twice with different values");
        return int(s);
      }
    params.push_back(ParamSlot{name, value, {}});
    return int(params.size()) - 1;
  }

  // --- post-trace mutation --------------------------------------------------

  void set_param(const std::string& name, double value) {
    for (ParamSlot& s : params)
      if (s.name == name) {
        s.value = value;
        for (int li : s.lines) lines[std::size_t(li - 1)].imm = value;
        return;
      }
    throw UnknownParameter("no parameter named '" + name + "'");
  }

  double get_param(const std::string& name) const {
    for (const ParamSlot& s : params)
      if (s.name == name) return s.value;
    throw UnknownParameter("no parameter named '" + name + "'");
  }

  // --- validation -----------------------------------------------------------

  void validate() const {
    if (n_state < 1) throw Error("code list has no states");
    if (size() < n_state) throw Error("code list shorter than its state count");
    if (int(out_map.size()) != n_state) throw Error("out_map size mismatch");
    for (int i = 0; i < size(); ++i)
      if (lines[std::size_t(i)].index != i + 1) throw Error("line indices not consecutive");
    for (int i = 1; i <= size(); ++i) {
      const CLLine& l = line(i);
      const bool should_be_ode = i <= n_state;
      if (should_be_ode != (l.kind == CLKind::ODE))
        throw Error("line " + std::to_string(i) + ": ODE lines must be exactly lines 1.." +
                    std::to_string(n_state));
    }
    for (int i = 0; i < n_state; ++i) {
      const int o = out_map[std::size_t(i)];
      if (o < 1 || o > size())
        throw Error("out_map[" + std::to_string(i + 1) + "] out of range");
      if (line(i + 1).r1 != o) throw Error("ODE line r1 disagrees with out_map");
    }
    for (int i = 1; i <= size(); ++i) validate_line(i);
    validate_blocks();
    for (std::size_t s = 0; s < params.size(); ++s)
      for (int li : params[s].lines) {
        const CLLine& l = line(li);
        if (!l.has_imm || l.param_ref != int(s))
          throw Error("parameter slot '" + params[s].name + "' points at line " +
                      std::to_string(li) + " which does not carry it");
      }
  }

  // --- rendering --------------------------------------------------------------

  std::string dump() const {
    std::string out = " idx kind op   mode    R1    R2         Imm   meaning\n";
    char buf[160];
    for (int i = 1; i <= size(); ++i) {
      const CLLine& l = line(i);
      std::string r1 = l.r1 == NOREF ? "" : ref_name(l.r1);
      std::string r2 = l.r2 == NOREF ? "" : ref_name(l.r2);
      std::string imm = l.has_imm ? detail::fmt_double(l.imm) : "";
      if (l.param_ref >= 0) imm += "(" + params[std::size_t(l.param_ref)].name + ")";
      std::snprintf(buf, sizeof buf, "%4d %-4s %-4s %-4s %5s %5s %11s   %s\n", i,
                    kind_name(l.kind), l.op.c_str(), l.mode.c_str(), r1.c_str(), r2.c_str(),
                    imm.c_str(), meaning(i).c_str());
      out += buf;
    }
    return out;
  }

  std::string dump_json() const {
    nlohmann::json j;
    j["n_state"] = n_state;
    j["out_map"] = out_map;
    nlohmann::json jl = nlohmann::json::array();
    for (const CLLine& l : lines) {
      nlohmann::json e;
      e["index"] = l.index;
      e["kind"] = kind_name(l.kind);
      e["op"] = l.op;
      e["mode"] = l.mode;
      e["r1"] = l.r1 == NOREF ? nlohmann::json() : nlohmann::json(l.r1);
      e["r2"] = l.r2 == NOREF ? nlohmann::json() : nlohmann::json(l.r2);
      e["imm"] = l.has_imm ? nlohmann::json(l.imm) : nlohmann::json();
      e["param"] = l.param_ref >= 0 ? nlohmann::json(params[std::size_t(l.param_ref)].name)
                                    : nlohmann::json();
      jl.push_back(e);
    }
    j["lines"] = jl;
    nlohmann::json jp = nlohmann::json::array();
    for (const ParamSlot& s : params)
      jp.push_back({{"name", s.name}, {"value", s.value}, {"lines", s.lines}});
    j["params"] = jp;
    return j.dump(2);
  }

  // Hash of the list's shape: everything except immediate values, so that
  // set_param never changes it.
  std::uint64_t structure_key() const {
    std::uint64_t h = 1469598103934665603ull;
    h = detail::hash_int(n_state, h);
    for (const CLLine& l : lines) {
      h = detail::hash_int(int(l.kind), h);
      h = detail::hash_str(l.op, h);
      h = detail::hash_str(l.mode, h);
      h = detail::hash_int(l.r1, h);
      h = detail::hash_int(l.r2, h);
    }
    for (int o : out_map) h = detail::hash_int(o, h);
    return h;
  }

 private:
  // hash -> candidate ALG line indices / block ordinals
  std::unordered_map<std::uint64_t, std::vector<int>> dedup_index_;
  std::unordered_map<std::uint64_t, std::vector<int>> block_index_;

  static std::uint64_t alg_key(const CLLine& l) {
    std::uint64_t h = 1469598103934665603ull;
    h = detail::hash_str(l.op, h);
    h = detail::hash_str(l.mode, h);
    h = detail::hash_int(l.r1, h);
    h = detail::hash_int(l.r2, h);
    h = detail::hash_int(l.has_imm ? 1 : 0, h);
    if (l.has_imm) h = detail::hash_bits(l.imm, h);
    h = detail::hash_int(l.param_ref, h);
    return h;
  }

  static bool alg_equal(const CLLine& a, const CLLine& b) {
    return a.kind == CLKind::ALG && a.op == b.op && a.mode == b.mode && a.r1 == b.r1 &&
           a.r2 == b.r2 && a.has_imm == b.has_imm && a.param_ref == b.param_ref &&
           (!a.has_imm ||
            std::bit_cast<std::uint64_t>(a.imm) == std::bit_cast<std::uint64_t>(b.imm));
  }

  static std::uint64_t block_key(const std::string& func, int u_ref, bool has_imm, double imm) {
    std::uint64_t h = 1469598103934665603ull;
    h = detail::hash_str(func, h);
    h = detail::hash_int(u_ref, h);
    h = detail::hash_int(has_imm ? 1 : 0, h);
    if (has_imm) h = detail::hash_bits(imm, h);
    return h;
  }

  std::string ref_name(int r) const { return r == TREF ? "t" : std::to_string(r); }

  std::string meaning(int i) const {
    const CLLine& l = line(i);
    auto opnd = [&](bool first) -> std::string {
      const int r = first ? l.r1 : l.r2;
      const char want = first ? l.mode[0] : l.mode[1];
      if (want == 'R') return r == TREF ? "t" : "x" + std::to_string(r);
      std::string s = detail::fmt_double(l.imm);
      if (l.param_ref >= 0) s = params[std::size_t(l.param_ref)].name;
      return s;
    };
    switch (l.kind) {
      case CLKind::ODE:
        return "x" + std::to_string(i) + "' = x" + std::to_string(l.r1);
      case CLKind::ALG: {
        const char* sym = l.op == "add" ? " + " : l.op == "sub" ? " - " : l.op == "mul" ? " * " : " / ";
        return "x" + std::to_string(i) + " = " + opnd(true) + sym + opnd(false);
      }
      default: {
        const SubBlock& sb = blocks[std::size_t(block_of[std::size_t(i - 1)])];
        const int comp = i - sb.start;
        std::string s = "x" + std::to_string(i) + " = " + sb.func;
        if (sb.m > 1) s += "[" + std::to_string(comp + 1) + "]";
        s += "(" + ref_name(line(sb.start).r2) + ")";
        if (sb.has_imm) s += ", c=" + detail::fmt_double(sb.imm);
        s += "  h:x" + std::to_string(l.r1);
        return s;
      }
    }
  }

  void validate_line(int i) const {
    const CLLine& l = line(i);
    auto check_ref = [&](int r, bool strict_past) {
      if (r == TREF) return;
      if (r < 1 || r > size())
        throw Error("line " + std::to_string(i) + ": reference " + std::to_string(r) +
                    " out of range");
      if (strict_past && r >= i)
        throw Error("line " + std::to_string(i) + ": reference " + std::to_string(r) +
                    " not strictly earlier");
    };
    switch (l.kind) {
      case CLKind::ODE:
        if (l.mode != "R" || l.r2 != NOREF || l.has_imm)
          throw Error("line " + std::to_string(i) + ": malformed ODE line");
        check_ref(l.r1, false);
        if (l.r1 == TREF) throw Error("line " + std::to_string(i) + ": ODE line cannot output t");
        break;
      case CLKind::ALG: {
        if (l.op != "add" && l.op != "sub" && l.op != "mul" && l.op != "div")
          throw Error("line " + std::to_string(i) + ": unknown op '" + l.op + "'");
        if (l.mode != "RR" && l.mode != "RI" && l.mode != "IR")
          throw Error("line " + std::to_string(i) + ": bad mode '" + l.mode + "'");
        const bool aR = l.mode[0] == 'R', bR = l.mode[1] == 'R';
        if (aR) check_ref(l.r1, true); else if (l.r1 != NOREF)
          throw Error("line " + std::to_string(i) + ": stray r1");
        if (bR) check_ref(l.r2, true); else if (l.r2 != NOREF)
          throw Error("line " + std::to_string(i) + ": stray r2");
        if (l.has_imm == (aR && bR))
          throw Error("line " + std::to_string(i) + ": imm presence disagrees with mode");
        if (l.param_ref >= int(params.size()))
          throw Error("line " + std::to_string(i) + ": dangling parameter slot");
        break;
      }
      case CLKind::SUB: {
        const int b = block_of[std::size_t(i - 1)];
        if (b < 0) throw Error("line " + std::to_string(i) + ": SUB line outside any block");
        const SubBlock& sb = blocks[std::size_t(b)];
        if (l.mode != "RR") throw Error("line " + std::to_string(i) + ": SUB mode must be RR");
        // The input must predate the block: its order-k coefficient is read
        // during sweep k. The h reference may land anywhere (h is read only
        // at orders below the sweep).
        if (l.r2 != TREF && (l.r2 < 1 || l.r2 >= sb.start))
          throw Error("line " + std::to_string(i) + ": SUB input must precede its block");
        check_ref(l.r1, false);
        if (l.r1 == TREF) throw Error("line " + std::to_string(i) + ": SUB h-ref cannot be t");
        const bool head = i == sb.start;
        if (head != !l.op.empty())
          throw Error("line " + std::to_string(i) + ": SUB op must sit on the block head only");
        break;
      }
    }
  }

  void validate_blocks() const {
    std::vector<int> seen(std::size_t(size()), -1);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const SubBlock& sb = blocks[b];
      if (sb.start < 1 || sb.start + sb.m - 1 > size())
        throw Error("block " + std::to_string(b) + " out of range");
      for (int c = 0; c < sb.m; ++c) {
        const int i = sb.start + c;
        if (line(i).kind != CLKind::SUB)
          throw Error("block " + std::to_string(b) + " spans a non-SUB line");
        if (block_of[std::size_t(i - 1)] != int(b))
          throw Error("block " + std::to_string(b) + " membership mismatch");
        if (line(i).r2 != line(sb.start).r2)
          throw Error("block " + std::to_string(b) + " components disagree on their input");
        seen[std::size_t(i - 1)] = int(b);
      }
    }
    for (int i = 1; i <= size(); ++i)
      if ((line(i).kind == CLKind::SUB) != (seen[std::size_t(i - 1)] >= 0))
        throw Error("line " + std::to_string(i) + ": block coverage mismatch");
  }
};

}  // namespace tsode
