#pragma once

// Signature matrices, transversals, and offsets.
//
// sigma(i,j) is the highest derivative order of variable j occurring in
// equation i, or "absent". A transversal picks one entry per row and
// column; a highest-value transversal (HVT) maximizes the entry sum. An
// offset pair (c, d) of non-negative integers is weakly valid when
// d_j - c_i >= sigma(i,j) everywhere, and valid when additionally some
// transversal meets d_j - c_i = sigma(i,j) in every position. Weakly valid
// offsets satisfy sum(d) - sum(c) >= HVT value, with equality exactly on
// the valid ones; the canonical pair is the elementwise-least valid one.

#include <algorithm>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tsode/errors.hpp"

namespace tsode {

// Sentinel for "variable absent from equation". Quarter of INT_MIN so
// sums of two sentinels cannot wrap.
inline constexpr int NINF = std::numeric_limits<int>::min() / 4;

inline bool sigma_finite(int v) { return v > NINF / 2; }

struct SigmaMatrix {
  int n = 0;
  std::vector<int> e;

  SigmaMatrix() = default;
  explicit SigmaMatrix(int size) : n(size), e(std::size_t(size) * std::size_t(size), NINF) {}

  int at(int i, int j) const { return e[std::size_t(i) * std::size_t(n) + std::size_t(j)]; }
  int& at(int i, int j) { return e[std::size_t(i) * std::size_t(n) + std::size_t(j)]; }
  bool finite(int i, int j) const { return sigma_finite(at(i, j)); }

  bool operator==(const SigmaMatrix& o) const { return n == o.n && e == o.e; }
};

struct Transversal {
  std::vector<int> col_of_row;  // col_of_row[i] = j
  long long value = 0;
};

struct Offsets {
  std::vector<int> c, d;

  bool operator==(const Offsets& o) const { return c == o.c && d == o.d; }

  long long value() const {
    long long v = 0;
    for (int x : d) v += x;
    for (int x : c) v -= x;
    return v;
  }
};

// Highest-value transversal by exact linear assignment (shortest augmenting
// paths with potentials on the negated matrix). Throws StructurallyIllPosed
// when no finite transversal exists.
inline Transversal hvt(const SigmaMatrix& s) {
  const int n = s.n;
  if (n < 1) throw Error("empty signature matrix");
  constexpr long long BIG = 1000000000000LL;  // stands in for "absent"
  constexpr long long INF = std::numeric_limits<long long>::max() / 4;
  auto cost = [&](int i, int j) -> long long {
    return s.finite(i, j) ? -(long long)s.at(i, j) : BIG;
  };
  // 1-based with a dummy column 0, the classic potentials formulation.
  std::vector<long long> u(std::size_t(n) + 1, 0), v(std::size_t(n) + 1, 0);
  std::vector<int> p(std::size_t(n) + 1, 0), way(std::size_t(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<long long> minv(std::size_t(n) + 1, INF);
    std::vector<char> used(std::size_t(n) + 1, 0);
    do {
      used[std::size_t(j0)] = 1;
      const int i0 = p[std::size_t(j0)];
      int j1 = -1;
      long long delta = INF;
      for (int j = 1; j <= n; ++j)
        if (!used[std::size_t(j)]) {
          const long long cur = cost(i0 - 1, j - 1) - u[std::size_t(i0)] - v[std::size_t(j)];
          if (cur < minv[std::size_t(j)]) {
            minv[std::size_t(j)] = cur;
            way[std::size_t(j)] = j0;
          }
          if (minv[std::size_t(j)] < delta) {
            delta = minv[std::size_t(j)];
            j1 = j;
          }
        }
      for (int j = 0; j <= n; ++j) {
        if (used[std::size_t(j)]) {
          u[std::size_t(p[std::size_t(j)])] += delta;
          v[std::size_t(j)] -= delta;
        } else {
          minv[std::size_t(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[std::size_t(j0)] != 0);
    do {
      const int j1 = way[std::size_t(j0)];
      p[std::size_t(j0)] = p[std::size_t(j1)];
      j0 = j1;
    } while (j0);
  }
  Transversal t;
  t.col_of_row.assign(std::size_t(n), -1);
  for (int j = 1; j <= n; ++j) t.col_of_row[std::size_t(p[std::size_t(j)] - 1)] = j - 1;
  for (int i = 0; i < n; ++i) {
    const int j = t.col_of_row[std::size_t(i)];
    if (!s.finite(i, j))
      throw StructurallyIllPosed("no finite transversal: signature matrix is structurally singular");
    t.value += s.at(i, j);
  }
  return t;
}

inline long long transversal_value(const SigmaMatrix& s, const Transversal& t) {
  long long v = 0;
  for (int i = 0; i < s.n; ++i) v += s.at(i, t.col_of_row[std::size_t(i)]);
  return v;
}

// The elementwise-least valid pair, by fixed-point iteration around an HVT:
//   c := 0
//   repeat  d_j := max_i (sigma_ij + c_i);  c_i := d_{T(i)} - sigma_{i,T(i)}
// Non-decreasing and bounded, hence convergent; the limit is valid,
// normalized (min c = 0), and least among valid pairs.
inline Offsets canonical_offsets(const SigmaMatrix& s, const Transversal& t) {
  const int n = s.n;
  Offsets off;
  off.c.assign(std::size_t(n), 0);
  off.d.assign(std::size_t(n), 0);
  for (int iter = 0;; ++iter) {
    if (iter > 100 * n + 100) throw Error("offset iteration failed to converge");
    for (int j = 0; j < n; ++j) {
      int best = 0;  // every column is hit by the HVT, so max is over a non-empty set
      bool any = false;
      for (int i = 0; i < n; ++i)
        if (s.finite(i, j)) {
          const int v = s.at(i, j) + off.c[std::size_t(i)];
          if (!any || v > best) best = v;
          any = true;
        }
      off.d[std::size_t(j)] = best;
    }
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const int j = t.col_of_row[std::size_t(i)];
      const int v = std::max(0, off.d[std::size_t(j)] - s.at(i, j));
      if (v != off.c[std::size_t(i)]) {
        off.c[std::size_t(i)] = v;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return off;
}

inline Offsets canonical_offsets(const SigmaMatrix& s) { return canonical_offsets(s, hvt(s)); }

// d_j - c_i >= sigma_ij everywhere, offsets non-negative. On failure
// reports the first offending (i, j) through viol when given.
inline bool is_weakly_valid(const SigmaMatrix& s, const Offsets& off,
                            std::pair<int, int>* viol = nullptr) {
  const int n = s.n;
  for (int i = 0; i < n; ++i)
    if (off.c[std::size_t(i)] < 0) {
      if (viol) *viol = {i, -1};
      return false;
    }
  for (int j = 0; j < n; ++j)
    if (off.d[std::size_t(j)] < 0) {
      if (viol) *viol = {-1, j};
      return false;
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (s.finite(i, j) && off.d[std::size_t(j)] - off.c[std::size_t(i)] < s.at(i, j)) {
        if (viol) *viol = {i, j};
        return false;
      }
  return true;
}

// True where the weak-validity inequality is tight.
inline std::vector<char> equality_mask(const SigmaMatrix& s, const Offsets& off) {
  const int n = s.n;
  std::vector<char> m(std::size_t(n) * std::size_t(n), 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (s.finite(i, j) && off.d[std::size_t(j)] - off.c[std::size_t(i)] == s.at(i, j))
        m[std::size_t(i) * std::size_t(n) + std::size_t(j)] = 1;
  return m;
}

// Kuhn's augmenting-path matching: is there a transversal inside the mask?
// Deliberately a different algorithm from hvt, so the two validate each
// other in tests.
inline bool mask_has_transversal(int n, const std::vector<char>& mask) {
  std::vector<int> match_col(std::size_t(n), -1);
  std::vector<char> seen;
  std::function<bool(int)> try_row = [&](int i) -> bool {
    for (int j = 0; j < n; ++j) {
      if (!mask[std::size_t(i) * std::size_t(n) + std::size_t(j)] || seen[std::size_t(j)]) continue;
      seen[std::size_t(j)] = 1;
      if (match_col[std::size_t(j)] < 0 || try_row(match_col[std::size_t(j)])) {
        match_col[std::size_t(j)] = i;
        return true;
      }
    }
    return false;
  };
  for (int i = 0; i < n; ++i) {
    seen.assign(std::size_t(n), 0);
    if (!try_row(i)) return false;
  }
  return true;
}

// Weakly valid and tight along some transversal.
inline bool is_valid(const SigmaMatrix& s, const Offsets& off) {
  if (!is_weakly_valid(s, off)) return false;
  return mask_has_transversal(s.n, equality_mask(s, off));
}

// Grid rendering with the offsets in the margins, "-" for absent entries.
inline std::string render_sigma(const SigmaMatrix& s, const Offsets* off = nullptr,
                                const std::vector<std::string>* col_names = nullptr,
                                const std::vector<std::string>* row_names = nullptr) {
  const int n = s.n;
  auto col_name = [&](int j) {
    return col_names ? (*col_names)[std::size_t(j)] : "x" + std::to_string(j + 1);
  };
  auto row_name = [&](int i) {
    return row_names ? (*row_names)[std::size_t(i)] : "f" + std::to_string(i + 1);
  };
  std::size_t rw = 0;
  for (int i = 0; i < n; ++i) rw = std::max(rw, row_name(i).size());
  std::vector<int> cw(std::size_t(n), 1);
  for (int j = 0; j < n; ++j) {
    cw[std::size_t(j)] = int(col_name(j).size());
    for (int i = 0; i < n; ++i) {
      const std::string cell = s.finite(i, j) ? std::to_string(s.at(i, j)) : "-";
      cw[std::size_t(j)] = std::max(cw[std::size_t(j)], int(cell.size()));
    }
    if (off) cw[std::size_t(j)] = std::max(cw[std::size_t(j)], int(std::to_string(off->d[std::size_t(j)]).size()));
  }
  std::ostringstream os;
  auto pad = [&](const std::string& txt, int w) {
    for (int k = int(txt.size()); k < w; ++k) os << ' ';
    os << txt;
  };
  pad("", int(rw) + 2);
  for (int j = 0; j < n; ++j) {
    os << ' ';
    pad(col_name(j), cw[std::size_t(j)]);
  }
  os << '\n';
  for (int i = 0; i < n; ++i) {
    pad(row_name(i), int(rw));
    os << " [";
    for (int j = 0; j < n; ++j) {
      os << ' ';
      pad(s.finite(i, j) ? std::to_string(s.at(i, j)) : "-", cw[std::size_t(j)]);
    }
    os << " ]";
    if (off) os << "  c = " << off->c[std::size_t(i)];
    os << '\n';
  }
  if (off) {
    pad("d =", int(rw) + 2);
    for (int j = 0; j < n; ++j) {
      os << ' ';
      pad(std::to_string(off->d[std::size_t(j)]), cw[std::size_t(j)]);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace tsode
