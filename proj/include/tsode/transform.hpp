#pragma once

// Structural transforms on signature matrices with offsets.
//
// dif_r: differentiate equation r (possibly several times). Row r's finite
// entries shift up; the offsets follow the rule "subtract from c_r, then
// shift everything up if some c went negative", preserving the HVT set and
// validity while the transversal value grows by the same count.
//
// extract_subexpr: pull a subexpression with signature row psi out of the
// equations in R into a new variable/equation pair, growing the system by
// one. Replacement is total: an entry of a row in R survives only where
// the row depends on the variable at higher order than psi does.

#include <algorithm>
#include <string>
#include <vector>

#include "tsode/errors.hpp"
#include "tsode/sigma.hpp"

namespace tsode {

struct TransformResult {
  SigmaMatrix sigma;
  Offsets offsets;
};

// Pre: offsets valid for s (not merely weakly valid), row is 0-based,
// times >= 1.
inline TransformResult dif_r(const SigmaMatrix& s, const Offsets& off, int row, int times = 1) {
  const int n = s.n;
  if (row < 0 || row >= n) throw Error("dif_r: row out of range");
  if (times < 1) throw Error("dif_r: times must be positive");
  const long long val_before = hvt(s).value;

  TransformResult out{s, off};
  for (int j = 0; j < n; ++j)
    if (out.sigma.finite(row, j)) out.sigma.at(row, j) += times;
  out.offsets.c[std::size_t(row)] -= times;
  int low = 0;
  for (int i = 0; i < n; ++i) low = std::min(low, out.offsets.c[std::size_t(i)]);
  if (low < 0) {
    for (int i = 0; i < n; ++i) out.offsets.c[std::size_t(i)] -= low;
    for (int j = 0; j < n; ++j) out.offsets.d[std::size_t(j)] -= low;
  }

  const long long val_after = hvt(out.sigma).value;
  if (val_after != val_before + times)
    throw Error("dif_r: transversal value moved by " + std::to_string(val_after - val_before) +
                ", expected " + std::to_string(times));
  if (!is_valid(out.sigma, out.offsets))
    throw Error("dif_r: transformed offsets are not valid (were the input offsets valid?)");
  return out;
}

// Pre: psi has one entry per column (NINF where the subexpression does not
// involve the variable); every row in R dominates psi entrywise; offsets
// valid for s. The new variable takes column/row n.
inline TransformResult extract_subexpr(const SigmaMatrix& s, const std::vector<int>& psi,
                                       const std::vector<int>& rows, const Offsets& off) {
  const int n = s.n;
  if (int(psi.size()) != n) throw Error("extract_subexpr: psi size mismatch");
  std::vector<char> in_r(std::size_t(n), 0);
  for (int r : rows) {
    if (r < 0 || r >= n) throw Error("extract_subexpr: row out of range");
    in_r[std::size_t(r)] = 1;
  }
  for (int r : rows)
    for (int j = 0; j < n; ++j)
      if (sigma_finite(psi[std::size_t(j)]) &&
          (!s.finite(r, j) || s.at(r, j) < psi[std::size_t(j)]))
        throw Error("extract_subexpr: row " + std::to_string(r) +
                    " does not dominate psi at column " + std::to_string(j));

  TransformResult out;
  out.sigma = SigmaMatrix(n + 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int v = s.at(i, j);
      if (!sigma_finite(v)) continue;
      if (in_r[std::size_t(i)] && v <= psi[std::size_t(j)]) continue;  // replaced occurrence
      out.sigma.at(i, j) = v;
    }
  for (int r : rows) out.sigma.at(r, n) = 0;
  for (int j = 0; j < n; ++j) out.sigma.at(n, j) = psi[std::size_t(j)];
  out.sigma.at(n, n) = 0;

  out.offsets = off;
  int dn = 0;  // max over an empty R is 0 by convention
  for (int r : rows) dn = std::max(dn, off.c[std::size_t(r)]);
  out.offsets.d.push_back(dn);
  out.offsets.c.push_back(dn);

  if (!is_weakly_valid(out.sigma, out.offsets))
    throw Error("extract_subexpr: trial offsets are not weakly valid");
  return out;
}

}  // namespace tsode
