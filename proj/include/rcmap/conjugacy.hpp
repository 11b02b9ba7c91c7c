// conjugacy.hpp — inverse branches of the monotone lift, the random fixed
// point by pullback, and the noise-dependent change of coordinates that
// straightens the family onto the pure k-folding map.
//
// Everything here is built from one primitive: solving lift(omega, y) = z on
// a bracket where the lift is strictly increasing. Long compositions are
// always taken backward in time (pullback), which contracts errors by 1/λ
// per step; forward compositions are never iterated at length.
#pragma once

#include <cstdio>
#include <memory>
#include <mutex>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "rcmap/system.hpp"

namespace rcmap {

// ---------------------------------------------------------------------------
// Root solve
// ---------------------------------------------------------------------------

// Solve lift(omega, y) = z for y in [lo, hi], where the bracket satisfies
// lift(lo) <= z <= lift(hi). Safeguarded Newton: every iterate keeps a valid
// bracket, Newton steps that leave it are replaced by bisection. Returns y
// with |lift(omega, y) - z| <= lambda * solver_tol.
inline double inverse_branch(const RandomMapFamily& fam, u64 omega, double z,
                             double lo, double hi) {
  const double goal = 0.5 * fam.lambda() * fam.solver_tol;
  double y = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double r = fam.lift(omega, y) - z;
    if (std::fabs(r) <= goal) return y;
    if (r > 0.0) hi = y; else lo = y;
    double step = r / fam.lift_deriv(omega, y);
    double yn = y - step;
    if (!(yn > lo && yn < hi)) yn = 0.5 * (lo + hi);
    if (yn == y) return y;  // bracket exhausted at roundoff level
    y = yn;
  }
  throw Error(Errc::solver_budget, "inverse_branch: iteration budget exhausted");
}

// Branch-selected inverse: the preimage of circle-lift value z that lies in
// the s-th fundamental window [base, base+1). Solves lift(y) = z + s on
// [base, base+1].
inline double inverse_branch_digit(const RandomMapFamily& fam, u64 omega, double z,
                                   int s, double base) {
  return inverse_branch(fam, omega, z + s, base, base + 1.0);
}

// ---------------------------------------------------------------------------
// Random fixed point
// ---------------------------------------------------------------------------

// Shared memo for fixed-point pullbacks (and a small grid cache); safe for
// concurrent use. Keys mix the family hash, so one cache can serve several
// families, though callers typically keep one per run.
struct WorkCache {
  std::mutex mu;
  std::unordered_map<u64, double> p_memo;
};

// Contraction depth that puts the pullback within `tol` of the true fixed
// point: lambda^-depth * |B| <= tol.
inline int fixed_point_depth(const RandomMapFamily& fam, double tol = 1e-10) {
  double need = std::log(fam.box_width() / tol) / std::log(fam.lambda());
  return std::max(1, static_cast<int>(std::ceil(need)));
}

// One pullback step of the fixed-point branch: the preimage of z (a lift
// value inside B) under lift(omega, .), taken inside B itself.
inline double fixed_point_pullback(const RandomMapFamily& fam, u64 omega, double z) {
  return inverse_branch(fam, omega, z, fam.box_lo, fam.box_hi);
}

// The random fixed point p(omega), computed by composing `depth` inverse
// branches backward from the midpoint of B:
//
//   p_depth(omega) = F(omega) ∘ F(theta omega) ∘ … ∘ F(theta^{depth-1} omega)(mid B)
//
// with |p_depth - p| <= lambda^-depth * |B|. Memoised on
// (family hash, omega, depth) when a cache is supplied.
inline double random_fixed_point(const RandomMapFamily& fam, u64 omega,
                                 int depth = -1, WorkCache* cache = nullptr) {
  if (depth < 0) depth = fixed_point_depth(fam);
  u64 key = 0;
  if (cache) {
    key = fnv1a_pod(fam.hash());
    key = fnv1a_pod(omega, key);
    key = fnv1a_pod(depth, key);
    std::lock_guard<std::mutex> g(cache->mu);
    auto it = cache->p_memo.find(key);
    if (it != cache->p_memo.end()) return it->second;
  }
  double y = fam.box_mid();
  for (int t = depth - 1; t >= 0; --t)
    y = fixed_point_pullback(fam, fam.base.step(omega, t), y);
  if (cache) {
    std::lock_guard<std::mutex> g(cache->mu);
    cache->p_memo.emplace(key, y);
  }
  return y;
}

// |lift(omega, p(omega)) - p(theta omega)|; by the contraction estimate this
// is at most 2 * lambda^-depth * |B| plus solver slack.
inline double fixed_point_residual(const RandomMapFamily& fam, u64 omega,
                                   int depth = -1, WorkCache* cache = nullptr) {
  double p0 = random_fixed_point(fam, omega, depth, cache);
  double p1 = random_fixed_point(fam, fam.base.step(omega), depth, cache);
  return std::fabs(fam.lift(omega, p0) - p1);
}

// ---------------------------------------------------------------------------
// The straightening grid
// ---------------------------------------------------------------------------

// Hard cap on grid size: k^level <= 65536 (level <= 16 at k = 2).
constexpr i64 kGridBudget = 65536;

// Level-n images of the dyadic (k-adic) grid under the straightening map:
// lifts[j] is the lift value of h(omega)(j / k^n), increasing from p(omega)
// to p(omega) + 1. Piecewise-linear interpolation between the nodes is the
// computable approximation h_n with |h_n - h| <= lambda^-n.
struct ConjugacyGrid {
  int k = 2;
  int level = 0;
  u64 omega = 0;
  int p_depth = 0;
  u64 family_hash = 0;
  std::vector<double> lifts;  // size k^level + 1
  double max_gap = 0.0;

  i64 cells() const { return static_cast<i64>(lifts.size()) - 1; }

  // Lift of the interpolant; satisfies h(x+1) = h(x) + 1 by construction.
  double h_eval(double x) const {
    double fx = wrap01(x);
    double whole = x - fx;
    double t = fx * static_cast<double>(cells());
    i64 j = static_cast<i64>(t);
    if (j >= cells()) j = cells() - 1;
    double u = t - static_cast<double>(j);
    return whole + lifts[static_cast<std::size_t>(j)] * (1.0 - u) +
           lifts[static_cast<std::size_t>(j) + 1] * u;
  }
  double point(double x) const { return wrap01(h_eval(x)); }
};

// Build the level-n grid at noise state omega by the branch recursion: the
// level-(m+1) grid at omega' is the inverse image, under lift(omega', .),
// of (level-m grid at theta omega') + digit, descending from the fixed-point
// interval [p(theta^n omega), p(theta^n omega) + 1].
inline ConjugacyGrid conjugacy_grid(const RandomMapFamily& fam, u64 omega, int level,
                                    WorkCache* cache = nullptr) {
  if (level < 0) throw Error(Errc::bad_config, "conjugacy_grid: negative level");
  i64 size = 1;
  for (int m = 0; m < level; ++m) {
    size *= fam.k;
    if (size > kGridBudget)
      throw Error(Errc::budget_exceeded, "conjugacy_grid: k^level exceeds grid budget");
  }

  ConjugacyGrid g;
  g.k = fam.k;
  g.level = level;
  g.omega = omega;
  g.p_depth = fixed_point_depth(fam);
  g.family_hash = fam.hash();

  // Fixed points p(theta^m omega), m = 0..level: one deep pullback at the
  // top, then one contracting solve per step down.
  std::vector<double> pvals(static_cast<std::size_t>(level) + 1);
  pvals[static_cast<std::size_t>(level)] =
      random_fixed_point(fam, fam.base.step(omega, level), g.p_depth, cache);
  for (int m = level - 1; m >= 0; --m)
    pvals[static_cast<std::size_t>(m)] = fixed_point_pullback(
        fam, fam.base.step(omega, m), pvals[static_cast<std::size_t>(m) + 1]);

  std::vector<double> cur = {pvals[static_cast<std::size_t>(level)],
                             pvals[static_cast<std::size_t>(level)] + 1.0};
  std::vector<double> next;
  i64 width = 1;
  for (int m = 0; m < level; ++m) {
    u64 w = fam.base.step(omega, level - 1 - m);
    i64 nw = width * fam.k;
    next.assign(static_cast<std::size_t>(nw) + 1, 0.0);
    next[0] = pvals[static_cast<std::size_t>(level - 1 - m)];
    double top = next[0] + 1.0;
    for (i64 idx = 1; idx < nw; ++idx) {
      i64 digit = idx / width;
      i64 j1 = idx % width;
      double z = cur[static_cast<std::size_t>(j1)] + static_cast<double>(digit);
      next[static_cast<std::size_t>(idx)] =
          inverse_branch(fam, w, z, next[static_cast<std::size_t>(idx) - 1], top);
    }
    next[static_cast<std::size_t>(nw)] = top;
    cur.swap(next);
    width = nw;
  }

  g.lifts = std::move(cur);
  double bound = std::pow(fam.lambda(), -level) + 1e-9;
  for (std::size_t j = 0; j + 1 < g.lifts.size(); ++j) {
    double gap = g.lifts[j + 1] - g.lifts[j];
    if (!(gap > 0.0))
      throw Error(Errc::invalid_family, "conjugacy_grid: grid not strictly increasing");
    if (gap > bound)
      throw Error(Errc::invalid_family, "conjugacy_grid: cell exceeds certified bound");
    g.max_gap = std::max(g.max_gap, gap);
  }
  return g;
}

// Sampled sup over x of the circle distance between h_n(theta omega)(k x)
// and f(omega, h_n(omega)(x)) — the defect of the straightening equation at
// finite level. Decays like lambda^-n.
inline double conjugacy_residual(const RandomMapFamily& fam, u64 omega, int level,
                                 int samples = 4096, WorkCache* cache = nullptr) {
  ConjugacyGrid g0 = conjugacy_grid(fam, omega, level, cache);
  ConjugacyGrid g1 = conjugacy_grid(fam, fam.base.step(omega), level, cache);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    double x = static_cast<double>(i) / samples;
    double lhs = g1.point(fam.k * x);
    double rhs = wrap01(fam.lift(omega, g0.h_eval(x)));
    worst = std::max(worst, circle_dist(lhs, rhs));
  }
  return worst;
}

// Sampled sup_j |a_j(omega) - a_j(omega')| over the shared grid indices —
// the noise-stability distance between two straightenings at the same level.
inline double grid_noise_distance(const ConjugacyGrid& A, const ConjugacyGrid& B) {
  double worst = 0.0;
  for (std::size_t j = 0; j < A.lifts.size() && j < B.lifts.size(); ++j)
    worst = std::max(worst, std::fabs(A.lifts[j] - B.lifts[j]));
  return worst;
}

// CSV: one comment header carrying the provenance, then (j, a_j_lift) rows.
inline void write_grid_csv(std::ostream& os, const ConjugacyGrid& g) {
  char head[160];
  std::snprintf(head, sizeof head,
                "# omega=%.17g, level=%d, p_depth=%d, family=%016llx\n",
                fix_to_double(g.omega), g.level, g.p_depth,
                static_cast<unsigned long long>(g.family_hash));
  os << head << "j,a_j_lift\n";
  char row[64];
  for (std::size_t j = 0; j < g.lifts.size(); ++j) {
    std::snprintf(row, sizeof row, "%zu,%.17g\n", j, g.lifts[j]);
    os << row;
  }
}

}  // namespace rcmap
