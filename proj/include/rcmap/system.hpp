// system.hpp — the perturbed-doubling family on the circle, its standing
// hypotheses, and the numerical certification of those hypotheses.
//
// The fibre maps are degree-k circle endomorphisms driven by an irrational
// rotation in the base:
//
//   lift(omega, x) = k*x + a*sin(2*pi*x) + eps*sin(2*pi*(x + omega))
//
// The periodic terms are evaluated on wrapped arguments, so they repeat
// bitwise under x -> x + 1 and the degree identity lift(x+1) = lift(x) + k
// rests on the linear part alone.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "rcmap/circle.hpp"

namespace rcmap {

struct RandomMapFamily {
  int k = 2;            // topological degree (>= 2)
  double a = 0.02;      // amplitude of the autonomous sine term
  double eps = 0.01;    // noise coupling amplitude
  double delta0 = 0.2;  // noise-stability radius; must stay < (1 - 1/k)/2
  double eta = 0.06;    // C0 closeness budget; must stay < min(1/2, (lambda-1)*delta0)
  // Contracting interval B (lift coordinates) around the random fixed point;
  // every fibre map must expand it across itself.
  double box_lo = -0.1;
  double box_hi = 0.1;
  RotationBase base = RotationBase::make(0.6180339887498949, 0.0);
  double solver_tol = 1e-12;  // absolute tolerance for inverse-branch solves

  // The 1-periodic displacement of the lift. Evaluated on wrapped
  // arguments, so it returns bitwise-identical values at x and x + 1: the
  // degree identity lift(x+1) = lift(x) + k then holds with the linear part
  // k*x carrying the whole non-periodic content.
  double periodic_part(u64 omega, double fx) const {
    double w = fix_to_double(omega);
    return a * sin2pi(fx) + eps * sin2pi(wrap01(fx + w));
  }

  // Lift of the fibre map over noise state omega, evaluated at lift
  // coordinate x.
  double lift(u64 omega, double x) const { return k * x + periodic_part(omega, wrap01(x)); }

  // d/dx of the lift; 1-periodic in x.
  double lift_deriv(u64 omega, double x) const {
    double w = fix_to_double(omega);
    double fx = wrap01(x);
    constexpr double tau = 2.0 * std::numbers::pi;
    return k + tau * a * cos2pi(fx) + tau * eps * cos2pi(wrap01(fx + w));
  }

  // The fibre map as a circle map.
  double map_point(u64 omega, double x) const { return wrap01(lift(omega, x)); }

  // inf of the noiseless derivative; exact for the sine lift.
  double lambda0_exact() const { return k - 2.0 * std::numbers::pi * a; }

  // Certified expansion rate used by every bound downstream.
  double lambda() const { return 0.5 * (lambda0_exact() + 1.0); }

  // Lipschitz constant of the lift in x (upper bound, exact for this form).
  double lip_x() const { return k + 2.0 * std::numbers::pi * (a + eps); }

  double box_width() const { return box_hi - box_lo; }
  double box_mid() const { return 0.5 * (box_lo + box_hi); }

  // Identity of the family (and of the exactness-relevant solver setting);
  // memo and disk-cache keys start from this.
  u64 hash() const {
    u64 h = fnv1a_pod(k);
    h = fnv1a_pod(a, h);
    h = fnv1a_pod(eps, h);
    h = fnv1a_pod(delta0, h);
    h = fnv1a_pod(eta, h);
    h = fnv1a_pod(box_lo, h);
    h = fnv1a_pod(box_hi, h);
    h = fnv1a_pod(base.alpha, h);
    h = fnv1a_pod(base.omega0, h);
    h = fnv1a_pod(solver_tol, h);
    return h;
  }
};

// Result of certifying the standing hypotheses on a family. `violation`
// names the first failed constraint ("" when all hold); the numeric fields
// are reported either way.
struct HypothesisReport {
  bool ok = false;
  std::string violation;
  double lambda0_certified = 0.0;  // grid-certified inf of the noiseless derivative
  double lambda0_exact = 0.0;      // closed form k - 2*pi*a
  double lambda = 0.0;             // (lambda0_exact + 1)/2
  double inf_deriv_certified = 0.0;  // certified inf over (omega, x) of the noisy derivative
  double eps0 = 0.0;               // strict upper bound on admissible eps for these (k, a, eta)
  double sup_c0_distance = 0.0;    // certified sup_omega d_C0(f_eps(omega), f_0)
  double degree_defect = 0.0;      // max sampled |lift(x+1) - lift(x) - k|
  double box_margin = 0.0;         // min expansion clearance of B across omega
};

// Certify the standing hypotheses on a derivative grid of `n_omega` noise
// samples by `n_x` space samples, with Lipschitz slack from the second
// derivative bound |d2 lift / dx2| <= (2*pi)^2 * (a + eps) (and the matching
// omega-derivative bound (2*pi)^2 * eps for the omega direction).
inline HypothesisReport validate_hypotheses(const RandomMapFamily& fam,
                                            int n_omega = 1000, int n_x = 10000) {
  constexpr double tau = 2.0 * std::numbers::pi;
  HypothesisReport rep;
  rep.lambda0_exact = fam.lambda0_exact();
  rep.lambda = fam.lambda();

  auto fail = [&](const char* name) {
    if (rep.violation.empty()) rep.violation = name;
  };

  if (fam.k < 2) fail("degree_at_least_two");
  if (!(fam.box_lo < fam.box_hi)) fail("box_nonempty");
  if (!(fam.a >= 0.0 && fam.eps >= 0.0)) fail("nonnegative_amplitudes");

  // Degree identity, sampled; exact by construction, so any nonzero defect
  // is a real bug rather than roundoff.
  {
    // The linear part carries k*(x+1) - k*x = k by real arithmetic; the
    // computational content of the degree identity is that the periodic
    // displacement repeats bit for bit. Dyadic samples keep x and x+1 both
    // exact, so the sampled defect must be exactly zero.
    double worst = 0.0;
    for (int i = 0; i < 257; ++i) {
      double x = static_cast<double>(i - 128) / 128.0;
      u64 w = fam.base.at(i);
      double d = std::fabs(fam.periodic_part(w, wrap01(x + 1.0)) -
                           fam.periodic_part(w, wrap01(x)));
      worst = std::max(worst, d);
    }
    rep.degree_defect = worst;
    if (worst != 0.0) fail("degree_identity");
  }

  // Noiseless derivative, grid plus Lipschitz slack in x.
  {
    RandomMapFamily f0 = fam;
    f0.eps = 0.0;
    double hx = 1.0 / n_x;
    double slack = tau * tau * fam.a * (hx / 2.0);
    double lo = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_x; ++i) lo = std::min(lo, f0.lift_deriv(0, (i + 0.5) * hx));
    rep.lambda0_certified = lo - slack;
    if (!(rep.lambda0_certified > 1.0)) fail("noiseless_expansion");
  }

  // Parameter-range constraints on delta0 and eta.
  double delta0_cap = 0.5 * (1.0 - 1.0 / fam.k);
  if (!(fam.delta0 > 0.0 && fam.delta0 < delta0_cap)) fail("delta0_range");
  double eta_cap = std::min(0.5, (rep.lambda - 1.0) * fam.delta0);
  if (!(fam.eta > 0.0 && fam.eta < eta_cap)) fail("eta_range");

  // C0 distance to the noiseless member: sup_x |eps * sin(...)| = eps,
  // certified on a grid with Lipschitz slack. Checked before the noisy
  // expansion grid: an oversized coupling is a closeness violation first.
  {
    int n = 4096;
    double h = 1.0 / n;
    double hi = 0.0;
    for (int i = 0; i < n; ++i) hi = std::max(hi, std::fabs(fam.eps * sin2pi(i * h)));
    rep.sup_c0_distance = hi + tau * fam.eps * (h / 2.0);
    if (!(rep.sup_c0_distance < fam.eta)) fail("c0_distance_below_eta");
  }

  // Full derivative grid: inf over (omega, x) with slack in both directions.
  {
    double hx = 1.0 / n_x;
    double hw = 1.0 / n_omega;
    double slack = tau * tau * (fam.a + fam.eps) * (hx / 2.0) +
                   tau * tau * fam.eps * (hw / 2.0);
    double lo = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n_omega; ++j) {
      u64 w = fix_from_double((j + 0.5) * hw);
      for (int i = 0; i < n_x; ++i)
        lo = std::min(lo, fam.lift_deriv(w, (i + 0.5) * hx));
    }
    rep.inf_deriv_certified = lo - slack;
    if (!(rep.inf_deriv_certified >= rep.lambda)) fail("expansion_above_lambda");
  }

  // The contracting interval: width within delta0, and strictly expanded
  // across itself by every fibre map.
  {
    if (!(fam.box_width() <= fam.delta0)) fail("box_width");
    double hw = 1.0 / n_omega;
    double slack = tau * fam.eps * (hw / 2.0);
    double top_min = std::numeric_limits<double>::infinity();
    double bot_max = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n_omega; ++j) {
      u64 w = fix_from_double((j + 0.5) * hw);
      top_min = std::min(top_min, fam.lift(w, fam.box_hi));
      bot_max = std::max(bot_max, fam.lift(w, fam.box_lo));
    }
    double m = std::min(top_min - slack - fam.box_hi, fam.box_lo - (bot_max + slack));
    rep.box_margin = m;
    if (!(m > 0.0)) fail("box_expansion");
  }

  // Strict cap on admissible noise amplitude for this (k, a, eta):
  // the C0 constraint gives eps < eta, the expansion constraint gives
  // eps < (lambda0 - 1)/(4*pi), and the box must keep a positive margin.
  {
    double expansion_cap = (rep.lambda0_exact - 1.0) / (2.0 * tau);
    double box_cap = std::min((fam.k - 1.0) * fam.box_hi - fam.a * std::fabs(sin2pi(fam.box_hi)),
                              (fam.k - 1.0) * (-fam.box_lo) - fam.a * std::fabs(sin2pi(fam.box_lo)));
    rep.eps0 = std::min({fam.eta, expansion_cap, box_cap});
  }

  rep.ok = rep.violation.empty();
  return rep;
}

// Throwing wrapper for call sites that cannot proceed on a bad family.
inline HypothesisReport require_valid(const RandomMapFamily& fam,
                                      int n_omega = 1000, int n_x = 10000) {
  HypothesisReport rep = validate_hypotheses(fam, n_omega, n_x);
  if (!rep.ok) throw Error(Errc::invalid_family, "hypothesis failed: " + rep.violation);
  return rep;
}

}  // namespace rcmap
