// historic.hpp — the bump observable, block-length arithmetic, alternating
// block schedules and their composite symbol sequence, Birkhoff-average
// measurement along decoded orbits, the target space-noise integral,
// oscillation reports, past-orbit density and finite witness scans.
//
// All long sums run over fixed 4096-index segments, each segment's orbit
// points produced by one backward pullback chain; partial sums are combined
// by an index-balanced pairwise tree, so results are bit-identical for any
// worker count.
#pragma once

#include <atomic>
#include <cfloat>
#include <cstdio>
#include <ostream>
#include <thread>

#include "rcmap/symbolic.hpp"

namespace rcmap {

// ---------------------------------------------------------------------------
// The bump observable
// ---------------------------------------------------------------------------

// C^1 bump: 1 on J, 0 outside J', cubic smoothstep ramps of width
// `ramp` between. Peak slope 1.5/ramp is reported exactly.
struct BumpObservable {
  CircleInterval J;
  CircleInterval Jp;
  double ramp = 0.0;
  double c0 = 1.0;  // sup |phi|
  double c1 = 0.0;  // sup |phi'| = 1.5 / ramp

  static BumpObservable from_gaps(const GapIntervals& g) {
    BumpObservable b;
    b.J = g.J;
    b.Jp = g.Jp;
    b.ramp = g.ramp_width;
    b.c1 = 1.5 / g.ramp_width;
    return b;
  }

  double eval(double x) const {
    double span = Jp.length();
    double pos = wrap01(x) - wrap01(Jp.lo);
    if (pos < 0.0) pos += 1.0;
    if (pos >= span) return 0.0;
    if (pos < ramp) {
      double t = pos / ramp;
      return t * t * (3.0 - 2.0 * t);
    }
    if (pos <= span - ramp) return 1.0;
    double t = (span - pos) / ramp;
    return t * t * (3.0 - 2.0 * t);
  }
};

// Closed-form integral of the bump against Lebesgue measure: the plateau
// plus two half-ramps (each smoothstep ramp carries half its width).
inline double integral_identity(const BumpObservable& obs) {
  return obs.J.length() + obs.ramp;
}

// ---------------------------------------------------------------------------
// Block lengths and schedules
// ---------------------------------------------------------------------------

// Smallest n >= 2m+2 such that two itineraries agreeing on [m, n-1] have
// half-time Birkhoff averages within rho of each other, for every noise
// state: requires 2*m*c0/floor(n/2) <= rho/2 (the disagreeing head) and
// (floor(n/2) - m) * lambda^(-n/2) * c1 <= rho/2 (the shadowing tail).
inline i64 block_length(i64 m, double rho, const BumpObservable& obs, double lambda) {
  if (!(rho > 0.0 && rho <= 1.0) || m < 0)
    throw Error(Errc::bad_config, "block_length: need m >= 0 and rho in (0, 1]");
  double log_lambda = std::log(lambda);
  // The head condition is monotone in n; start at its threshold instead of
  // scanning billions of candidates. The tail condition is not monotone, so
  // scan upward from there.
  i64 half_min = (m > 0) ? static_cast<i64>(std::ceil(4.0 * m * obs.c0 / rho)) : 0;
  i64 n = std::max<i64>(2 * m + 2, 2 * half_min);
  for (;; ++n) {
    i64 half = n / 2;
    if (half < m + 1) continue;
    if (2.0 * static_cast<double>(m) * obs.c0 / static_cast<double>(half) > rho / 2.0) continue;
    double decay = std::exp(-0.5 * static_cast<double>(n) * log_lambda);
    if (static_cast<double>(half - m) * decay * obs.c1 > rho / 2.0) continue;
    return n;
  }
}

struct BlockCertificate {
  i64 j = 0;               // 1-based block index
  double rho_tilde = 0.0;  // tolerance assigned to this block
  i64 N_prev = 0;
  i64 N = 0;
  bool growth_ok = false;     // N_j >= 6*N_{j-1}/rho_j + 2
  bool head_ok = false;       // N_{j-1}/floor(N_j/2) <= rho_j/3
  bool rev_head_ok = false;   // 2*N_{j-1}*c0/floor(N_j/2) <= rho_j/6
  bool rev_tail_ok = false;   // (floor(N_j/2)-N_{j-1})*lambda^(-N_j/2)*c1 <= rho_j/6
  bool midpoint_ok = false;   // floor(N_j/2) - N_{j-1} >= N_{j-1}
  bool all_ok() const {
    return growth_ok && head_ok && rev_head_ok && rev_tail_ok && midpoint_ok;
  }
};

struct BlockSchedule {
  std::vector<double> rho;  // rho[j-1] is the tolerance of block j
  std::vector<i64> N;       // N[0] = 0 < N[1] < ... boundaries
  std::vector<BlockCertificate> certs;
  i64 blocks() const { return static_cast<i64>(rho.size()); }
  i64 horizon() const { return N.back(); }
};

struct ScheduleBuild {
  BlockSchedule schedule;   // the certified feasible prefix
  std::size_t requested = 0;
  bool exceeded = false;    // true if some block overran the budget
  i64 first_infeasible_N = 0;  // the N that broke the budget (when exceeded)
};

// N_j is the max of the block-length requirement at tolerance rho_j/3, the
// geometric growth floor ceil(6*N_{j-1}/rho_j) + 2, and the smallest n with
// N_{j-1}/floor(n/2) <= rho_j/3. Stops at the first block whose N exceeds
// `budget`, reporting the feasible prefix.
inline ScheduleBuild build_schedule_partial(const BumpObservable& obs, double lambda,
                                            const std::vector<double>& rho_seq,
                                            i64 budget) {
  ScheduleBuild out;
  out.requested = rho_seq.size();
  BlockSchedule& s = out.schedule;
  s.N.push_back(0);
  double prev_rho = 1.0 + 1e-12;
  for (std::size_t idx = 0; idx < rho_seq.size(); ++idx) {
    double rho_j = rho_seq[idx];
    if (!(rho_j > 0.0 && rho_j <= 1.0 && rho_j <= prev_rho))
      throw Error(Errc::bad_config, "build_schedule: tolerances must be nonincreasing in (0, 1]");
    prev_rho = rho_j;
    i64 m = s.N.back();
    i64 n1 = block_length(m, rho_j / 3.0, obs, lambda);
    i64 n2 = static_cast<i64>(std::ceil(6.0 * static_cast<double>(m) / rho_j)) + 2;
    i64 n3 = (m > 0) ? 2 * static_cast<i64>(std::ceil(3.0 * static_cast<double>(m) / rho_j)) : 2;
    i64 N = std::max({n1, n2, n3});
    if (N > budget) {
      out.exceeded = true;
      out.first_infeasible_N = N;
      return out;
    }

    BlockCertificate c;
    c.j = static_cast<i64>(idx) + 1;
    c.rho_tilde = rho_j;
    c.N_prev = m;
    c.N = N;
    i64 half = N / 2;
    c.growth_ok = static_cast<double>(N) >= 6.0 * static_cast<double>(m) / rho_j + 2.0;
    c.head_ok = static_cast<double>(m) / static_cast<double>(half) <= rho_j / 3.0;
    c.rev_head_ok =
        2.0 * static_cast<double>(m) * obs.c0 / static_cast<double>(half) <= rho_j / 6.0;
    c.rev_tail_ok = static_cast<double>(half - m) *
                        std::exp(-0.5 * static_cast<double>(N) * std::log(lambda)) * obs.c1 <=
                    rho_j / 6.0;
    c.midpoint_ok = half - m >= m;
    s.rho.push_back(rho_j);
    s.N.push_back(N);
    s.certs.push_back(c);
  }
  return out;
}

inline BlockSchedule build_schedule(const BumpObservable& obs, double lambda,
                                    const std::vector<double>& rho_seq, i64 budget) {
  ScheduleBuild b = build_schedule_partial(obs, lambda, rho_seq, budget);
  if (b.exceeded) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "build_schedule: block %zu needs N = %lld > budget %lld "
                  "(largest feasible block count: %lld)",
                  b.schedule.rho.size() + 1,
                  static_cast<long long>(b.first_infeasible_N),
                  static_cast<long long>(budget),
                  static_cast<long long>(b.schedule.blocks()));
    throw Error(Errc::budget_exceeded, msg);
  }
  return b.schedule;
}

// The alternating splice: odd blocks read `s_odd`, even blocks `s_even`,
// each restarted at offset 0 at its block's start.
inline SymbolStream build_bar_s(const BlockSchedule& sched, SymbolStream s_odd,
                                SymbolStream s_even) {
  return SymbolStream::block_composite(sched.N, std::move(s_odd), std::move(s_even));
}

// ---------------------------------------------------------------------------
// Birkhoff measurement engine
// ---------------------------------------------------------------------------

struct BirkhoffOptions {
  int depth = 40;     // decode depth per orbit point
  int workers = 1;    // worker count never changes results, only wall time
  i64 segment = 4096; // fixed segmentation unit (absolute indices)
};

// Prefix sums of phi(orbit point) at the requested indices. `checkpoints`
// must be positive and strictly increasing.
struct PrefixSums {
  std::vector<i64> at;
  std::vector<double> sums;
};

namespace detail {

// Evaluate one segment [lo, hi): a single pullback chain from the fixed
// point at theta^(hi-1+d) omega down to index lo, recording phi values.
inline void eval_segment(const RandomMapFamily& fam, u64 omega, const SymbolStream& s,
                         const BumpObservable& obs, int d, i64 lo, i64 hi,
                         double* out /* size hi-lo */) {
  i64 top = hi - 1 + d;
  double y = random_fixed_point(fam, fam.base.step(omega, top));
  for (i64 i = top - 1; i >= lo; --i) {
    y = digit_pullback(fam, fam.base.step(omega, i), y, s.at(i));
    if (i < hi) out[i - lo] = obs.eval(wrap01(y));
  }
}

}  // namespace detail

inline PrefixSums birkhoff_prefix_sums(const RandomMapFamily& fam, u64 omega,
                                       const SymbolStream& s, const BumpObservable& obs,
                                       const std::vector<i64>& checkpoints,
                                       const BirkhoffOptions& opts = {}) {
  PrefixSums out;
  out.at = checkpoints;
  out.sums.assign(checkpoints.size(), 0.0);
  if (checkpoints.empty()) return out;
  for (std::size_t i = 0; i < checkpoints.size(); ++i)
    if (checkpoints[i] < 1 || (i > 0 && checkpoints[i] <= checkpoints[i - 1]))
      throw Error(Errc::bad_config, "birkhoff_prefix_sums: checkpoints must increase from >= 1");

  const i64 SEG = opts.segment;
  const i64 n = checkpoints.back();
  const i64 nseg = (n + SEG - 1) / SEG;
  std::vector<double> seg_sum(static_cast<std::size_t>(nseg), 0.0);
  std::vector<double> cp_partial(checkpoints.size(), 0.0);

  auto run_segment = [&](i64 t, std::vector<double>& buf) {
    i64 lo = t * SEG;
    i64 hi = std::min<i64>(n, lo + SEG);
    buf.resize(static_cast<std::size_t>(hi - lo));
    detail::eval_segment(fam, omega, s, obs, opts.depth, lo, hi, buf.data());
    seg_sum[static_cast<std::size_t>(t)] = pairwise_sum(buf);
    for (std::size_t ci = 0; ci < checkpoints.size(); ++ci) {
      i64 c = checkpoints[ci];
      if (c > lo && c < hi)
        cp_partial[ci] = pairwise_sum(buf, 0, static_cast<std::size_t>(c - lo));
      else if (c == hi)
        cp_partial[ci] = seg_sum[static_cast<std::size_t>(t)];
    }
  };

  int workers = std::max(1, opts.workers);
  if (workers == 1 || nseg == 1) {
    std::vector<double> buf;
    for (i64 t = 0; t < nseg; ++t) run_segment(t, buf);
  } else {
    std::atomic<i64> next{0};
    auto worker = [&]() {
      std::vector<double> buf;
      for (;;) {
        i64 t = next.fetch_add(1);
        if (t >= nseg) break;
        run_segment(t, buf);
      }
    };
    std::vector<std::thread> pool;
    int count = static_cast<int>(std::min<i64>(workers, nseg));
    pool.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Prefix at checkpoint c: pairwise tree over the full segments before it
  // plus the recorded partial inside its own segment.
  for (std::size_t ci = 0; ci < checkpoints.size(); ++ci) {
    i64 c = checkpoints[ci];
    i64 full = c / SEG;  // segments fully below c (when c % SEG == 0, partial == full seg)
    if (c % SEG == 0) {
      out.sums[ci] = pairwise_sum(seg_sum, 0, static_cast<std::size_t>(full));
    } else {
      out.sums[ci] =
          pairwise_sum(seg_sum, 0, static_cast<std::size_t>(full)) + cp_partial[ci];
    }
  }
  return out;
}

// (1/n) * sum_{j<n} phi(decode(theta^j omega, sigma^j s, d)); total error at
// most c1 * lambda^-d + n * machine epsilon.
inline double birkhoff_average(const RandomMapFamily& fam, u64 omega, const SymbolStream& s,
                               const BumpObservable& obs, i64 n,
                               const BirkhoffOptions& opts = {}) {
  if (n < 1) throw Error(Errc::bad_config, "birkhoff_average: need n >= 1");
  PrefixSums ps = birkhoff_prefix_sums(fam, omega, s, obs, {n}, opts);
  return ps.sums[0] / static_cast<double>(n);
}

// Averages at a list of checkpoints, with the certified per-value error.
struct BirkhoffSeries {
  u64 omega = 0;
  int depth = 0;
  std::vector<i64> checkpoints;
  std::vector<double> values;
  std::vector<double> err_bounds;  // c1 * lambda^-d + n * eps
};

inline BirkhoffSeries birkhoff_series(const RandomMapFamily& fam, u64 omega,
                                      const SymbolStream& s, const BumpObservable& obs,
                                      const std::vector<i64>& checkpoints,
                                      const BirkhoffOptions& opts = {}) {
  PrefixSums ps = birkhoff_prefix_sums(fam, omega, s, obs, checkpoints, opts);
  BirkhoffSeries b;
  b.omega = omega;
  b.depth = opts.depth;
  b.checkpoints = checkpoints;
  double decode_err = obs.c1 * std::pow(fam.lambda(), -opts.depth);
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    b.values.push_back(ps.sums[i] / static_cast<double>(checkpoints[i]));
    b.err_bounds.push_back(decode_err + static_cast<double>(checkpoints[i]) * DBL_EPSILON);
  }
  return b;
}

// ---------------------------------------------------------------------------
// The target integral
// ---------------------------------------------------------------------------

struct IntegralResult {
  double value = 0.0;
  double bound = 0.0;         // lambda_term + quad_term + modulus_term
  double lambda_term = 0.0;   // c1 * lambda^-level (level-n interpolant vs truth)
  double quad_term = 0.0;     // c1 * max Lip(h_n) / q_x (midpoint quadrature)
  double modulus_term = 0.0;  // measured noise-direction modulus estimate
  int level = 0;
  int q_omega = 0;
  int q_x = 0;
};

// Double average of phi over the straightened noise-space grid:
// (1/(Q_omega*Q_x)) * sum_omega sum_x phi(h_n(omega)(x)). The reported bound
// combines the certified interpolation error, the quadrature term, and a
// measured modulus between adjacent noise samples.
inline IntegralResult target_integral(const RandomMapFamily& fam, const BumpObservable& obs,
                                      int q_omega = 64, int q_x = 65536, int level = 12,
                                      WorkCache* cache = nullptr) {
  if (q_omega < 1 || q_x < 1)
    throw Error(Errc::bad_config, "target_integral: quadrature sizes must be positive");
  IntegralResult r;
  r.level = level;
  r.q_omega = q_omega;
  r.q_x = q_x;

  double total = 0.0;
  double max_lip = 0.0;
  double max_adjacent = 0.0;
  ConjugacyGrid first, prev;
  for (int i = 0; i < q_omega; ++i) {
    u64 omega = static_cast<u64>((static_cast<u128>(i) << 64) / q_omega);
    ConjugacyGrid g = conjugacy_grid(fam, omega, level, cache);
    double s = 0.0;
    for (int q = 0; q < q_x; ++q)
      s += obs.eval(g.point((q + 0.5) / static_cast<double>(q_x)));
    total += s / static_cast<double>(q_x);
    max_lip = std::max(max_lip, g.max_gap * static_cast<double>(g.cells()));
    if (i == 0) first = g;
    else max_adjacent = std::max(max_adjacent, grid_noise_distance(prev, g));
    prev = std::move(g);
  }
  if (q_omega > 1) max_adjacent = std::max(max_adjacent, grid_noise_distance(prev, first));

  r.value = total / static_cast<double>(q_omega);
  r.lambda_term = obs.c1 * std::pow(fam.lambda(), -level);
  r.quad_term = obs.c1 * max_lip / static_cast<double>(q_x);
  r.modulus_term = 0.5 * obs.c1 * max_adjacent;
  r.bound = r.lambda_term + r.quad_term + r.modulus_term;
  return r;
}

// Exact integral of phi(h_n(x)) dx for the piecewise-linear interpolant of a
// grid: on each cell h_n is affine, and the bump has a closed-form
// antiderivative, so no quadrature is involved. Test oracle and reference.
inline double exact_affine_integral(const ConjugacyGrid& g, const BumpObservable& obs) {
  // Antiderivative of the bump along the lift window [p, p+1): the support
  // arc sits strictly inside (0,1), hence appears exactly once.
  double lo = wrap01(obs.Jp.lo);
  double hi = lo + obs.Jp.length();
  double r = obs.ramp;
  double jlen = obs.J.length();
  auto ramp_mass = [&](double u) {  // integral of the smoothstep on [0, u], u in [0,1]
    return u * u * u - 0.5 * u * u * u * u;
  };
  auto anti = [&](double y) {  // integral of phi over [lo, min(y, hi)]
    if (y <= lo) return 0.0;
    if (y >= hi) return jlen + r;
    double pos = y - lo;
    if (pos < r) return r * ramp_mass(pos / r);
    if (pos <= r + jlen) return 0.5 * r + (pos - r);
    return 0.5 * r + jlen + r * (0.5 - ramp_mass((hi - y) / r));
  };
  double total = 0.0;
  double cells = static_cast<double>(g.cells());
  for (std::size_t j = 0; j + 1 < g.lifts.size(); ++j) {
    double a = g.lifts[j], b = g.lifts[j + 1];
    total += (anti(b) - anti(a)) / ((b - a) * cells);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Oscillation report
// ---------------------------------------------------------------------------

struct BlockRow {
  i64 j = 0;
  bool even = false;
  i64 N = 0;
  i64 checkpoint = 0;       // floor(N_j / 2)
  double value = 0.0;       // Birkhoff average at the checkpoint
  double bound = 0.0;       // rho_j (odd) or rho_j + rho_term (even)
  double rho_term = 0.0;    // measured deviation of the even-source tail average
  double head_term = 0.0;   // three-way certificate: pre-block contribution
  double shadow_term = 0.0; // three-way certificate: provable shadowing tail
  double num_err = 0.0;     // decode + rounding allowance
  bool pass = false;
};

struct OscillationReport {
  BirkhoffSeries series;
  std::vector<BlockRow> rows;
  double target = 0.0;           // the space-noise integral I*
  double measured_gap = 0.0;     // max even value - min odd value
  double gap_lower_bound = 0.0;  // I* - best odd bound - best even bound
  bool all_pass = true;
};

// Measure the Birkhoff averages of the composite sequence at every block's
// half-time checkpoint. Odd blocks are tested against |B| <= rho_j; even
// blocks against |B - I*| <= rho_j + rho_term, where rho_term is the
// measured deviation of this block's tail average from I* (the tail values
// coincide bitwise with the even-source orbit's, since both read the same
// symbols at the same noise states).
inline OscillationReport oscillation_report(const RandomMapFamily& fam, u64 omega,
                                            const BlockSchedule& sched,
                                            const SymbolStream& s_bar,
                                            const BumpObservable& obs, double istar,
                                            const BirkhoffOptions& opts = {}) {
  if (sched.blocks() < 1)
    throw Error(Errc::bad_config, "oscillation_report: schedule has no certified blocks");

  // Checkpoints: every block boundary that some range sum needs, plus the
  // half-time checkpoints themselves.
  std::vector<i64> cps;
  for (i64 j = 1; j <= sched.blocks(); ++j) {
    cps.push_back(sched.N[static_cast<std::size_t>(j)] / 2);
    if (j > 1) cps.push_back(sched.N[static_cast<std::size_t>(j - 1)]);
  }
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());

  PrefixSums ps = birkhoff_prefix_sums(fam, omega, s_bar, obs, cps, opts);
  auto sum_at = [&](i64 c) {
    for (std::size_t i = 0; i < ps.at.size(); ++i)
      if (ps.at[i] == c) return ps.sums[i];
    throw Error(Errc::bad_config, "oscillation_report: missing checkpoint");
  };

  OscillationReport rep;
  rep.target = istar;
  double lam = fam.lambda();
  double decode_err = obs.c1 * std::pow(lam, -opts.depth);
  double max_even = -1.0, min_odd = 2.0;
  double best_odd_bound = 2.0, best_even_bound = 2.0;

  for (i64 j = 1; j <= sched.blocks(); ++j) {
    BlockRow row;
    row.j = j;
    row.even = (j % 2 == 0);
    row.N = sched.N[static_cast<std::size_t>(j)];
    row.checkpoint = row.N / 2;
    i64 m = sched.N[static_cast<std::size_t>(j - 1)];
    double M = static_cast<double>(row.checkpoint);
    double S = sum_at(row.checkpoint);
    row.value = S / M;
    row.num_err = decode_err + M * DBL_EPSILON;
    row.shadow_term =
        obs.c1 * std::exp(-static_cast<double>(row.N - row.checkpoint) * std::log(lam)) /
        ((1.0 - 1.0 / lam) * M);
    double rho_j = sched.rho[static_cast<std::size_t>(j - 1)];
    if (!row.even) {
      row.head_term = static_cast<double>(m) * obs.c0 / M;
      row.bound = rho_j;
      row.pass = std::fabs(row.value) <= row.bound + row.num_err;
      min_odd = std::min(min_odd, row.value);
      best_odd_bound = std::min(best_odd_bound, row.bound);
    } else {
      i64 tail = row.checkpoint - m;
      double tail_avg = (S - sum_at(m)) / static_cast<double>(tail);
      row.rho_term = std::fabs(tail_avg - istar);
      row.head_term = static_cast<double>(m) * std::max(istar, obs.c0 - istar) / M;
      row.bound = rho_j + row.rho_term;
      row.pass = std::fabs(row.value - istar) <= row.bound + row.num_err;
      max_even = std::max(max_even, row.value);
      best_even_bound = std::min(best_even_bound, row.bound);
    }
    rep.all_pass = rep.all_pass && row.pass;
    rep.rows.push_back(row);
  }

  rep.series.omega = omega;
  rep.series.depth = opts.depth;
  for (const BlockRow& r : rep.rows) {
    rep.series.checkpoints.push_back(r.checkpoint);
    rep.series.values.push_back(r.value);
    rep.series.err_bounds.push_back(r.num_err);
  }
  if (max_even >= 0.0 && min_odd <= 1.0) rep.measured_gap = max_even - min_odd;
  rep.gap_lower_bound = istar - best_odd_bound - best_even_bound;
  return rep;
}

inline void write_oscillation_csv(std::ostream& os, const OscillationReport& rep) {
  os << "block,parity,N_j,checkpoint,value,bound,pass\n";
  char row[192];
  for (const BlockRow& r : rep.rows) {
    std::snprintf(row, sizeof row, "%lld,%s,%lld,%lld,%.17g,%.17g,%s\n",
                  static_cast<long long>(r.j), r.even ? "even" : "odd",
                  static_cast<long long>(r.N), static_cast<long long>(r.checkpoint),
                  r.value, r.bound, r.pass ? "true" : "false");
    os << row;
  }
}

// ---------------------------------------------------------------------------
// Past orbit, density, witnesses
// ---------------------------------------------------------------------------

// The first L past-orbit points of the composite sequence, all living at the
// same noise state: point ell is decode(omega, sigma^ell s_bar, d). For the
// first even block's tail the report compares each point against the pure
// even-source point with the same offset; agreement of the first
// N_2 - N_1 - ell symbols forces distance <= C_omega * lambda^-(N_2-N_1-ell).
struct ShadowRow {
  i64 ell = 0;
  double dist = 0.0;
  double bound = 0.0;  // may underflow to zero for deep agreement
  bool pass = false;
};

struct PastOrbit {
  std::vector<double> points;
  std::vector<ShadowRow> shadow;
  double c_omega = 0.0;  // longest level-1 cell at omega
};

inline PastOrbit past_orbit(const RandomMapFamily& fam, u64 omega,
                            const BlockSchedule& sched, const SymbolStream& s_bar,
                            const SymbolStream& s_even, i64 L, int depth = 40,
                            WorkCache* cache = nullptr) {
  if (L < 1) throw Error(Errc::bad_config, "past_orbit: need L >= 1");
  PastOrbit out;
  out.points.reserve(static_cast<std::size_t>(L));

  // Every decode here happens at the same noise state omega and the same
  // depth, so they all share one anchor p(theta^depth omega). Shared
  // anchoring makes points whose symbol prefixes agree come out bitwise
  // equal, which the shadowing comparison relies on.
  double anchor = random_fixed_point(fam, fam.base.step(omega, depth), -1, cache);

  for (i64 ell = 0; ell < L; ++ell)
    out.points.push_back(
        wrap01(decode_lift_from_anchor(fam, omega, s_bar.shifted(ell), depth, anchor)));

  out.c_omega = partition_boundaries(fam, omega, cache).max_cylinder;

  if (sched.blocks() >= 2) {
    i64 N1 = sched.N[1], N2 = sched.N[2];
    double log_lam = std::log(fam.lambda());
    for (i64 ell = 0; ell <= std::min<i64>(N1, L - 1); ++ell) {
      ShadowRow row;
      row.ell = ell;
      double p_bar = (N1 + ell < L)
                         ? out.points[static_cast<std::size_t>(N1 + ell)]
                         : wrap01(decode_lift_from_anchor(fam, omega, s_bar.shifted(N1 + ell),
                                                          depth, anchor));
      double p_even =
          wrap01(decode_lift_from_anchor(fam, omega, s_even.shifted(ell), depth, anchor));
      row.dist = circle_dist(p_bar, p_even);
      row.bound = out.c_omega * std::exp(-static_cast<double>(N2 - N1 - ell) * log_lam);
      row.pass = row.dist <= row.bound || row.dist == 0.0;
      out.shadow.push_back(row);
    }
  }
  return out;
}

// Histogram coverage of circle points: when did all `bins` bins first get
// hit? l_cover is -1 if coverage was not reached by the end.
struct DensityReport {
  int bins = 0;
  std::vector<i64> hist;
  i64 l_cover = -1;
};

inline DensityReport density_histogram(const std::vector<double>& points, int bins = 100) {
  DensityReport d;
  d.bins = bins;
  d.hist.assign(static_cast<std::size_t>(bins), 0);
  int hit = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    int b = static_cast<int>(wrap01(points[i]) * bins);
    if (b >= bins) b = bins - 1;
    if (d.hist[static_cast<std::size_t>(b)]++ == 0 && ++hit == bins)
      if (d.l_cover < 0) d.l_cover = static_cast<i64>(i) + 1;
  }
  return d;
}

// Scan the Birkhoff averages of one starting point for a sub-alpha and a
// super-beta value. Absence below n_max is reported, not thrown.
struct WitnessRow {
  i64 ell = 0;
  double start_point = 0.0;
  bool found_below = false;
  i64 n_below = 0;
  double b_below = 0.0;
  bool found_above = false;
  i64 n_above = 0;
  double b_above = 0.0;
};

inline WitnessRow witness_scan(const RandomMapFamily& fam, u64 omega,
                               const SymbolStream& s, const BumpObservable& obs,
                               double alpha, double beta, i64 n_max,
                               const BirkhoffOptions& opts = {}) {
  WitnessRow row;
  row.start_point = decode_point(fam, omega, s, opts.depth);
  KahanSum acc;
  std::vector<double> buf;
  const i64 SEG = opts.segment;
  for (i64 lo = 0; lo < n_max && !(row.found_below && row.found_above); lo += SEG) {
    i64 hi = std::min<i64>(n_max, lo + SEG);
    buf.resize(static_cast<std::size_t>(hi - lo));
    detail::eval_segment(fam, omega, s, obs, opts.depth, lo, hi, buf.data());
    for (i64 i = lo; i < hi; ++i) {
      acc.add(buf[static_cast<std::size_t>(i - lo)]);
      double b = acc.value() / static_cast<double>(i + 1);
      if (!row.found_below && b < alpha) {
        row.found_below = true;
        row.n_below = i + 1;
        row.b_below = b;
      }
      if (!row.found_above && b > beta) {
        row.found_above = true;
        row.n_above = i + 1;
        row.b_above = b;
      }
      if (row.found_below && row.found_above) break;
    }
  }
  return row;
}

struct WitnessReport {
  double alpha = 0.0;
  double beta = 0.0;
  i64 n_max = 0;
  std::vector<WitnessRow> rows;
  bool all_found = true;
};

// Scan the first `count` past-orbit points (the shifts of the composite
// sequence) for both witness indices.
inline WitnessReport residual_witness(const RandomMapFamily& fam, u64 omega,
                                      const SymbolStream& s_bar, const BumpObservable& obs,
                                      i64 count, double alpha, double beta, i64 n_max,
                                      const BirkhoffOptions& opts = {},
                                      double istar = std::numeric_limits<double>::quiet_NaN()) {
  if (!(alpha > 0.0 && alpha < beta))
    throw Error(Errc::bad_config, "residual_witness: need 0 < alpha < beta");
  if (std::isfinite(istar) && !(beta < istar))
    throw Error(Errc::bad_config, "residual_witness: need beta < target integral");
  WitnessReport rep;
  rep.alpha = alpha;
  rep.beta = beta;
  rep.n_max = n_max;
  for (i64 ell = 0; ell < count; ++ell) {
    WitnessRow row = witness_scan(fam, omega, s_bar.shifted(ell), obs, alpha, beta, n_max, opts);
    row.ell = ell;
    rep.all_found = rep.all_found && row.found_below && row.found_above;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace rcmap
