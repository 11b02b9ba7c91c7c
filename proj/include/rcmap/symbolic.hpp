// symbolic.hpp — symbol words and streams, the level-1 partition and its
// gap interval, cylinders, and the two directions of the coding map
// (pullback decoding, forward encoding).
//
// Decoding is the workhorse: the point with a given itinerary is obtained by
// composing inverse branches backward through the noise path, one contracting
// solve per symbol, starting from the random fixed point at the far end.
#pragma once

#include <memory>
#include <mutex>
#include <vector>

#include "rcmap/conjugacy.hpp"

namespace rcmap {

// ---------------------------------------------------------------------------
// Words
// ---------------------------------------------------------------------------

struct SymbolWord {
  std::vector<int> syms;

  std::size_t size() const { return syms.size(); }
  int operator[](std::size_t i) const { return syms[i]; }

  // Subword from index m to index n, both ends included.
  SymbolWord slice(std::size_t m, std::size_t n) const {
    SymbolWord w;
    if (m <= n && n < syms.size())
      w.syms.assign(syms.begin() + static_cast<std::ptrdiff_t>(m),
                    syms.begin() + static_cast<std::ptrdiff_t>(n) + 1);
    return w;
  }
  bool operator==(const SymbolWord& o) const { return syms == o.syms; }
};

// ---------------------------------------------------------------------------
// Streams
// ---------------------------------------------------------------------------

// A one-sided infinite symbol sequence with O(1)-amortised random access and
// cheap shifting. Copies share the underlying source.
class SymbolStream {
  struct Impl {
    virtual ~Impl() = default;
    virtual int sym(i64 i) const = 0;
  };

  struct PeriodicImpl : Impl {
    std::vector<int> word;
    int sym(i64 i) const override {
      return word[static_cast<std::size_t>(i % static_cast<i64>(word.size()))];
    }
  };

  // Base-k expansion of a double, by an exact fixed-point ladder: the
  // numerator keeps 120 fractional bits, so multiplying by k never
  // overflows u128 and every digit of the stored rational is exact.
  struct DigitsImpl : Impl {
    int k;
    u128 start;
    mutable std::mutex mu;
    mutable std::vector<int> digits;
    mutable u128 state;

    static constexpr int kShift = 120;

    DigitsImpl(double x, int kk) : k(kk) {
      x = wrap01(x);
      u128 num = 0;
      if (x > 0.0) {
        int e = 0;
        double mant = std::frexp(x, &e);  // x = mant * 2^e, mant in [0.5, 1)
        u64 m53 = static_cast<u64>(mant * 9007199254740992.0);  // mant * 2^53
        int sh = kShift + e - 53;
        num = (sh >= 0) ? (static_cast<u128>(m53) << sh)
                        : (static_cast<u128>(m53) >> (-sh));
      }
      start = num;
      state = num;
    }
    int sym(i64 i) const override {
      std::lock_guard<std::mutex> g(mu);
      const u128 mask = (static_cast<u128>(1) << kShift) - 1;
      while (static_cast<i64>(digits.size()) <= i) {
        state *= static_cast<unsigned>(k);
        digits.push_back(static_cast<int>(state >> kShift));
        state &= mask;
      }
      return digits[static_cast<std::size_t>(i)];
    }
  };

  // Digit stream of an ideal uniform random point: i.i.d. digits drawn in
  // counter mode, so access is O(1) and position-independent.
  struct RandomImpl : Impl {
    u64 seed;
    int k;
    int sym(i64 i) const override {
      return static_cast<int>(seeded_below(seed, static_cast<u64>(i), static_cast<u32>(k)));
    }
  };

  // Alternating splice: block j covers [N_{j-1}, N_j) and reads the odd or
  // even source at offset i - N_{j-1}; past the last boundary the final
  // block's source simply continues.
  struct CompositeImpl : Impl {
    std::vector<i64> N;  // N[0] = 0 < N[1] < ...
    std::shared_ptr<const Impl> odd_impl, even_impl;
    i64 odd_off = 0, even_off = 0;
    int sym(i64 i) const override {
      std::size_t j = 1;
      while (j + 1 < N.size() && i >= N[j]) ++j;
      i64 rel = i - N[j - 1];
      return (j % 2 == 1) ? odd_impl->sym(rel + odd_off) : even_impl->sym(rel + even_off);
    }
  };

  struct WordImpl : Impl {
    std::vector<int> word;
    int fill;
    int sym(i64 i) const override {
      return i < static_cast<i64>(word.size()) ? word[static_cast<std::size_t>(i)] : fill;
    }
  };

  std::shared_ptr<const Impl> impl_;
  i64 offset_ = 0;
  int k_ = 2;

  SymbolStream(std::shared_ptr<const Impl> p, i64 off, int k)
      : impl_(std::move(p)), offset_(off), k_(k) {}

 public:
  SymbolStream() = default;

  int at(i64 i) const { return impl_->sym(i + offset_); }
  int alphabet() const { return k_; }

  // The shifted stream sigma^m; shifts compose additively.
  SymbolStream shifted(i64 m) const { return SymbolStream(impl_, offset_ + m, k_); }

  SymbolWord prefix(std::size_t n) const {
    SymbolWord w;
    w.syms.resize(n);
    for (std::size_t i = 0; i < n; ++i) w.syms[i] = at(static_cast<i64>(i));
    return w;
  }

  static SymbolStream periodic(std::vector<int> word, int k) {
    auto p = std::make_shared<PeriodicImpl>();
    if (word.empty()) word.push_back(0);
    p->word = std::move(word);
    return SymbolStream(p, 0, k);
  }
  static SymbolStream zeros(int k) { return periodic({0}, k); }

  static SymbolStream digits_of(double x, int k) {
    if (k < 2 || k > 64)
      throw Error(Errc::bad_config, "digits_of: alphabet size out of range");
    return SymbolStream(std::make_shared<DigitsImpl>(x, k), 0, k);
  }

  static SymbolStream random_digits(u64 seed, int k) {
    auto p = std::make_shared<RandomImpl>();
    p->seed = seed;
    p->k = k;
    return SymbolStream(p, 0, k);
  }

  static SymbolStream block_composite(std::vector<i64> boundaries,
                                      SymbolStream odd_src, SymbolStream even_src) {
    if (boundaries.size() < 2 || boundaries.front() != 0)
      throw Error(Errc::bad_config, "block_composite: boundaries must start at 0");
    for (std::size_t j = 1; j < boundaries.size(); ++j)
      if (boundaries[j] <= boundaries[j - 1])
        throw Error(Errc::bad_config, "block_composite: boundaries must increase");
    auto p = std::make_shared<CompositeImpl>();
    int k = odd_src.alphabet();
    p->N = std::move(boundaries);
    p->odd_impl = odd_src.impl_;
    p->odd_off = odd_src.offset_;
    p->even_impl = even_src.impl_;
    p->even_off = even_src.offset_;
    return SymbolStream(p, 0, k);
  }

  static SymbolStream from_word(SymbolWord w, int k, int fill = 0) {
    auto p = std::make_shared<WordImpl>();
    p->word = std::move(w.syms);
    p->fill = fill;
    return SymbolStream(p, 0, k);
  }
};

// ---------------------------------------------------------------------------
// Level-1 partition and the gap interval
// ---------------------------------------------------------------------------

struct Partition {
  std::vector<double> lift_bounds;  // k+1 values, p(omega) .. p(omega)+1
  std::vector<double> points;       // the k boundary circle points
  double max_cylinder = 0.0;        // longest level-1 cell (the constant C_omega)
};

inline Partition partition_boundaries(const RandomMapFamily& fam, u64 omega,
                                      WorkCache* cache = nullptr) {
  ConjugacyGrid g = conjugacy_grid(fam, omega, 1, cache);
  Partition part;
  part.lift_bounds = g.lifts;
  for (int j = 0; j < fam.k; ++j)
    part.points.push_back(wrap01(g.lifts[static_cast<std::size_t>(j)]));
  for (int j = 0; j < fam.k; ++j)
    part.max_cylinder = std::max(
        part.max_cylinder, g.lifts[static_cast<std::size_t>(j) + 1] - g.lifts[static_cast<std::size_t>(j)]);
  return part;
}

// The observable's home: J' is the middle of the arc that no noise state can
// pull into the first partition cell, J is J' with a 25% ramp stripped from
// each side.
struct GapIntervals {
  CircleInterval J;
  CircleInterval Jp;
  double ramp_width = 0.0;
};

inline GapIntervals gap_interval(int k, double delta0) {
  double lo_raw = 1.0 / k + delta0;
  double hi_raw = 1.0 - delta0;
  double len_raw = hi_raw - lo_raw;
  if (!(len_raw > 0.0))
    throw Error(Errc::empty_gap, "gap_interval: delta0 leaves no room outside the fattened first cell");
  double margin = 0.05 * len_raw;  // 10% total safety margin
  GapIntervals g;
  g.Jp = CircleInterval{lo_raw + margin, hi_raw - margin};
  g.ramp_width = 0.25 * g.Jp.length();
  g.J = CircleInterval{g.Jp.lo + g.ramp_width, g.Jp.hi - g.ramp_width};
  return g;
}

// Check, over seeded noise samples, that the first-cell cylinder never meets
// J'. Works in lift coordinates: the first cell is [p, a_1] with p inside
// the contracting box, so it must stay strictly left of J'.
struct GapCheck {
  bool ok = true;
  double min_clearance = std::numeric_limits<double>::infinity();
};

inline GapCheck verify_gap(const RandomMapFamily& fam, const GapIntervals& g,
                           int samples = 1000, u64 seed = 17,
                           WorkCache* cache = nullptr) {
  GapCheck c;
  for (int i = 0; i < samples; ++i) {
    u64 omega = seeded_u64(seed, static_cast<u64>(i));
    ConjugacyGrid lvl1 = conjugacy_grid(fam, omega, 1, cache);
    double left = g.Jp.lo - lvl1.lifts[1];           // cell must end before J'
    double right = (lvl1.lifts[0] + 1.0) - g.Jp.hi;  // and restart after it
    double clear = std::min(left, right);
    c.min_clearance = std::min(c.min_clearance, clear);
    if (!(clear > 0.0)) c.ok = false;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Cylinders and decoding
// ---------------------------------------------------------------------------

// Universal solve bracket for digit pullbacks: every fixed point lies in the
// contracting box, so every branch preimage of a lift value in
// [p, p+1] + digit lies in [box_lo, box_hi + 1].
inline double digit_pullback(const RandomMapFamily& fam, u64 omega, double z, int digit) {
  return inverse_branch(fam, omega, z + static_cast<double>(digit),
                        fam.box_lo, fam.box_hi + 1.0);
}

// The arc of points whose itinerary starts with `word`. Both endpoints are
// pullbacks of the fixed-point interval [p, p+1] at theta^n omega through
// the same digit path, so the lift length is exact and at most lambda^-n.
struct Cylinder {
  double lift_lo = 0.0;
  double lift_hi = 0.0;
  CircleInterval arc;
  double length() const { return lift_hi - lift_lo; }
};

inline Cylinder cylinder(const RandomMapFamily& fam, u64 omega, const SymbolWord& word,
                         WorkCache* cache = nullptr) {
  int n = static_cast<int>(word.size());
  double ylo = random_fixed_point(fam, fam.base.step(omega, n), -1, cache);
  double yhi = ylo + 1.0;
  for (int i = n - 1; i >= 0; --i) {
    u64 w = fam.base.step(omega, i);
    ylo = digit_pullback(fam, w, ylo, word[static_cast<std::size_t>(i)]);
    yhi = digit_pullback(fam, w, yhi, word[static_cast<std::size_t>(i)]);
  }
  Cylinder c;
  c.lift_lo = ylo;
  c.lift_hi = yhi;
  c.arc = CircleInterval{wrap01(ylo), wrap01(yhi)};
  return c;
}

// Depth-d decode with a caller-supplied far anchor (the fixed point at
// theta^d omega). Returns the lift of the cylinder's left endpoint.
inline double decode_lift_from_anchor(const RandomMapFamily& fam, u64 omega,
                                      const SymbolStream& s, int d, double p_anchor) {
  double y = p_anchor;
  for (int i = d - 1; i >= 0; --i)
    y = digit_pullback(fam, fam.base.step(omega, i), y, s.at(i));
  return y;
}

// X_s(omega) to depth d: the left endpoint of the depth-d cylinder of s,
// within lambda^-d of the true coded point.
inline double decode_lift(const RandomMapFamily& fam, u64 omega, const SymbolStream& s,
                          int d, WorkCache* cache = nullptr) {
  double p = random_fixed_point(fam, fam.base.step(omega, d), -1, cache);
  return decode_lift_from_anchor(fam, omega, s, d, p);
}

inline double decode_point(const RandomMapFamily& fam, u64 omega, const SymbolStream& s,
                           int d, WorkCache* cache = nullptr) {
  return wrap01(decode_lift(fam, omega, s, d, cache));
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

// Forward-iteration cap: beyond this many expansion steps the orbit has lost
// more than the solver can certify, so longer encodes are refused.
constexpr int kEncodeCap = 60;

// Itinerary of x to depth d: at each step, locate x in the level-1 partition
// of the current noise state, then push forward. Throws when an orbit point
// sits within 10 * lambda^-(boundary resolution depth) of a partition
// boundary: inside that band the itinerary would be decided by solver
// arithmetic, not by the point.
inline SymbolWord encode_point(const RandomMapFamily& fam, u64 omega, double x, int d,
                               WorkCache* cache = nullptr) {
  if (d < 0 || d > kEncodeCap)
    throw Error(Errc::budget_exceeded, "encode_point: depth beyond forward-stability cap");
  double ambiguous = 10.0 * std::pow(fam.lambda(), -fixed_point_depth(fam));

  // Fixed points p(theta^i omega), i = 0..d: one deep anchor, then a
  // contracting descent.
  std::vector<double> pv(static_cast<std::size_t>(d) + 1);
  pv[static_cast<std::size_t>(d)] =
      random_fixed_point(fam, fam.base.step(omega, d), -1, cache);
  for (int i = d - 1; i >= 0; --i)
    pv[static_cast<std::size_t>(i)] =
        fixed_point_pullback(fam, fam.base.step(omega, i), pv[static_cast<std::size_t>(i) + 1]);

  SymbolWord w;
  w.syms.reserve(static_cast<std::size_t>(d));
  double xi = wrap01(x);
  for (int i = 0; i < d; ++i) {
    u64 wi = fam.base.step(omega, i);
    // Level-1 boundaries at this step, in the window [p_i, p_i + 1).
    double u = pv[static_cast<std::size_t>(i)] + wrap01(xi - pv[static_cast<std::size_t>(i)]);
    int sym = 0;
    for (int j = 1; j < fam.k; ++j) {
      double bj = digit_pullback(fam, wi, pv[static_cast<std::size_t>(i) + 1], j);
      if (circle_dist(xi, wrap01(bj)) < ambiguous)
        throw Error(Errc::boundary_ambiguity, "encode_point: point too close to a partition boundary");
      if (u >= bj) sym = j;
    }
    if (circle_dist(xi, wrap01(pv[static_cast<std::size_t>(i)])) < ambiguous)
      throw Error(Errc::boundary_ambiguity, "encode_point: point too close to a partition boundary");
    w.syms.push_back(sym);
    xi = fam.map_point(wi, xi);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Equivariance probe
// ---------------------------------------------------------------------------

// Walk `steps` steps comparing f(theta^t omega, decode(sigma^t s)) with
// decode(sigma^{t+1} s); returns the worst circle distance. The defect of a
// depth-d decode is at most the gap between depth d-1 and depth d left
// endpoints, i.e. under 2 * lambda^-(d-1).
inline double equivariance_walk(const RandomMapFamily& fam, u64 omega,
                                const SymbolStream& s, int steps, int d,
                                WorkCache* cache = nullptr) {
  std::vector<double> pv(static_cast<std::size_t>(steps + d) + 1);
  pv[static_cast<std::size_t>(steps + d)] =
      random_fixed_point(fam, fam.base.step(omega, steps + d), -1, cache);
  for (int i = steps + d - 1; i >= 0; --i)
    pv[static_cast<std::size_t>(i)] =
        fixed_point_pullback(fam, fam.base.step(omega, i), pv[static_cast<std::size_t>(i) + 1]);

  double worst = 0.0;
  double prev = decode_lift_from_anchor(fam, omega, s, d, pv[static_cast<std::size_t>(d)]);
  for (int t = 0; t < steps; ++t) {
    u64 wt = fam.base.step(omega, t);
    double next = decode_lift_from_anchor(fam, fam.base.step(omega, t + 1), s.shifted(t + 1),
                                          d, pv[static_cast<std::size_t>(t + 1 + d)]);
    double err = circle_dist(fam.map_point(wt, prev), wrap01(next));
    worst = std::max(worst, err);
    prev = next;
  }
  return worst;
}

}  // namespace rcmap
