// circle.hpp — circle arithmetic, exact rotation base states, hashing,
// seeded digit sources and deterministic reduction helpers shared by the
// rest of the library.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rcmap {

using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

// Failure classes; process exit codes are derived from these in the CLI.
enum class Errc {
  invalid_family,      // a standing hypothesis on the map family fails
  solver_budget,       // root solve exhausted its iteration budget
  budget_exceeded,     // grid level / schedule / iteration budget exceeded
  empty_gap,           // no room for the observable's support interval
  boundary_ambiguity,  // itinerary undecidable this close to a boundary
  bad_config,          // malformed configuration
  io_error             // filesystem trouble
};

struct Error : std::runtime_error {
  Errc code;
  Error(Errc c, const std::string& what) : std::runtime_error(what), code(c) {}
};

// Exit-code contract: 0 success, 1 hypothesis/validation failure,
// 2 budget exceeded, 3 I/O.
inline int exit_code_for(Errc c) {
  switch (c) {
    case Errc::budget_exceeded:
    case Errc::solver_budget:
      return 2;
    case Errc::io_error:
      return 3;
    default:
      return 1;
  }
}

// ---------------------------------------------------------------------------
// Plain circle arithmetic (S^1 = R/Z, points kept in [0,1))
// ---------------------------------------------------------------------------

// Reduce to [0,1). Total on finite doubles; -0.0 and exact integers map to 0.
inline double wrap01(double x) {
  double r = x - std::floor(x);
  return (r >= 1.0) ? r - 1.0 : (r < 0.0 ? r + 1.0 : r);
}

// sin(2*pi*x); callers wrap the argument first when exact 1-periodicity of
// the surrounding expression matters.
inline double sin2pi(double x) { return std::sin(2.0 * std::numbers::pi * x); }
inline double cos2pi(double x) { return std::cos(2.0 * std::numbers::pi * x); }

// Geodesic distance on the circle, in [0, 1/2].
inline double circle_dist(double x, double y) {
  double d = std::fabs(wrap01(x) - wrap01(y));
  return d <= 0.5 ? d : 1.0 - d;
}

// A half-open arc [lo, hi) travelled counterclockwise from lo to hi.
// Stored with both ends in [0,1); an arc may wrap through 0.
struct CircleInterval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const {
    double d = wrap01(hi) - wrap01(lo);
    return d >= 0.0 ? d : d + 1.0;
  }
  bool contains(double x) const {
    double t = wrap01(x) - wrap01(lo);
    if (t < 0.0) t += 1.0;
    return t < length();
  }
  double midpoint() const { return wrap01(wrap01(lo) + 0.5 * length()); }
};

// Do two arcs meet? (Both half-open; empty arcs never intersect anything.)
inline bool arcs_intersect(const CircleInterval& A, const CircleInterval& B) {
  if (A.length() == 0.0 || B.length() == 0.0) return false;
  return A.contains(B.lo) || B.contains(A.lo);
}

// ---------------------------------------------------------------------------
// Exact rotation base: omega lives on a 2^64 lattice so the group law and
// inversion of theta(omega) = omega + alpha hold exactly.
// ---------------------------------------------------------------------------

// Noise states are u64 values counted in units of 2^-64 of a full turn.
inline u64 fix_from_double(double w) {
  w = wrap01(w);
  // w has at most 53 significant bits, so w * 2^64 is an exact double and
  // fits u64 after the wrap above.
  return static_cast<u64>(w * 18446744073709551616.0);
}

inline double fix_to_double(u64 w) {
  return static_cast<double>(w) * (1.0 / 18446744073709551616.0);
}

struct RotationBase {
  u64 alpha = 0;   // rotation number, units of 2^-64
  u64 omega0 = 0;  // starting noise state

  static RotationBase make(double alpha_d, double omega0_d) {
    return RotationBase{fix_from_double(alpha_d), fix_from_double(omega0_d)};
  }

  // theta^n(omega); u64 wraparound is the mod-1 reduction, hence exact.
  u64 step(u64 omega, i64 n = 1) const {
    return omega + static_cast<u64>(n) * alpha;
  }
  u64 inverse(u64 omega) const { return omega - alpha; }
  u64 at(i64 n) const { return omega0 + static_cast<u64>(n) * alpha; }
};

// ---------------------------------------------------------------------------
// Hashing and seeded randomness
// ---------------------------------------------------------------------------

// FNV-1a over raw bytes; used for family/config identities and cache keys.
inline u64 fnv1a(const void* data, std::size_t n, u64 h = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline u64 fnv1a_str(const std::string& s, u64 h = 0xcbf29ce484222325ull) {
  return fnv1a(s.data(), s.size(), h);
}

template <class T>
inline u64 fnv1a_pod(const T& v, u64 h = 0xcbf29ce484222325ull) {
  static_assert(std::is_trivially_copyable_v<T>);
  return fnv1a(&v, sizeof(T), h);
}

// splitmix64: the standard 64-bit finalizer, used in counter mode so any
// stream element is addressable in O(1).
inline u64 splitmix64(u64 x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// i-th draw of the stream identified by `seed`.
inline u64 seeded_u64(u64 seed, u64 i) { return splitmix64(seed ^ splitmix64(i)); }

// Uniform double in [0,1) from the i-th draw.
inline double seeded_unit(u64 seed, u64 i) {
  return static_cast<double>(seeded_u64(seed, i) >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, m) with negligible (<= m * 2^-64) bias.
inline u32 seeded_below(u64 seed, u64 i, u32 m) {
  return static_cast<u32>((static_cast<u128>(seeded_u64(seed, i)) * m) >> 64);
}

// ---------------------------------------------------------------------------
// Deterministic reduction
// ---------------------------------------------------------------------------

// Pairwise (balanced-tree) sum over [lo, hi). The evaluation tree depends
// only on the index range, never on thread scheduling, so concurrent callers
// that partition work differently still reproduce identical bits.
inline double pairwise_sum(std::span<const double> v, std::size_t lo, std::size_t hi) {
  std::size_t n = hi - lo;
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += v[i];
    return s;
  }
  std::size_t mid = lo + n / 2;
  return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

inline double pairwise_sum(std::span<const double> v) {
  return pairwise_sum(v, 0, v.size());
}

// Compensated accumulator for long sequential prefix scans.
struct KahanSum {
  double s = 0.0;
  double c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  double value() const { return s; }
};

}  // namespace rcmap
