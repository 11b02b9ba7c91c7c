// Shared fixtures for the unit suites: the default family, the exact
// noiseless doubling family, and small convenience builders.
#pragma once

#include <random>

#include "rcmap/experiment.hpp"

namespace th {

inline rcmap::RandomMapFamily defaults() { return rcmap::RandomMapFamily{}; }

// a = eps = 0: the fibre maps all equal x -> kx, the straightening is the
// identity, and every quantity has a closed form.
inline rcmap::RandomMapFamily doubling() {
  rcmap::RandomMapFamily f;
  f.a = 0.0;
  f.eps = 0.0;
  return f;
}

inline rcmap::BumpObservable bump_for(const rcmap::RandomMapFamily& f) {
  return rcmap::BumpObservable::from_gaps(rcmap::gap_interval(f.k, f.delta0));
}

inline rcmap::u64 omega_at(rcmap::u64 seed, rcmap::u64 i) { return rcmap::seeded_u64(seed, i); }

}  // namespace th
