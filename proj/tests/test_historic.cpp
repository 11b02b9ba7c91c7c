#include "doctest.h"

#include <cfloat>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"

using namespace rcmap;

namespace {

// The three-block gentle tolerance ladder used for fast end-to-end checks.
const std::vector<double> kGentleRho = {1.0, 0.9, 0.8};
// The production ladder rho_j = 2^-j.
const std::vector<double> kProductionRho = {0.5, 0.25, 0.125, 0.0625};

}  // namespace

TEST_SUITE("historic") {
  TEST_CASE("bump observable has the expected plateau, ramps and constants") {
    BumpObservable obs = th::bump_for(th::defaults());
    CHECK(obs.Jp.lo == doctest::Approx(0.705).epsilon(1e-14));
    CHECK(obs.Jp.hi == doctest::Approx(0.795).epsilon(1e-14));
    CHECK(obs.ramp == doctest::Approx(0.0225).epsilon(1e-12));
    CHECK(obs.c0 == 1.0);
    CHECK(obs.c1 == doctest::Approx(1.5 / 0.0225).epsilon(1e-12));

    // Plateau and support.
    CHECK(obs.eval(0.75) == 1.0);
    CHECK(obs.eval(0.5 * (obs.J.lo + obs.J.hi)) == 1.0);
    CHECK(obs.eval(0.5) == 0.0);
    CHECK(obs.eval(0.0) == 0.0);
    CHECK(obs.eval(obs.Jp.lo) == 0.0);
    CHECK(obs.eval(obs.Jp.hi) == 0.0);
    // Smoothstep midpoints of the ramps.
    CHECK(obs.eval(obs.Jp.lo + 0.5 * obs.ramp) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(obs.eval(obs.Jp.hi - 0.5 * obs.ramp) == doctest::Approx(0.5).epsilon(1e-12));
    // Range.
    for (int i = 0; i < 2000; ++i) {
      double v = obs.eval(static_cast<double>(i) / 2000.0);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }

  TEST_CASE("bump derivative stays within its declared slope bound") {
    BumpObservable obs = th::bump_for(th::defaults());
    const double h = 1e-7;
    double max_slope = 0.0;
    for (int i = 0; i <= 5000; ++i) {
      double x = 0.7 + 0.1 * static_cast<double>(i) / 5000.0;
      double s = std::fabs(obs.eval(x + h) - obs.eval(x - h)) / (2.0 * h);
      max_slope = std::max(max_slope, s);
    }
    CHECK(max_slope <= obs.c1 + 1e-3);
    CHECK(max_slope >= 0.98 * obs.c1);
  }

  TEST_CASE("closed-form integral counts the plateau plus one ramp width") {
    BumpObservable obs = th::bump_for(th::defaults());
    CHECK(integral_identity(obs) == doctest::Approx(0.0675).epsilon(1e-14));
    // Cross-check by midpoint quadrature.
    double q = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) q += obs.eval((i + 0.5) / static_cast<double>(n));
    CHECK(q / n == doctest::Approx(integral_identity(obs)).epsilon(1e-8));
  }

  TEST_CASE("block_length agrees with a direct scan of its two conditions") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    double lambda = f.lambda();
    auto oracle = [&](i64 m, double rho) {
      double log_lambda = std::log(lambda);
      for (i64 n = 2 * m + 2;; ++n) {
        i64 half = n / 2;
        if (half < m + 1) continue;
        if (2.0 * static_cast<double>(m) * obs.c0 / static_cast<double>(half) > rho / 2.0)
          continue;
        double decay = std::exp(-0.5 * static_cast<double>(n) * log_lambda);
        if (static_cast<double>(half - m) * decay * obs.c1 > rho / 2.0) continue;
        return n;
      }
    };
    for (i64 m : {i64{0}, i64{1}, i64{3}, i64{7}, i64{9}})
      for (double rho : {1.0, 0.5, 0.25})
        CHECK(block_length(m, rho, obs, lambda) == oracle(m, rho));
  }

  TEST_CASE("block_length satisfies its own conditions and grows monotonically") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    double lambda = f.lambda();
    for (i64 m : {i64{0}, i64{2}, i64{5}}) {
      i64 n = block_length(m, 0.5, obs, lambda);
      CHECK(n >= 2 * m + 2);
      i64 half = n / 2;
      CHECK(2.0 * static_cast<double>(m) * obs.c0 / static_cast<double>(half) <= 0.25);
      CHECK(static_cast<double>(half - m) *
                std::exp(-0.5 * static_cast<double>(n) * std::log(lambda)) * obs.c1 <=
            0.25);
      CHECK(block_length(m, 0.25, obs, lambda) >= n);
      CHECK(block_length(2 * m + 1, 0.5, obs, lambda) >= n);
    }
    CHECK_THROWS_AS(block_length(3, 0.0, obs, lambda), Error);
    CHECK_THROWS_AS(block_length(3, 1.5, obs, lambda), Error);
    CHECK_THROWS_AS(block_length(-1, 0.5, obs, lambda), Error);
  }

  TEST_CASE("the production ladder fits exactly three blocks in budget") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    ScheduleBuild b = build_schedule_partial(obs, f.lambda(), kProductionRho, 10000000);
    CHECK(b.requested == 4);
    CHECK(b.exceeded);
    CHECK(b.schedule.blocks() == 3);
    REQUIRE(b.schedule.N.size() == 4);
    CHECK(b.schedule.N[0] == 0);
    CHECK(b.schedule.N[1] == 56);
    CHECK(b.schedule.N[2] == 5376);
    CHECK(b.schedule.N[3] == 1032192);
    CHECK(b.first_infeasible_N == 396361728);
    for (const BlockCertificate& c : b.schedule.certs) CHECK(c.all_ok());

    bool threw = false;
    try {
      build_schedule(obs, f.lambda(), kProductionRho, 10000000);
    } catch (const Error& e) {
      threw = true;
      CHECK(e.code == Errc::budget_exceeded);
      CHECK(std::string(e.what()).find("largest feasible block count: 3") !=
            std::string::npos);
    }
    CHECK(threw);
  }

  TEST_CASE("a gentle ladder certifies four blocks") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    BlockSchedule s =
        build_schedule(obs, f.lambda(), {1.0, 0.9, 0.8, 0.7}, 2000000);
    CHECK(s.blocks() == 4);
    REQUIRE(s.N.size() == 5);
    CHECK(s.N[1] == 51);
    CHECK(s.N[2] == 1360);
    CHECK(s.N[3] == 40800);
    CHECK(s.N[4] == 1398858);
    for (const BlockCertificate& c : s.certs) {
      CHECK(c.all_ok());
      // Half-time sits beyond the previous boundary by at least that boundary.
      CHECK(c.N / 2 - c.N_prev >= c.N_prev);
    }
  }

  TEST_CASE("tolerance ladders must be nonincreasing and in range") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    CHECK_THROWS_AS(build_schedule_partial(obs, f.lambda(), {0.5, 0.6}, 1000000), Error);
    CHECK_THROWS_AS(build_schedule_partial(obs, f.lambda(), {0.5, 0.0}, 1000000), Error);
    CHECK_THROWS_AS(build_schedule_partial(obs, f.lambda(), {1.5}, 1000000), Error);
  }

  TEST_CASE("the composite sequence splices sources at the boundaries") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    BlockSchedule s = build_schedule(obs, f.lambda(), kGentleRho, 100000);
    SymbolStream even = SymbolStream::digits_of(0.3, 2);
    SymbolStream bar = build_bar_s(s, SymbolStream::zeros(2), even);
    for (i64 i = 0; i < s.N[1]; ++i) CHECK(bar.at(i) == 0);
    for (i64 i = 0; i < 10; ++i) CHECK(bar.at(s.N[1] + i) == even.at(i));
    for (i64 i = 0; i < 10; ++i) CHECK(bar.at(s.N[2] + i) == 0);
  }

  TEST_CASE("the all-zeros orbit never touches the bump") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    double b = birkhoff_average(f, f.base.omega0, SymbolStream::zeros(2), obs, 1000);
    CHECK(b == 0.0);
  }

  TEST_CASE("a length-one average is the observable at the decoded point") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    SymbolStream s = SymbolStream::random_digits(71, 2);
    u64 omega = th::omega_at(72, 0);
    double b1 = birkhoff_average(f, omega, s, obs, 1);
    double direct = obs.eval(decode_point(f, omega, s, 40));
    CHECK(b1 == direct);
  }

  TEST_CASE("doubling averages of random digit orbits approach the integral") {
    RandomMapFamily d = th::doubling();
    BumpObservable obs = th::bump_for(d);
    for (u64 seed : {u64{201}, u64{202}}) {
      double b = birkhoff_average(d, d.base.omega0, SymbolStream::random_digits(seed, 2),
                                  obs, 100000);
      CHECK(std::fabs(b - 0.0675) < 0.015);
    }
  }

  TEST_CASE("averages of codes that agree beyond a head differ by the head bound") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    u64 omega = th::omega_at(73, 0);
    const i64 m = 3, M = 50;
    SymbolWord w1 = SymbolStream::random_digits(74, 2).prefix(240);
    SymbolWord w2 = w1;
    for (std::size_t i = 0; i < static_cast<std::size_t>(m); ++i)
      w2.syms[i] = 1 - w2.syms[i];
    SymbolStream s1 = SymbolStream::from_word(w1, 2);
    SymbolStream s2 = SymbolStream::from_word(w2, 2);
    PrefixSums p1 = birkhoff_prefix_sums(f, omega, s1, obs, {m, M});
    PrefixSums p2 = birkhoff_prefix_sums(f, omega, s2, obs, {m, M});
    // Identical symbols at identical noise states decode bitwise equal, so
    // the range sums past the head agree to rounding.
    CHECK(std::fabs((p1.sums[1] - p1.sums[0]) - (p2.sums[1] - p2.sums[0])) < 1e-12);
    double db = std::fabs(p1.sums[1] - p2.sums[1]) / static_cast<double>(M);
    CHECK(db <= 2.0 * static_cast<double>(m) * obs.c0 / static_cast<double>(M) + 1e-12);
  }

  TEST_CASE("worker count never changes a single bit of the sums") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    SymbolStream s = SymbolStream::random_digits(75, 2);
    u64 omega = th::omega_at(76, 0);
    std::vector<i64> cps = {100, 4096, 5000, 8192, 10000};
    BirkhoffOptions one;
    one.workers = 1;
    BirkhoffOptions three;
    three.workers = 3;
    PrefixSums a = birkhoff_prefix_sums(f, omega, s, obs, cps, one);
    PrefixSums b = birkhoff_prefix_sums(f, omega, s, obs, cps, three);
    REQUIRE(a.sums.size() == b.sums.size());
    for (std::size_t i = 0; i < a.sums.size(); ++i) CHECK(a.sums[i] == b.sums[i]);
  }

  TEST_CASE("checkpoint lists must increase from at least one") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    SymbolStream s = SymbolStream::zeros(2);
    CHECK_THROWS_AS(birkhoff_prefix_sums(f, f.base.omega0, s, obs, {0}), Error);
    CHECK_THROWS_AS(birkhoff_prefix_sums(f, f.base.omega0, s, obs, {5, 5}), Error);
    CHECK_THROWS_AS(birkhoff_prefix_sums(f, f.base.omega0, s, obs, {5, 3}), Error);
    CHECK_THROWS_AS(birkhoff_average(f, f.base.omega0, s, obs, 0), Error);
  }

  TEST_CASE("series error bounds follow the decode-plus-rounding formula") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    SymbolStream s = SymbolStream::random_digits(77, 2);
    BirkhoffSeries b = birkhoff_series(f, f.base.omega0, s, obs, {10, 1000});
    double decode_err = obs.c1 * std::pow(f.lambda(), -40);
    CHECK(b.err_bounds[0] == decode_err + 10.0 * DBL_EPSILON);
    CHECK(b.err_bounds[1] == decode_err + 1000.0 * DBL_EPSILON);
    CHECK(b.depth == 40);
  }

  TEST_CASE("straightened integral of the doubling family is the exact mass") {
    RandomMapFamily d = th::doubling();
    BumpObservable obs = th::bump_for(d);
    ConjugacyGrid g = conjugacy_grid(d, d.base.omega0, 6);
    CHECK(exact_affine_integral(g, obs) == doctest::Approx(0.0675).epsilon(1e-12));
    IntegralResult r = target_integral(d, obs, 4, 65536, 8);
    CHECK(std::fabs(r.value - 0.0675) < 1e-5);
    CHECK(r.value <= r.bound + 0.0675);
  }

  TEST_CASE("quadrature value sits within quad_term of the exact interpolant mass") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    WorkCache cache;
    const int q_omega = 8, level = 8;
    IntegralResult r = target_integral(f, obs, q_omega, 16384, level, &cache);
    double mean = 0.0;
    for (int i = 0; i < q_omega; ++i) {
      u64 w = static_cast<u64>((static_cast<u128>(i) << 64) / q_omega);
      mean += exact_affine_integral(conjugacy_grid(f, w, level, &cache), obs);
    }
    mean /= q_omega;
    CHECK(std::fabs(r.value - mean) <= r.quad_term + 1e-12);
  }

  TEST_CASE("refining the level moves the integral less than the stated bounds") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    WorkCache cache;
    IntegralResult r8 = target_integral(f, obs, 8, 8192, 8, &cache);
    IntegralResult r12 = target_integral(f, obs, 8, 8192, 12, &cache);
    CHECK(std::fabs(r8.value - r12.value) <= r8.bound + r12.bound);
    CHECK(r12.lambda_term < r8.lambda_term);
  }

  TEST_CASE("production target integral value is frozen") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    IntegralResult r = target_integral(f, obs);
    CHECK(std::fabs(r.value - 0.06868695019585519) < 1e-14);
    CHECK(r.level == 12);
    CHECK(r.q_omega == 64);
    CHECK(r.q_x == 65536);
    CHECK(r.bound == doctest::Approx(0.8929526085250447).epsilon(1e-9));
  }

  TEST_CASE("oscillation report alternates near zero and near the integral") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    BlockSchedule sched = build_schedule(obs, f.lambda(), kGentleRho, 100000);
    SymbolStream bar = build_bar_s(sched, SymbolStream::zeros(2),
                                   SymbolStream::random_digits(20260821, 2));
    double istar = 0.06868695019585519;
    OscillationReport rep =
        oscillation_report(f, f.base.omega0, sched, bar, obs, istar);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.all_pass);
    CHECK(rep.target == istar);
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      const BlockRow& row = rep.rows[i];
      CHECK(row.j == static_cast<i64>(i) + 1);
      CHECK(row.even == (row.j % 2 == 0));
      CHECK(row.N == sched.N[i + 1]);
      CHECK(row.checkpoint == sched.N[i + 1] / 2);
      CHECK(row.value >= 0.0);
      CHECK(row.value <= 1.0);
      CHECK(row.pass);
      if (!row.even) CHECK(std::fabs(row.value) <= row.bound + row.num_err);
      if (row.even) CHECK(std::fabs(row.value - istar) <= row.bound + row.num_err);
    }
    // The first odd block is the pure fixed-point orbit: exactly zero.
    CHECK(rep.rows[0].value == 0.0);
    CHECK(rep.measured_gap > 0.03);

    std::ostringstream os;
    write_oscillation_csv(os, rep);
    std::istringstream is(os.str());
    std::string line;
    CHECK(std::getline(is, line));
    CHECK(line == "block,parity,N_j,checkpoint,value,bound,pass");
    int rows = 0;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      ++rows;
      if (rows == 1) CHECK(line.rfind("1,odd,", 0) == 0);
      if (rows == 2) CHECK(line.rfind("2,even,", 0) == 0);
    }
    CHECK(rows == 3);
  }

  TEST_CASE("oscillation report refuses an empty schedule") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    BlockSchedule empty;
    empty.N = {0};
    CHECK_THROWS_AS(oscillation_report(f, f.base.omega0, empty,
                                       SymbolStream::zeros(2), obs, 0.0675),
                    Error);
  }

  TEST_CASE("past orbit of the doubling composite shadows the even source exactly") {
    RandomMapFamily d = th::doubling();
    BlockSchedule sched;
    sched.rho = {1.0, 0.9};
    sched.N = {0, 8, 100};
    SymbolStream even = SymbolStream::digits_of(0.3, 2);
    SymbolStream bar = build_bar_s(sched, SymbolStream::zeros(2), even);
    PastOrbit po = past_orbit(d, d.base.omega0, sched, bar, even, 60);
    REQUIRE(po.points.size() == 60);
    // sigma^ell bar starts with 8-ell zeros then the digits of 0.3.
    for (i64 ell = 0; ell < 8; ++ell) {
      double expect = 0.3 * std::pow(2.0, -static_cast<double>(8 - ell));
      CHECK(circle_dist(po.points[static_cast<std::size_t>(ell)], expect) < 1e-9);
    }
    // Past the boundary the composite IS the even source, so distances vanish.
    REQUIRE(po.shadow.size() == 9);
    for (const ShadowRow& row : po.shadow) {
      CHECK(row.dist == 0.0);
      CHECK(row.pass);
    }
  }

  TEST_CASE("past orbit shadowing holds for the default family") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    WorkCache cache;
    // The production schedule puts 5320 steps of agreement behind each shadow
    // row, so every bound underflows to zero and only bit-identical decodes
    // can pass: the sharpest test of the shared-anchor convention.
    ScheduleBuild b = build_schedule_partial(obs, f.lambda(), kProductionRho, 10000000);
    const BlockSchedule& sched = b.schedule;
    SymbolStream even = SymbolStream::random_digits(20260821, 2);
    SymbolStream bar = build_bar_s(sched, SymbolStream::zeros(2), even);
    PastOrbit po = past_orbit(f, f.base.omega0, sched, bar, even, 60, 40, &cache);
    CHECK(po.c_omega > 0.0);
    CHECK(po.c_omega < 1.0);
    REQUIRE(po.shadow.size() == static_cast<std::size_t>(sched.N[1]) + 1);
    bool saw_underflow = false;
    for (const ShadowRow& row : po.shadow) {
      CHECK(row.pass);
      if (row.bound == 0.0) {
        saw_underflow = true;
        CHECK(row.dist == 0.0);
      }
    }
    CHECK(saw_underflow);
  }

  TEST_CASE("past orbit needs at least one point") {
    RandomMapFamily f = th::defaults();
    BlockSchedule sched;
    sched.rho = {1.0};
    sched.N = {0, 8};
    SymbolStream z = SymbolStream::zeros(2);
    CHECK_THROWS_AS(past_orbit(f, f.base.omega0, sched, z, z, 0), Error);
    PastOrbit po = past_orbit(f, f.base.omega0, sched, z, z, 1);
    CHECK(po.points.size() == 1);
    CHECK(po.shadow.empty());  // needs two blocks
  }

  TEST_CASE("histogram coverage index is the completing point") {
    std::vector<double> pts;
    for (int i = 0; i < 100; ++i) pts.push_back((i + 0.5) / 100.0);
    DensityReport full = density_histogram(pts, 100);
    CHECK(full.l_cover == 100);
    for (i64 h : full.hist) CHECK(h == 1);

    std::vector<double> gap;
    for (int i = 0; i < 100; ++i)
      if (i != 57) gap.push_back((i + 0.5) / 100.0);
    DensityReport missing = density_histogram(gap, 100);
    CHECK(missing.l_cover == -1);
    CHECK(missing.hist[57] == 0);

    // Redundant early points delay coverage to the completing index: the
    // 100th distinct bin is first hit by the 150th point overall.
    std::vector<double> padded(50, 0.005);
    for (int i = 0; i < 100; ++i) padded.push_back((i + 0.5) / 100.0);
    CHECK(density_histogram(padded, 100).l_cover == 150);
  }

  TEST_CASE("production past orbit covers every bin by the frozen index") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    WorkCache cache;
    ScheduleBuild b = build_schedule_partial(obs, f.lambda(), kProductionRho, 10000000);
    SymbolStream even = SymbolStream::random_digits(20260821, 2);
    SymbolStream bar = build_bar_s(b.schedule, SymbolStream::zeros(2), even);
    PastOrbit po = past_orbit(f, f.base.omega0, b.schedule, bar, even, 1024, 40, &cache);
    DensityReport d = density_histogram(po.points, 100);
    CHECK(d.l_cover == 926);
  }

  TEST_CASE("witness scans find both deviations on the production sequence") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    ScheduleBuild b = build_schedule_partial(obs, f.lambda(), kProductionRho, 10000000);
    SymbolStream bar = build_bar_s(b.schedule, SymbolStream::zeros(2),
                                   SymbolStream::random_digits(20260821, 2));
    double istar = 0.06868695019585519;
    WitnessReport rep = residual_witness(f, f.base.omega0, bar, obs, 3, istar / 3.0,
                                         2.0 * istar / 3.0, 20000, {}, istar);
    CHECK(rep.all_found);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].n_below == 1);
    CHECK(rep.rows[0].b_below < rep.alpha);
    CHECK(rep.rows[0].n_above == 155);
    CHECK(rep.rows[1].n_above == 154);
    CHECK(rep.rows[2].n_above == 161);
    for (const WitnessRow& r : rep.rows) {
      CHECK(r.b_above > rep.beta);
      CHECK(r.n_above < 500);
    }
  }

  TEST_CASE("a fixed-point orbit never rises above beta and that is reported") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    WitnessRow row = witness_scan(f, f.base.omega0, SymbolStream::zeros(2), obs,
                                  0.02, 0.05, 2000);
    CHECK(row.found_below);
    CHECK(row.n_below == 1);
    CHECK(!row.found_above);
  }

  TEST_CASE("witness thresholds are validated") {
    RandomMapFamily f = th::defaults();
    BumpObservable obs = th::bump_for(f);
    SymbolStream z = SymbolStream::zeros(2);
    CHECK_THROWS_AS(residual_witness(f, f.base.omega0, z, obs, 1, 0.05, 0.02, 100), Error);
    CHECK_THROWS_AS(residual_witness(f, f.base.omega0, z, obs, 1, 0.0, 0.02, 100), Error);
    CHECK_THROWS_AS(
        residual_witness(f, f.base.omega0, z, obs, 1, 0.02, 0.08, 100, {}, 0.0675), Error);
  }
}
