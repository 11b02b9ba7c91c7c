// experiment.hpp — run configuration, canonical hashing, run manifests, the
// content-addressed disk cache, and the per-subcommand drivers shared by the
// command-line tool and the tests.
//
// Result files (CSV, summary JSON) are deterministic functions of the
// configuration: no timestamps, no machine identifiers, fixed float
// formatting. Wall-clock data lives only in manifest.json.
#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "rcmap/historic.hpp"

namespace rcmap {

using nlohmann::json;

constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  // Map family.
  int k = 2;
  double a = 0.02;
  double eps = 0.01;
  double delta0 = 0.2;
  double eta = 0.06;
  double box_lo = -0.1;
  double box_hi = 0.1;
  // Base rotation.
  double alpha = 0.6180339887498949;
  double omega0 = 0.0;
  // Solver and resolution.
  double solver_tol = 1e-12;
  int grid_level = 12;
  int decode_depth = 40;
  // Block schedule: rho_j = rho_base^j for j = 1..blocks, capped by budget.
  int blocks = 4;
  double rho_base = 0.5;
  i64 budget = 10000000;
  // Symbol sources: odd blocks read the all-zeros itinerary; even blocks
  // read either counter-mode uniform digits (seeded) or the exact base-k
  // digits of x_star.
  std::string even_source = "random";
  u64 x_star_seed = 20260821;
  double x_star = 0.3;
  u64 sample_seed = 17;
  // Execution (not part of the semantic hash).
  std::string out_dir = "out";
  int workers = 1;
  bool no_cache = false;

  RandomMapFamily family() const {
    RandomMapFamily f;
    f.k = k;
    f.a = a;
    f.eps = eps;
    f.delta0 = delta0;
    f.eta = eta;
    f.box_lo = box_lo;
    f.box_hi = box_hi;
    f.base = RotationBase::make(alpha, omega0);
    f.solver_tol = solver_tol;
    return f;
  }

  json to_json() const {
    json j;
    j["k"] = k;
    j["a"] = a;
    j["eps"] = eps;
    j["delta0"] = delta0;
    j["eta"] = eta;
    j["box_lo"] = box_lo;
    j["box_hi"] = box_hi;
    j["alpha"] = alpha;
    j["omega0"] = omega0;
    j["solver_tol"] = solver_tol;
    j["grid_level"] = grid_level;
    j["decode_depth"] = decode_depth;
    j["blocks"] = blocks;
    j["rho_base"] = rho_base;
    j["budget"] = budget;
    j["even_source"] = even_source;
    j["x_star_seed"] = x_star_seed;
    j["x_star"] = x_star;
    j["sample_seed"] = sample_seed;
    j["out_dir"] = out_dir;
    j["workers"] = workers;
    j["no_cache"] = no_cache;
    return j;
  }

  static ExperimentConfig from_json(const json& j) {
    ExperimentConfig d;
    d.k = j.value("k", d.k);
    d.a = j.value("a", d.a);
    d.eps = j.value("eps", d.eps);
    d.delta0 = j.value("delta0", d.delta0);
    d.eta = j.value("eta", d.eta);
    d.box_lo = j.value("box_lo", d.box_lo);
    d.box_hi = j.value("box_hi", d.box_hi);
    d.alpha = j.value("alpha", d.alpha);
    d.omega0 = j.value("omega0", d.omega0);
    d.solver_tol = j.value("solver_tol", d.solver_tol);
    d.grid_level = j.value("grid_level", d.grid_level);
    d.decode_depth = j.value("decode_depth", d.decode_depth);
    d.blocks = j.value("blocks", d.blocks);
    d.rho_base = j.value("rho_base", d.rho_base);
    d.budget = j.value("budget", d.budget);
    d.even_source = j.value("even_source", d.even_source);
    d.x_star_seed = j.value("x_star_seed", d.x_star_seed);
    d.x_star = j.value("x_star", d.x_star);
    d.sample_seed = j.value("sample_seed", d.sample_seed);
    d.out_dir = j.value("out_dir", d.out_dir);
    d.workers = j.value("workers", d.workers);
    d.no_cache = j.value("no_cache", d.no_cache);
    return d;
  }

  // Canonical form: the semantic fields only, serialized with sorted keys
  // and shortest round-trip floats. Execution knobs (output dir, workers,
  // cache switch) never change results, so they are excluded.
  std::string canonical() const {
    json j = to_json();
    j.erase("out_dir");
    j.erase("workers");
    j.erase("no_cache");
    return j.dump();
  }

  u64 hash() const { return fnv1a_str(canonical()); }
};

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct RunManifest {
  std::string command;
  u64 config_hash = 0;
  std::string started_at;
  std::vector<std::pair<std::string, double>> timings;  // stage -> seconds
  json outcomes = json::object();
  int exit_code = 0;

  static std::string now_iso() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
  }

  json to_json() const {
    json j;
    j["version"] = kVersion;
    j["command"] = command;
    char hex[24];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(config_hash));
    j["config_hash"] = hex;
    j["started_at"] = started_at;
    json t = json::object();
    for (const auto& [name, secs] : timings) t[name] = secs;
    j["timings"] = t;
    j["outcomes"] = outcomes;
    j["exit_code"] = exit_code;
    return j;
  }
};

class StageTimer {
 public:
  StageTimer(RunManifest& m, std::string name)
      : m_(m), name_(std::move(name)), t0_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    auto dt = std::chrono::steady_clock::now() - t0_;
    m_.timings.emplace_back(name_, std::chrono::duration<double>(dt).count());
  }

 private:
  RunManifest& m_;
  std::string name_;
  std::chrono::steady_clock::time_point t0_;
};

// ---------------------------------------------------------------------------
// Files and the disk cache
// ---------------------------------------------------------------------------

inline void write_text_file(const std::filesystem::path& path, const std::string& body) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(Errc::io_error, "cannot open for writing: " + tmp.string());
    os << body;
    if (!os) throw Error(Errc::io_error, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::io_error, "rename failed: " + path.string() + ": " + ec.message());
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::io_error, "cannot open for reading: " + path.string());
  json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw Error(Errc::io_error, "malformed JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

// Content-addressed pure-result cache: key -> JSON blob under <dir>/cache.
// Disabled caches read and write nothing; results never depend on hits.
struct DiskCache {
  std::filesystem::path dir;
  bool enabled = false;

  std::filesystem::path path_for(u64 key) const {
    char name[32];
    std::snprintf(name, sizeof name, "%016llx.json", static_cast<unsigned long long>(key));
    return dir / name;
  }

  std::optional<json> get(u64 key) const {
    if (!enabled) return std::nullopt;
    std::filesystem::path p = path_for(key);
    std::error_code ec;
    if (!std::filesystem::exists(p, ec) || ec) return std::nullopt;
    try {
      return read_json_file(p);
    } catch (const Error&) {
      return std::nullopt;  // corrupt entries are treated as misses
    }
  }

  void put(u64 key, const json& value) const {
    if (!enabled) return;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) return;  // cache is best-effort; results never require it
    try {
      write_json_file(path_for(key), value);
    } catch (const Error&) {
    }
  }
};

// Straightening grid lookup through the disk cache. Keyed by family hash,
// noise state, and level; a hit reproduces the computed grid bit for bit
// (lifts are serialized with full round-trip precision).
inline ConjugacyGrid cached_grid(const RandomMapFamily& fam, u64 omega, int level,
                                 const DiskCache& disk, WorkCache* work = nullptr) {
  u64 key = fnv1a_str("grid");
  u64 fh = fam.hash();
  key = fnv1a(&fh, sizeof fh, key);
  key = fnv1a(&omega, sizeof omega, key);
  key = fnv1a(&level, sizeof level, key);
  if (auto hit = disk.get(key)) {
    const json& j = *hit;
    ConjugacyGrid g;
    g.k = fam.k;
    g.level = level;
    g.omega = omega;
    g.p_depth = j.value("p_depth", 0);
    g.family_hash = fh;
    g.max_gap = j.value("max_gap", 0.0);
    if (j.contains("lifts") && j["lifts"].is_array()) {
      g.lifts = j["lifts"].get<std::vector<double>>();
      std::size_t want = 1;
      for (int i = 0; i < level; ++i) want *= static_cast<std::size_t>(fam.k);
      if (g.lifts.size() == want + 1) return g;
    }
    // Malformed entry: recompute below.
  }
  ConjugacyGrid g = conjugacy_grid(fam, omega, level, work);
  json j;
  j["p_depth"] = g.p_depth;
  j["max_gap"] = g.max_gap;
  j["lifts"] = g.lifts;
  disk.put(key, j);
  return g;
}

// ---------------------------------------------------------------------------
// Shared run context and the subcommand drivers
// ---------------------------------------------------------------------------

struct RunContext {
  ExperimentConfig cfg;
  std::filesystem::path out;
  DiskCache disk;
  WorkCache work;
  RunManifest manifest;
  std::ostream* log = nullptr;

  std::ostream& say() { return *log; }

  RunContext(const ExperimentConfig& config, std::ostream& log_stream,
             const std::string& command)
      : cfg(config), out(config.out_dir), disk{out / "cache", !config.no_cache},
        log(&log_stream) {
    manifest.command = command;
    manifest.config_hash = cfg.hash();
    manifest.started_at = RunManifest::now_iso();
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec)
      throw Error(Errc::io_error, "cannot create output dir: " + out.string() + ": " + ec.message());
  }
};

inline json hypothesis_json(const HypothesisReport& r) {
  json j;
  j["ok"] = r.ok;
  j["violation"] = r.violation;
  j["lambda0_certified"] = r.lambda0_certified;
  j["lambda0_exact"] = r.lambda0_exact;
  j["lambda"] = r.lambda;
  j["inf_deriv_certified"] = r.inf_deriv_certified;
  j["eps0"] = r.eps0;
  j["sup_c0_distance"] = r.sup_c0_distance;
  j["degree_defect"] = r.degree_defect;
  j["box_margin"] = r.box_margin;
  return j;
}

// validate: check every standing hypothesis, naming the first violation.
inline int run_validate(RunContext& ctx) {
  StageTimer t(ctx.manifest, "validate");
  RandomMapFamily fam = ctx.cfg.family();
  HypothesisReport rep = validate_hypotheses(fam);
  json j = hypothesis_json(rep);
  write_json_file(ctx.out / "validation.json", j);
  ctx.manifest.outcomes["validation"] = j;
  if (rep.ok)
    ctx.say() << "validate: PASS (lambda = " << rep.lambda << ", eps0 = " << rep.eps0 << ")\n";
  else
    ctx.say() << "validate: FAIL (" << rep.violation << ")\n";
  return rep.ok ? 0 : 1;
}

// conjugacy: build the straightening grid at the configured level, write it
// as CSV, and measure the conjugation residual on a sample grid.
inline int run_conjugacy(RunContext& ctx) {
  RandomMapFamily fam = ctx.cfg.family();
  require_valid(fam);
  u64 omega = fam.base.omega0;
  ConjugacyGrid g;
  {
    StageTimer t(ctx.manifest, "grid");
    g = cached_grid(fam, omega, ctx.cfg.grid_level, ctx.disk, &ctx.work);
  }
  double residual;
  {
    StageTimer t(ctx.manifest, "residual");
    residual = conjugacy_residual(fam, omega, ctx.cfg.grid_level, 4096, &ctx.work);
  }
  {
    std::ostringstream csv;
    write_grid_csv(csv, g);
    write_text_file(ctx.out / "grid.csv", csv.str());
  }
  json j;
  j["level"] = g.level;
  j["p_depth"] = g.p_depth;
  j["max_gap"] = g.max_gap;
  j["gap_bound"] = std::pow(fam.lambda(), -g.level);
  j["residual"] = residual;
  write_json_file(ctx.out / "conjugacy.json", j);
  ctx.manifest.outcomes["conjugacy"] = j;
  ctx.say() << "conjugacy: level " << g.level << ", max gap " << g.max_gap << ", residual "
            << residual << "\n";
  return 0;
}

// partition: level-1 boundaries at omega0 plus the verified bump gap.
inline int run_partition(RunContext& ctx) {
  StageTimer t(ctx.manifest, "partition");
  RandomMapFamily fam = ctx.cfg.family();
  require_valid(fam);
  Partition part = partition_boundaries(fam, fam.base.omega0, &ctx.work);
  GapIntervals gaps = gap_interval(fam.k, fam.delta0);
  GapCheck check = verify_gap(fam, gaps, 1000, ctx.cfg.sample_seed, &ctx.work);
  json j;
  j["boundaries"] = part.points;
  j["max_cylinder"] = part.max_cylinder;
  j["J"] = {gaps.J.lo, gaps.J.hi};
  j["Jp"] = {gaps.Jp.lo, gaps.Jp.hi};
  j["ramp_width"] = gaps.ramp_width;
  j["gap_verified"] = check.ok;
  j["min_clearance"] = check.min_clearance;
  write_json_file(ctx.out / "partition.json", j);
  ctx.manifest.outcomes["partition"] = j;
  ctx.say() << "partition: " << fam.k << " cells, gap "
            << (check.ok ? "verified" : "VIOLATED") << " (clearance " << check.min_clearance
            << ")\n";
  return check.ok ? 0 : 1;
}

// code: decode the configured seed itinerary, re-encode the decoded point,
// and confirm the round trip.
inline int run_code(RunContext& ctx) {
  StageTimer t(ctx.manifest, "code");
  RandomMapFamily fam = ctx.cfg.family();
  require_valid(fam);
  u64 omega = fam.base.omega0;
  SymbolStream s = SymbolStream::digits_of(ctx.cfg.x_star, fam.k);
  double pt = decode_point(fam, omega, s, ctx.cfg.decode_depth, &ctx.work);
  int n = std::min(10, ctx.cfg.decode_depth);
  SymbolWord w = encode_point(fam, omega, pt, n, &ctx.work);
  bool match = (w == s.prefix(n));
  Cylinder cyl = cylinder(fam, omega, s.prefix(n), &ctx.work);
  json j;
  j["x_star"] = ctx.cfg.x_star;
  j["decoded_point"] = pt;
  j["depth"] = ctx.cfg.decode_depth;
  j["word"] = w.syms;
  j["round_trip"] = match;
  j["cylinder_length"] = cyl.length();
  j["cylinder_bound"] = std::pow(fam.lambda(), -n);
  write_json_file(ctx.out / "code.json", j);
  ctx.manifest.outcomes["code"] = j;
  ctx.say() << "code: round trip " << (match ? "OK" : "MISMATCH") << ", cylinder length "
            << cyl.length() << "\n";
  return match ? 0 : 1;
}

inline json certificate_json(const BlockCertificate& c) {
  json j;
  j["j"] = c.j;
  j["rho_tilde"] = c.rho_tilde;
  j["N_prev"] = c.N_prev;
  j["N"] = c.N;
  j["growth_ok"] = c.growth_ok;
  j["head_ok"] = c.head_ok;
  j["rev_head_ok"] = c.rev_head_ok;
  j["rev_tail_ok"] = c.rev_tail_ok;
  j["midpoint_ok"] = c.midpoint_ok;
  return j;
}

inline json integral_json(const IntegralResult& r) {
  json j;
  j["value"] = r.value;
  j["bound"] = r.bound;
  j["lambda_term"] = r.lambda_term;
  j["quad_term"] = r.quad_term;
  j["modulus_term"] = r.modulus_term;
  j["level"] = r.level;
  j["q_omega"] = r.q_omega;
  j["q_x"] = r.q_x;
  return j;
}

// Shared assembly for the historic pipeline: family, bump, target integral,
// schedule, composite sequence.
struct HistoricSetup {
  RandomMapFamily fam;
  BumpObservable obs;
  IntegralResult istar;
  ScheduleBuild build;
  SymbolStream s_odd = SymbolStream::zeros(2);
  SymbolStream s_even = SymbolStream::zeros(2);
  SymbolStream s_bar = SymbolStream::zeros(2);
};

inline std::vector<double> rho_sequence(const ExperimentConfig& cfg) {
  std::vector<double> rho;
  double r = 1.0;
  for (int j = 1; j <= cfg.blocks; ++j) {
    r *= cfg.rho_base;
    rho.push_back(r);
  }
  return rho;
}

inline HistoricSetup historic_setup(RunContext& ctx, int q_omega = 64, int q_x = 65536) {
  HistoricSetup h;
  h.fam = ctx.cfg.family();
  require_valid(h.fam);
  GapIntervals gaps = gap_interval(h.fam.k, h.fam.delta0);
  GapCheck check = verify_gap(h.fam, gaps, 1000, ctx.cfg.sample_seed, &ctx.work);
  if (!check.ok)
    throw Error(Errc::invalid_family, "historic: bump support gap not verified at sampled noise states");
  h.obs = BumpObservable::from_gaps(gaps);
  {
    StageTimer t(ctx.manifest, "target_integral");
    h.istar = target_integral(h.fam, h.obs, q_omega, q_x, ctx.cfg.grid_level, &ctx.work);
  }
  {
    StageTimer t(ctx.manifest, "schedule");
    h.build = build_schedule_partial(h.obs, h.fam.lambda(), rho_sequence(ctx.cfg), ctx.cfg.budget);
  }
  h.s_odd = SymbolStream::zeros(h.fam.k);
  h.s_even = (ctx.cfg.even_source == "digits")
                 ? SymbolStream::digits_of(ctx.cfg.x_star, h.fam.k)
                 : SymbolStream::random_digits(ctx.cfg.x_star_seed, h.fam.k);
  if (h.build.schedule.blocks() >= 1)
    h.s_bar = build_bar_s(h.build.schedule, h.s_odd, h.s_even);
  return h;
}

inline json schedule_json(const HistoricSetup& h) {
  json j;
  j["rho"] = h.build.schedule.rho;
  j["N"] = h.build.schedule.N;
  json certs = json::array();
  for (const BlockCertificate& c : h.build.schedule.certs) certs.push_back(certificate_json(c));
  j["certificates"] = certs;
  j["requested_blocks"] = h.build.requested;
  j["feasible_blocks"] = h.build.schedule.blocks();
  j["budget_exceeded"] = h.build.exceeded;
  if (h.build.exceeded) j["first_infeasible_N"] = h.build.first_infeasible_N;
  return j;
}

// historic: the full pipeline — validate, target integral, certified block
// schedule, composite sequence, oscillation measurement at every half-time
// checkpoint. Budget overruns report the feasible prefix and exit 2.
inline int run_historic(RunContext& ctx) {
  HistoricSetup h = historic_setup(ctx);
  json summary;
  summary["target_integral"] = integral_json(h.istar);
  summary["schedule"] = schedule_json(h);
  summary["seeds"] = {{"x_star_seed", ctx.cfg.x_star_seed},
                      {"sample_seed", ctx.cfg.sample_seed},
                      {"even_source", ctx.cfg.even_source}};

  if (h.build.exceeded && h.build.schedule.blocks() < 1) {
    write_json_file(ctx.out / "historic_summary.json", summary);
    ctx.manifest.outcomes["historic"] = summary;
    ctx.say() << "historic: no block fits the iteration budget\n";
    return 2;
  }

  OscillationReport rep;
  {
    StageTimer t(ctx.manifest, "oscillation");
    BirkhoffOptions opts;
    opts.depth = ctx.cfg.decode_depth;
    opts.workers = ctx.cfg.workers;
    rep = oscillation_report(h.fam, h.fam.base.omega0, h.build.schedule, h.s_bar, h.obs,
                             h.istar.value, opts);
  }
  {
    std::ostringstream csv;
    write_oscillation_csv(csv, rep);
    write_text_file(ctx.out / "oscillation.csv", csv.str());
  }
  json rows = json::array();
  for (const BlockRow& r : rep.rows) {
    json jr;
    jr["j"] = r.j;
    jr["parity"] = r.even ? "even" : "odd";
    jr["N"] = r.N;
    jr["checkpoint"] = r.checkpoint;
    jr["value"] = r.value;
    jr["bound"] = r.bound;
    jr["rho_term"] = r.rho_term;
    jr["head_term"] = r.head_term;
    jr["shadow_term"] = r.shadow_term;
    jr["num_err"] = r.num_err;
    jr["pass"] = r.pass;
    rows.push_back(jr);
  }
  summary["blocks"] = rows;
  summary["measured_gap"] = rep.measured_gap;
  summary["gap_lower_bound"] = rep.gap_lower_bound;
  summary["all_pass"] = rep.all_pass;
  write_json_file(ctx.out / "historic_summary.json", summary);
  ctx.manifest.outcomes["historic"] = summary;

  ctx.say() << "historic: I* = " << h.istar.value << ", " << h.build.schedule.blocks()
            << " blocks, checkpoints " << (rep.all_pass ? "all pass" : "FAIL")
            << ", measured gap " << rep.measured_gap << "\n";
  if (h.build.exceeded) {
    ctx.say() << "historic: budget exceeded at block " << (h.build.schedule.blocks() + 1)
              << " (needs N = " << h.build.first_infeasible_N << " > " << ctx.cfg.budget
              << "); largest feasible block count: " << h.build.schedule.blocks() << "\n";
    return 2;
  }
  return rep.all_pass ? 0 : 1;
}

// density: decode a prefix of the composite past orbit, report histogram
// coverage and the even-tail shadowing comparison.
inline int run_density(RunContext& ctx) {
  HistoricSetup h = historic_setup(ctx);
  if (h.build.schedule.blocks() < 2)
    throw Error(Errc::budget_exceeded, "density: need at least two scheduled blocks");
  StageTimer t(ctx.manifest, "density");
  const int bins = 100;
  i64 L = 512;
  const i64 L_cap = 65536;
  PastOrbit orbit;
  DensityReport dens;
  for (;;) {
    orbit = past_orbit(h.fam, h.fam.base.omega0, h.build.schedule, h.s_bar, h.s_even, L,
                       ctx.cfg.decode_depth, &ctx.work);
    dens = density_histogram(orbit.points, bins);
    if (dens.l_cover >= 0 || L >= L_cap) break;
    L *= 2;
  }

  std::ostringstream csv;
  csv << "bin,count\n";
  for (int b = 0; b < bins; ++b) csv << b << "," << dens.hist[static_cast<std::size_t>(b)] << "\n";
  write_text_file(ctx.out / "density.csv", csv.str());

  json j;
  j["bins"] = bins;
  j["L"] = L;
  j["l_cover"] = dens.l_cover;
  j["c_omega"] = orbit.c_omega;
  json rows = json::array();
  bool shadow_ok = true;
  for (const ShadowRow& r : orbit.shadow) {
    json jr;
    jr["ell"] = r.ell;
    jr["dist"] = r.dist;
    jr["bound"] = r.bound;
    jr["pass"] = r.pass;
    shadow_ok = shadow_ok && r.pass;
    rows.push_back(jr);
  }
  j["shadow"] = rows;
  j["shadow_ok"] = shadow_ok;
  write_json_file(ctx.out / "density.json", j);
  ctx.manifest.outcomes["density"] = j;
  ctx.say() << "density: " << bins << " bins, coverage at L = " << dens.l_cover
            << (dens.l_cover < 0 ? " (not reached)" : "") << ", shadowing "
            << (shadow_ok ? "OK" : "FAIL") << "\n";
  return (dens.l_cover >= 0 && shadow_ok) ? 0 : 1;
}

// witness: scan the first past-orbit points for Birkhoff averages below
// alpha = I*/3 and above beta = 2 I*/3. Absence below the horizon is
// reported as data.
inline int run_witness(RunContext& ctx) {
  HistoricSetup h = historic_setup(ctx);
  if (h.build.schedule.blocks() < 2)
    throw Error(Errc::budget_exceeded, "witness: need at least two scheduled blocks");
  StageTimer t(ctx.manifest, "witness");
  double alpha = h.istar.value / 3.0;
  double beta = 2.0 * h.istar.value / 3.0;
  i64 n_max = h.build.schedule.horizon();
  BirkhoffOptions opts;
  opts.depth = ctx.cfg.decode_depth;
  opts.workers = ctx.cfg.workers;
  WitnessReport rep =
      residual_witness(h.fam, h.fam.base.omega0, h.s_bar, h.obs, 10, alpha, beta, n_max, opts,
                       h.istar.value);

  json j;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["n_max"] = n_max;
  json rows = json::array();
  for (const WitnessRow& r : rep.rows) {
    json jr;
    jr["ell"] = r.ell;
    jr["start_point"] = r.start_point;
    jr["found_below"] = r.found_below;
    jr["n_below"] = r.n_below;
    jr["b_below"] = r.b_below;
    jr["found_above"] = r.found_above;
    jr["n_above"] = r.n_above;
    jr["b_above"] = r.b_above;
    rows.push_back(jr);
  }
  j["witnesses"] = rows;
  j["all_found"] = rep.all_found;
  write_json_file(ctx.out / "witness.json", j);
  ctx.manifest.outcomes["witness"] = j;
  ctx.say() << "witness: alpha = " << alpha << ", beta = " << beta << ", "
            << (rep.all_found ? "all witnesses found both indices"
                              : "some witness lacks an index (reported)")
            << "\n";
  return 0;
}

}  // namespace rcmap
