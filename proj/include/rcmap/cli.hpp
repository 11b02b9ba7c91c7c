// cli.hpp — command-line front end: subcommand parsing, config loading,
// flag overrides, dispatch, manifest emission, and exit-code mapping.
// Factored out of main() so tests can drive the exact CLI surface.
#pragma once

#include "CLI11.hpp"
#include "rcmap/experiment.hpp"

namespace rcmap {

// Exit codes: 0 success, 1 hypothesis/validation failure, 2 budget
// exceeded, 3 I/O error.
inline int cli_run(std::vector<std::string> args, std::ostream& log) {
  CLI::App app{"random expanding circle maps: conjugation, coding, and historic orbits"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool no_cache = false;
  u64 seed = 0;
  int workers = 0;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "sampling seed override");
  app.add_option("--workers", workers, "worker threads (never changes results)");
  app.add_flag("--no-cache", no_cache, "bypass the disk cache");

  const char* names[] = {"validate", "conjugacy", "partition", "code",
                         "historic", "density",   "witness"};
  const char* descs[] = {
      "check the standing hypotheses of the map family",
      "build the straightening grid and measure its residual",
      "level-1 partition boundaries and the verified bump gap",
      "decode/encode round trip at the configured depth",
      "full pipeline: target integral, block schedule, oscillation report",
      "past-orbit density histogram and shadowing comparison",
      "finite-time witness indices for the oscillation",
  };
  for (int i = 0; i < 7; ++i) app.add_subcommand(names[i], descs[i])->fallthrough();

  // argv order with program name stripped.
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    std::ostringstream help;
    help << app.help();
    log << help.str();
    return 0;
  } catch (const CLI::ParseError& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }

  ExperimentConfig cfg;
  int code = 0;
  std::string command;
  for (int i = 0; i < 7; ++i)
    if (app.get_subcommand(names[i])->parsed()) command = names[i];

  try {
    if (!config_path.empty()) cfg = ExperimentConfig::from_json(read_json_file(config_path));
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (app.count("--seed") > 0) cfg.sample_seed = seed;
    if (workers > 0) cfg.workers = workers;
    if (no_cache) cfg.no_cache = true;

    RunContext ctx(cfg, log, command);
    try {
      if (command == "validate") code = run_validate(ctx);
      else if (command == "conjugacy") code = run_conjugacy(ctx);
      else if (command == "partition") code = run_partition(ctx);
      else if (command == "code") code = run_code(ctx);
      else if (command == "historic") code = run_historic(ctx);
      else if (command == "density") code = run_density(ctx);
      else if (command == "witness") code = run_witness(ctx);
    } catch (const Error& e) {
      log << "error: " << e.what() << "\n";
      ctx.manifest.outcomes["error"] = e.what();
      code = exit_code_for(e.code);
    } catch (const std::exception& e) {
      log << "error: " << e.what() << "\n";
      ctx.manifest.outcomes["error"] = e.what();
      code = 1;
    }
    ctx.manifest.exit_code = code;
    try {
      write_json_file(ctx.out / "manifest.json", ctx.manifest.to_json());
    } catch (const Error&) {
      // Manifest emission must not mask the run's own outcome.
    }
    return code;
  } catch (const Error& e) {
    // Config loading or output-directory failures land here.
    log << "error: " << e.what() << "\n";
    return exit_code_for(e.code);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace rcmap
