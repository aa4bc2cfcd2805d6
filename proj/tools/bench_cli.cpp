// Command-line driver for the identification benchmarks. Every subcommand
// reads a JSON experiment config, runs deterministically from a master seed,
// and writes a primary output plus a .meta.json sidecar next to it.
//
// Exit codes: 0 success, 1 usage/config errors, 2 runtime or check failures.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>

#include "glds/bench/config.hpp"
#include "glds/bench/csv.hpp"
#include "glds/bench/runners.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
};

void add_common_options(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_path, "output path (overrides config output_path)");
  cmd->add_option("--seed", args.seed, "master seed (overrides config seed)")
      ->each([&args](const std::string&) { args.seed_given = true; });
  cmd->add_option("--threads", args.threads, "worker threads")
      ->check(CLI::PositiveNumber);
}

int run_command(const CommonArgs& args, glds::bench::ExperimentKind expected_kind) {
  using namespace glds::bench;

  const std::string config_text = read_text_file(args.config_path);
  const std::uint64_t config_hash = fnv1a64(config_text);
  const ExperimentSpec spec = parse_experiment_spec(config_text);
  if (spec.kind != expected_kind) {
    throw ConfigError(std::string("config kind '") + kind_name(spec.kind) +
                      "' does not match subcommand '" + kind_name(expected_kind) + "'");
  }

  const std::uint64_t master_seed = args.seed_given ? args.seed : spec.seed;
  const std::string out_path =
      !args.out_path.empty() ? args.out_path : spec.output_path;
  if (out_path.empty()) {
    throw ConfigError("no output path: pass --out or set output_path in the config");
  }

  RunResult result;
  switch (spec.kind) {
    case ExperimentKind::simulate:
      result = run_simulate(spec, master_seed, config_hash);
      break;
    case ExperimentKind::certify:
      result = run_certify(spec, master_seed, config_hash);
      break;
    case ExperimentKind::single_fit:
      result = run_single_fit(spec, master_seed, config_hash);
      break;
    case ExperimentKind::rate_sweep:
      result = run_rate_sweep(spec, master_seed, config_hash, args.threads);
      break;
    case ExperimentKind::isometry_trials:
      result = run_isometry_trials(spec, master_seed, config_hash, args.threads);
      break;
    case ExperimentKind::lemma_suite:
      result = run_lemma_suite(spec, master_seed, config_hash, args.threads);
      break;
  }

  for (const auto& warning : result.warnings) {
    std::fprintf(stderr, "warning: %s\n", warning.c_str());
  }
  write_text_file(out_path, result.table);
  write_text_file(out_path + ".meta.json", result.meta);
  if (!result.timing.empty()) {
    write_text_file(out_path + ".timing.csv", result.timing);
  }
  std::printf("%s: wrote %s\n", kind_name(spec.kind).c_str(), out_path.c_str());

  if (!result.checks_passed) {
    std::fprintf(stderr, "error: one or more checks failed; see %s\n", out_path.c_str());
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmarks for nonlinear dynamical system identification"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    glds::bench::ExperimentKind kind;
    CommonArgs args;
  };
  Sub subs[] = {
      {"simulate", "roll out one trajectory to CSV", glds::bench::ExperimentKind::simulate, {}},
      {"certify", "search a stability certificate, report JSON",
       glds::bench::ExperimentKind::certify, {}},
      {"fit", "one end-to-end fit with diagnostics, report JSON",
       glds::bench::ExperimentKind::single_fit, {}},
      {"rate-sweep", "recovery error vs sample size over a grid",
       glds::bench::ExperimentKind::rate_sweep, {}},
      {"isometry", "empirical covariance eigenvalue bounds over trials",
       glds::bench::ExperimentKind::isometry_trials, {}},
      {"verify-lemmas", "Monte Carlo checks of the moment identities and bounds",
       glds::bench::ExperimentKind::lemma_suite, {}},
  };
  for (auto& sub : subs) {
    add_common_options(app.add_subcommand(sub.name, sub.help), sub.args);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    for (const auto& sub : subs) {
      if (app.get_subcommand(sub.name)->parsed()) {
        return run_command(sub.args, sub.kind);
      }
    }
    std::fprintf(stderr, "error: no subcommand\n");
    return 1;
  } catch (const glds::bench::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
