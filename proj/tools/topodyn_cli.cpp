// topodyn: simulate noisy majority-rule dynamics on sparse random networks,
// track the first-loop birth radius of a lazy witness filtration over the
// active-agent set, and close the coarse-grained loop (lift, evolve,
// restrict) up to fixed points and the fold in epsilon.
//
// Flag precedence: a flag given on the command line overrides the same key
// from --config. Seeds come only from the config/--seed; there is no
// environment fallback.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "topodyn/commands.hpp"
#include "topodyn/config.hpp"
#include "topodyn/manifest.hpp"

namespace {

struct FlagValues {
  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  int landmarks = 0;
  int realizations = 0;
  std::string lift;
  double epsilon = 0.0;
  double d0 = 0.0;
  int steps = 0;
  double R0 = 0.0;
  int macro_steps = 0;
  std::string calibration;
};

void add_common_flags(CLI::App* cmd, FlagValues& v) {
  cmd->add_option("--config", v.config_path, "key=value config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", v.seed, "master seed (unsigned 64-bit)");
  cmd->add_option("--threads", v.threads, "worker cap for ensemble loops");
  cmd->add_option("--out", v.out, "output directory");
  cmd->add_option("--landmarks", v.landmarks, "landmark count per restriction");
  cmd->add_option("--realizations", v.realizations, "ensemble size N");
  cmd->add_option("--lift", v.lift, "lift mode: geometric | annealing");
}

// Only flags the user actually passed override config-file keys.
void apply_flags(const CLI::App* cmd, const FlagValues& v, topodyn::ConfigMap& cfg) {
  auto passed = [cmd](const std::string& name) {
    const CLI::Option* o = cmd->get_option_no_throw(name);
    return o != nullptr && o->count() > 0;
  };
  if (passed("--seed")) cfg.set("seed", std::to_string(v.seed));
  if (passed("--threads")) cfg.set("threads", std::to_string(v.threads));
  if (passed("--out")) cfg.set("out", v.out);
  if (passed("--landmarks")) cfg.set("landmarks", std::to_string(v.landmarks));
  if (passed("--realizations")) cfg.set("N", std::to_string(v.realizations));
  if (passed("--lift")) cfg.set("lift", v.lift);
  if (passed("--epsilon")) cfg.set("epsilon", topodyn::format_double(v.epsilon));
  if (passed("--d0")) cfg.set("d0", topodyn::format_double(v.d0));
  if (passed("--steps")) cfg.set("steps", std::to_string(v.steps));
  if (passed("--R0")) cfg.set("R0", topodyn::format_double(v.R0));
  if (passed("--macro-steps")) cfg.set("macro_steps", std::to_string(v.macro_steps));
  if (passed("--calibration")) cfg.set("calibration", v.calibration);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coarse-grained topology of network dynamics"};
  app.set_version_flag("--version", std::string("topodyn ") + topodyn::kVersion);
  app.require_subcommand(1);

  FlagValues v;
  CLI::App* simulate = app.add_subcommand("simulate", "per-step witness series for (eps, d0) cells");
  CLI::App* ensemble = app.add_subcommand("ensemble", "ensemble-averaged density and loop radius");
  CLI::App* calibrate = app.add_subcommand("calibrate", "lattice spacing to loop radius table");
  CLI::App* coarse = app.add_subcommand("coarse", "iterated lift-evolve-restrict trajectory");
  CLI::App* fixed_points =
      app.add_subcommand("fixed-points", "roots and stability of the coarse map at one epsilon");
  CLI::App* bifurcation =
      app.add_subcommand("bifurcation", "root structure over an epsilon grid and the fold");

  for (CLI::App* cmd : {simulate, ensemble, calibrate, coarse, fixed_points, bifurcation})
    add_common_flags(cmd, v);
  for (CLI::App* cmd : {simulate, ensemble, coarse, fixed_points, bifurcation})
    cmd->add_option("--epsilon", v.epsilon, "flip probability against the local majority");
  for (CLI::App* cmd : {simulate, ensemble})
    cmd->add_option("--d0", v.d0, "initial active density");
  for (CLI::App* cmd : {simulate, ensemble})
    cmd->add_option("--steps", v.steps, "micro steps to record");
  coarse->add_option("--R0", v.R0, "initial coarse state");
  coarse->add_option("--macro-steps", v.macro_steps, "coarse map iterations");
  for (CLI::App* cmd : {coarse, fixed_points, bifurcation})
    cmd->add_option("--calibration", v.calibration, "calibration table CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
        e.get_name() == "CallForVersion")
      return app.exit(e);
    app.exit(e);
    return 2;
  }

  CLI::App* active = app.get_subcommands().front();
  topodyn::ConfigMap cfg;
  try {
    if (active->count("--config") > 0) {
      std::ifstream is(v.config_path);
      if (!is) {
        std::cerr << "io error: cannot read config '" << v.config_path << "'\n";
        return 4;
      }
      cfg = topodyn::ConfigMap::parse(is);
    }
    apply_flags(active, v, cfg);
  } catch (const topodyn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  return topodyn::run_command(active->get_name(), cfg, std::cerr);
}
