// Command-line front end: tempent <influence|toy|echo|fit|resume> --config <file> [flags]

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "tempent/checkpoint.hpp"
#include "tempent/runner.hpp"

namespace {

const char* command_name(tempent::Command c) {
  switch (c) {
    case tempent::Command::influence: return "influence";
    case tempent::Command::toy: return "toy";
    case tempent::Command::echo: return "echo";
    case tempent::Command::fit: return "fit";
  }
  return "?";
}

void print_summary(const tempent::RunReport& r) {
  for (const auto& p : r.points) {
    std::printf("%s  max_trace_drift=%.3e  wall=%.2fs", p.label.c_str(), p.max_trace_drift, p.wall_seconds);
    if (p.trotter_max_ds2) std::printf("  trotter_max_dS2=%.3e", *p.trotter_max_ds2);
    std::printf("\n");
  }
  std::printf("%zu rows\n", r.rows.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal entanglement of Ising influence functionals"};
  app.require_subcommand(1);

  std::string config_path;
  tempent::Overrides over;
  std::string out;
  std::size_t workers = 0;
  double drift = 0.0;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides config)");
    sub->add_option("--workers", workers, "worker threads (overrides config)")->check(CLI::PositiveNumber);
    sub->add_option("--drift-threshold", drift, "relative trace drift gate (overrides config)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Monte Carlo seed (overrides config)");
  };

  for (const char* name : {"influence", "toy", "echo", "fit"}) {
    add_common(app.add_subcommand(name, std::string("run the ") + name + " pipeline"));
  }
  auto* res = app.add_subcommand("resume", "extend an influence checkpoint");
  add_common(res);
  tempent::ResumeRequest req;
  std::string ckpt;
  res->add_option("--checkpoint", ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  res->add_option("--extend", req.extend, "additional Trotter steps")->required();
  double J = 0, h = 0, g = 0, dt = 0;
  auto* oJ = res->add_option("--param-J", J, "must match the checkpoint");
  auto* oh = res->add_option("--param-h", h, "must match the checkpoint");
  auto* og = res->add_option("--param-g", g, "must match the checkpoint");
  auto* odt = res->add_option("--param-dt", dt, "must match the checkpoint");

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();

  try {
    tempent::ExperimentConfig c = tempent::load_config(config_path);
    if (sub->count("--out")) over.out = out;
    if (sub->count("--workers")) over.workers = workers;
    if (sub->count("--drift-threshold")) over.drift_threshold = drift;
    if (sub->count("--seed")) over.seed = seed;
    tempent::apply_overrides(c, over);

    if (sub->get_name() == "resume") {
      req.checkpoint = ckpt;
      if (*oJ) req.J = J;
      if (*oh) req.h = h;
      if (*og) req.g = g;
      if (*odt) req.dt = dt;
      print_summary(tempent::resume(c, req));
      return 0;
    }
    if (sub->get_name() != command_name(c.command)) {
      throw tempent::ConfigError(std::string("config: command: file selects '") + command_name(c.command) +
                                 "' but the '" + sub->get_name() + "' subcommand was given");
    }
    print_summary(tempent::run(c));
  } catch (const tempent::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const tempent::CheckpointError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
