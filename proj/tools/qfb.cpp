#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qfb/cli.hpp"

namespace {

struct Common {
  std::string config_path;
  std::string out;
  std::string seed;
  unsigned jobs = qfb::default_jobs();
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "config file (key = value lines)");
  app->add_option("--out", c.out, "output CSV path; extra files use it as a stem; '-' for stdout");
  app->add_option("--seed", c.seed, "RNG seed (u64), overrides the config");
  app->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("--set", c.sets, "key=value override, repeatable");
}

qfb::RunConfig gather(const Common& c) {
  qfb::RunConfig cfg;
  if (!c.config_path.empty()) cfg = qfb::load_config(c.config_path);
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw qfb::ConfigError("--set expects key=value, got " + kv);
    cfg.set(qfb::detail::trim(kv.substr(0, eq)), qfb::detail::trim(kv.substr(eq + 1)));
  }
  if (!c.seed.empty()) cfg.set("seed", std::to_string(qfb::parse_seed(c.seed)));
  return cfg;
}

void emit(const std::string& out, const std::vector<qfb::OutputFile>& files) {
  if (out == "-") {
    for (const auto& f : files) {
      if (!f.suffix.empty()) throw qfb::ConfigError("this command writes several files; give --out a path");
      std::fwrite(f.content.data(), 1, f.content.size(), stdout);
    }
    return;
  }
  qfb::write_outputs(out, files);
  for (const auto& f : files) std::fprintf(stderr, "wrote %s\n", qfb::output_path(out, f.suffix).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steady states, sweeps and quantum trajectories of two atoms under cavity feedback"};
  app.require_subcommand(1);
  Common steady, sweep, traj, figure;
  std::string figure_name;
  auto* s1 = app.add_subcommand("steady", "steady state of one model");
  auto* s2 = app.add_subcommand("sweep", "steady-state concurrence on a parameter grid");
  auto* s3 = app.add_subcommand("traj", "quantum trajectory (and ensemble with ntraj > 1)");
  auto* s4 = app.add_subcommand("figure", "data behind one of the paper figures");
  add_common(s1, steady);
  add_common(s2, sweep);
  add_common(s3, traj);
  add_common(s4, figure);
  s4->add_option("name", figure_name, "fig2 fig3a fig3c fig4a fig4c fig5a fig5b fig5c fig5d fig6 fig7a fig7b fig8")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : qfb::exit_code::config;
  }

  try {
    if (s1->parsed()) {
      emit(steady.out.empty() ? "-" : steady.out, qfb::cmd_steady(gather(steady)));
    } else if (s2->parsed()) {
      emit(sweep.out.empty() ? "sweep.csv" : sweep.out, qfb::cmd_sweep(gather(sweep), sweep.jobs));
    } else if (s3->parsed()) {
      emit(traj.out.empty() ? "traj.csv" : traj.out, qfb::cmd_traj(gather(traj), traj.jobs));
    } else if (s4->parsed()) {
      emit(figure.out.empty() ? figure_name + ".csv" : figure.out,
           qfb::cmd_figure(figure_name, gather(figure), figure.jobs));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return qfb::exit_code_for(e);
  }
  return qfb::exit_code::ok;
}
