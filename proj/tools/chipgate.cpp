#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chipgate/conductor.hpp"
#include "chipgate/error.hpp"

namespace cg = chipgate::conductor;

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::size_t> grid_n;
  std::optional<double> dt;
  std::optional<std::size_t> steps;
  bool no_plots = false;
  bool serial = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory (overrides outputs.directory)");
  cmd->add_option("--grid-n", o.grid_n, "dynamics grid points per axis");
  cmd->add_option("--dt", o.dt, "time step in seconds");
  cmd->add_option("--steps", o.steps, "number of time steps");
  cmd->add_flag("--no-plots", o.no_plots, "skip the SVG plots");
  cmd->add_flag("--serial", o.serial, "use the serial reference kernels");
}

cg::RunConfig prepare(const Overrides& o) {
  auto c = cg::load_config(o.config);
  if (!o.out.empty()) c.outputs.directory = o.out;
  if (o.grid_n) c.dynamics.grid_n = *o.grid_n;
  if (o.dt) c.dynamics.dt = *o.dt;
  if (o.steps) c.dynamics.n_steps = *o.steps;
  if (o.no_plots) c.outputs.plots = false;
  cg::validate(c);
  return c;
}

cg::PipelineOptions options(const Overrides& o) {
  cg::PipelineOptions p;
  if (o.serial) {
    p.execution = chipgate::kernels::Execution::serial;
    p.concurrent = false;
  }
  return p;
}

int report(const cg::Manifest& m, const std::string& dir) {
  for (const auto& s : m.stages) {
    std::cout << cg::stage_name(s.stage) << ": " << s.status;
    if (!s.error.empty()) std::cout << " (" << s.error << ")";
    std::cout << '\n';
  }
  std::cout << "artifacts in " << dir << '\n';
  return m.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Atom-chip collisional phase gate simulator"};
  app.require_subcommand(1);
  Overrides o;

  const std::vector<std::pair<std::string, std::string>> stages{
      {"trap", "locate the double-well minima and trap frequencies"},
      {"spectrum", "solve the 1D eigenstates along the double-well axis"},
      {"gate", "propagate the two-atom collisions and extract the gate"},
      {"raman", "Raman sideband couplings and Lamb-Dicke analysis"},
      {"scheme", "verify the duplication and swap gate schemes"},
      {"run", "run every stage"}};
  for (const auto& [name, help] : stages) add_common(app.add_subcommand(name, help), o);

  auto* sw = app.add_subcommand("sweep", "vary one parameter and collect stage metrics");
  add_common(sw, o);
  std::string parameter;
  std::vector<std::string> values;
  std::string sweep_stage;
  sw->add_option("--parameter", parameter, "dotted config path, e.g. dynamics.scattering_length");
  sw->add_option("--values", values, "values, plain SI numbers or quantities with units")->delimiter(',');
  sw->add_option("--stage", sweep_stage, "stage whose metrics are collected");

  CLI11_PARSE(app, argc, argv);

  try {
    auto config = prepare(o);
    const auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "sweep") {
      cg::SweepSpec spec = config.sweep.value_or(cg::SweepSpec{});
      if (!parameter.empty()) spec.parameter = parameter;
      if (!values.empty()) {
        spec.values.clear();
        for (const auto& v : values) {
          const auto parsed = cg::json::parse(v, nullptr, false);
          spec.values.push_back(parsed.is_discarded() ? cg::json(v) : parsed);
        }
      }
      if (!sweep_stage.empty()) spec.stage = cg::parse_stage(sweep_stage);
      if (spec.parameter.empty() || spec.values.empty()) {
        throw chipgate::ConfigError("sweep needs a parameter and values (config or command line)");
      }
      const auto rows = cg::sweep(config, spec, options(o));
      for (const auto& r : rows) {
        std::cout << r.value.dump() << ": " << (r.ok ? "ok" : "failed " + r.error) << '\n';
      }
      return report(cg::write_sweep(config, spec, rows), config.outputs.directory);
    }
    std::set<cg::Stage> requested;
    if (name == "run") {
      requested = {cg::Stage::trap, cg::Stage::spectrum, cg::Stage::gate, cg::Stage::raman, cg::Stage::scheme};
    } else {
      requested = {cg::parse_stage(name)};
    }
    const auto result = cg::run_pipeline(config, requested, options(o));
    return report(result.manifest, config.outputs.directory);
  } catch (const chipgate::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
