// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "chipgate/chipfield.hpp"
#include "chipgate/collider2d.hpp"
#include "chipgate/conductor.hpp"
#include "chipgate/error.hpp"
#include "chipgate/gatelogic.hpp"
#include "chipgate/spectrum1d.hpp"
#include "chipgate/trapfinder.hpp"
#include "chipgate/units.hpp"

using namespace chipgate;
namespace cg = chipgate::conductor;
namespace fs = std::filesystem;
using cg::json;

namespace {

constexpr double pi = constants::pi;

struct Check {
  std::string name;
  double value;
  bool pass;
  std::string limit;
};

class Criterion {
 public:
  void add(const std::string& name, double value, bool pass, const std::string& limit) {
    checks_.push_back({name, value, pass, limit});
  }
  void within(const std::string& name, double value, double target, double rel) {
    std::ostringstream l;
    l << target << " +/- " << rel * 100 << "%";
    add(name, value, std::abs(value - target) <= rel * std::abs(target), l.str());
  }
  void range(const std::string& name, double value, double lo, double hi) {
    std::ostringstream l;
    l << "[" << lo << ", " << hi << "]";
    add(name, value, value >= lo && value <= hi, l.str());
  }
  void below(const std::string& name, double value, double limit) {
    std::ostringstream l;
    l << "< " << limit;
    add(name, value, value < limit, l.str());
  }
  void above(const std::string& name, double value, double limit) {
    std::ostringstream l;
    l << "> " << limit;
    add(name, value, value > limit, l.str());
  }
  void fail(const std::string& why) { error_ = why; }
  bool pass() const {
    return error_.empty() && !checks_.empty() &&
           std::all_of(checks_.begin(), checks_.end(), [](const Check& c) { return c.pass; });
  }
  void print(int id, const std::string& title) const {
    std::printf("criterion %d: %s  %s\n", id, pass() ? "PASS" : "FAIL", title.c_str());
    for (const auto& c : checks_) {
      std::printf("    %-4s %-34s %.10g  (%s)\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.value, c.limit.c_str());
    }
    if (!error_.empty()) std::printf("    error: %s\n", error_.c_str());
    std::fflush(stdout);
  }

 private:
  std::vector<Check> checks_;
  std::string error_;
};

cg::RunConfig with_dir(cg::RunConfig c, const fs::path& dir) {
  c.outputs.directory = dir.string();
  c.outputs.plots = false;
  return c;
}

json stage_report(const cg::PipelineResult& r, const std::string& stage) {
  for (const auto& s : r.manifest.stages) {
    if (cg::stage_name(s.stage) == stage && s.status != "ok") {
      throw Error(stage + " stage " + s.status + ": " + s.error);
    }
  }
  return r.reports.at(stage);
}

Criterion trap_reproduction(const cg::RunConfig& config, const fs::path& work) {
  Criterion c;
  const auto r = cg::run_pipeline(with_dir(config, work / "trap"), {cg::Stage::trap});
  const json t = stage_report(r, "trap");
  const double G = constants::gauss;
  for (int k = 0; k < 2; ++k) {
    c.within("|B| at minimum " + std::to_string(k) + " (G)", t["minima"][k]["field_T"].get<double>() / G, 3.23, 0.01);
  }
  c.within("separation (um)", t["separation_m"].get<double>() * 1e6, 0.74, 0.05);
  c.within("z0 (um)", t["height_z0_m"].get<double>() * 1e6, 1.19, 0.05);
  c.within("beta (rad)", t["beta_rad"].get<double>(), 0.063, 0.10);
  const auto f = t["freqs_Hz"].get<std::vector<double>>();
  c.within("frequency 1 (kHz)", f[0] * 1e-3, 11.96, 0.05);
  c.within("frequency 2 (kHz)", f[1] * 1e-3, 211.41, 0.05);
  c.within("frequency 3 (kHz)", f[2] * 1e-3, 213.24, 0.05);
  c.within("barrier field (G)", t["barrier_field_T"].get<double>() / G, 3.26, 0.01);
  return c;
}

bool gate_better(const cg::SweepRow& a, const cg::SweepRow& b) {
  if (!b.ok) return a.ok;
  if (!a.ok) return false;
  const auto& ma = a.metrics;
  const auto& mb = b.metrics;
  if (ma.at("phase_condition_met") != mb.at("phase_condition_met")) return ma.at("phase_condition_met") > mb.at("phase_condition_met");
  if (ma.at("phase_condition_met") > 0.0) {
    return std::min(ma.at("F_ge"), ma.at("F_ee")) > std::min(mb.at("F_ge"), mb.at("F_ee"));
  }
  return std::abs(ma.at("phi_over_pi") - 1.0) < std::abs(mb.at("phi_over_pi") - 1.0);
}

// a_s is swept over [4, 7] nm on a coarse calibration grid; the best value is
// then run once at the configured resolution and judged.
Criterion gate_dynamics(const cg::RunConfig& config, const fs::path& work, std::size_t calibration_n) {
  Criterion c;
  cg::RunConfig coarse = with_dir(config, work / "calibration");
  coarse.dynamics.grid_n = calibration_n;
  cg::SweepSpec spec;
  spec.parameter = "dynamics.scattering_length";
  spec.stage = cg::Stage::gate;
  for (int k = 0; k <= 6; ++k) spec.values.push_back(4e-9 + 0.5e-9 * k);
  const auto rows = cg::sweep(coarse, spec);
  cg::write_sweep(coarse, spec, rows);
  const auto best = std::min_element(rows.begin(), rows.end(), gate_better);
  for (const auto& r : rows) {
    std::printf("    calibration a_s = %.2f nm: %s", r.value.get<double>() * 1e9, r.ok ? "" : r.error.c_str());
    if (r.ok) {
      std::printf("tau %.4f ms, phi/pi %.4f, F_ge %.5f, F_ee %.5f, max P %.4f %.4f", r.metrics.at("tau_s") * 1e3,
                  r.metrics.at("phi_over_pi"), r.metrics.at("F_ge"), r.metrics.at("F_ee"), r.metrics.at("max_P_phi_ge"),
                  r.metrics.at("max_P_phi_ee"));
    }
    std::printf("\n");
  }
  std::fflush(stdout);
  if (best == rows.end() || !best->ok) {
    c.fail("every calibration run failed");
    return c;
  }

  const auto full = cg::with_parameter(with_dir(config, work / "gate"), spec.parameter, best->value);
  const auto r = cg::run_pipeline(full, {cg::Stage::gate});
  const json g = stage_report(r, "gate");
  const double tau = g["tau_s"].get<double>();
  c.range("calibrated a_s (nm)", full.dynamics.scattering_length * 1e9, 4.0, 7.0);
  c.range("tau (ms)", tau * 1e3, 10.0, 22.0);
  c.above("F_ge(tau)", g["F_ge"].get<double>(), 0.99);
  c.above("F_ee(tau)", g["F_ee"].get<double>(), 0.99);
  c.above("min F_gg over the run", g["min_F_gg"].get<double>(), 0.999);
  c.range("phi(tau) / pi", g["phi_over_pi"].get<double>(), 0.9, 1.1);
  c.below("max P_phi_ge", g["max_P_phi_ge"].get<double>(), 0.05);
  c.below("max P_phi_ee", g["max_P_phi_ee"].get<double>(), 0.05);
  return c;
}

Criterion raman_run(const cg::RunConfig& config, const fs::path& work, json& report) {
  Criterion c;
  const auto r = cg::run_pipeline(with_dir(config, work / "raman"), {cg::Stage::raman});
  report = stage_report(r, "raman");
  return c;
}

Criterion sideband_anharmonicity(const json& raman) {
  Criterion c;
  double lo = 1e300, hi = -1e300;
  for (const auto& row : raman["sideband_table"]) {
    const double eta = row["eta"].get<double>();
    if (eta > 0.05) continue;
    const double ratio = row["localized_ratio_P20_P10"].get<double>();
    std::ostringstream name;
    name << "P20/P10 at eta " << eta << " (%)";
    c.range(name.str(), 100.0 * ratio, 3.8 - 0.5, 3.8 + 0.5);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  if (lo <= hi) c.below("relative spread over eta", (hi - lo) / lo, 0.10);
  return c;
}

Criterion raman_numbers(const json& raman) {
  Criterion c;
  c.within("eta microwave", raman["eta_microwave"].get<double>(), 1.09e-5, 0.01);
  c.range("eta optical", raman["eta_optical"].get<double>(), 1.0, 1.3);
  c.within("carrier Rabi frequency (kHz)", raman["rabi_chain"]["carrier_Hz"].get<double>() * 1e-3, 100.0, 1e-9);
  c.within("sideband Rabi frequency (Hz)", raman["rabi_chain"]["sideband_Hz"].get<double>(), 1.0, 0.10);
  c.within("delta k duplication (1/cm)", raman["sideband_conditions_1_cm"]["duplication"].get<double>(), 2.09e-6, 0.01);
  c.within("delta k swap (1/cm)", raman["sideband_conditions_1_cm"]["swap_desired"].get<double>(), 1.43, 0.01);
  return c;
}

std::shared_ptr<Grid1D> grid_of(std::size_t n, double halfwidth, const std::function<double(double)>& v) {
  auto g = std::make_shared<Grid1D>();
  g->mass = field::AtomSpecies{}.mass;
  g->spacing = 2.0 * halfwidth / static_cast<double>(n);
  g->origin = -halfwidth;
  g->values.resize(n);
  for (std::size_t i = 0; i < n; ++i) g->values[i] = v(g->x(i));
  return g;
}

double max_abs_deviation(const std::vector<double>& v, double target) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x - target));
  return m;
}

collider::GateOptions short_gate(std::size_t steps) {
  collider::GateOptions o;
  o.n_steps = steps;
  o.record_every = 20;
  o.window_start = 0.0;
  o.window_end = static_cast<double>(steps) * o.dt;
  return o;
}

// Generic invariants on synthetic problems; no chip numbers enter.
Criterion property_suite() {
  Criterion c;
  const double mass = field::AtomSpecies{}.mass;
  const double g1d = 1e-37;  // J m

  // Harmonic oscillator, 1 kHz.
  const double w = 2.0 * pi * 1e3;
  const auto ho = grid_of(64, 1.5e-6, [&](double x) { return 0.5 * mass * w * w * x * x; });
  const auto eig = spectrum::solve_eigenstates(*ho, 4);
  const auto psi = collider::product_state(eig.states[0], eig.states[1], ho, true);

  collider::PropagationOptions delta;
  delta.observables.push_back({"asymmetry", [](const collider::Psi2D& p) { return collider::exchange_asymmetry(p); }});
  const auto td = collider::propagate(psi, *ho, g1d, 1e-7, 20000, 500, delta);
  c.below("norm drift", max_abs_deviation(td.norms, 1.0), 1e-8);
  const auto& asym = td.observables.at("asymmetry");
  c.below("exchange asymmetry", *std::max_element(asym.begin(), asym.end()), 1e-10);

  collider::PropagationOptions smooth;
  smooth.contact = collider::ContactModel::gaussian;
  const auto tg = collider::propagate(psi, *ho, g1d, 1e-7, 20000, 500, smooth);
  const auto [elo, ehi] = std::minmax_element(tg.energies.begin(), tg.energies.end());
  c.below("relative energy drift", (*ehi - *elo) / std::abs(tg.energies.front()), 1e-6);

  // Harmonic eigenvalues on a fine grid.
  const double nu = 11.96e3;
  const double wn = 2.0 * pi * nu;
  const auto fine = grid_of(1024, 1.5e-6, [&](double x) { return 0.5 * mass * wn * wn * x * x; });
  const auto he = spectrum::solve_eigenstates(*fine, 6);
  double eig_err = 0.0;
  for (std::size_t k = 0; k < 6; ++k) {
    const double exact = (k + 0.5) * constants::h * nu;
    eig_err = std::max(eig_err, std::abs(he.energies[k] - exact) / exact);
  }
  c.below("oscillator eigenvalue error", eig_err, 1e-6);

  // Two separated wells: no interaction, no phase.
  const double ws = 2.0 * pi * 5e3;
  const auto split = grid_of(128, 1.5e-6, [&](double x) {
    const double u = std::abs(x) - 0.5e-6;
    return 0.5 * mass * ws * ws * u * u;
  });
  const auto sb = spectrum::localized_basis(spectrum::solve_eigenstates(*split, 6));
  const auto free = collider::run_gate(split, sb, 0.0, short_gate(4000));
  double phi0 = 0.0;
  for (double p : free.phi) phi0 = std::max(phi0, std::abs(p));
  c.below("|phi| without interaction (rad)", phi0, 1e-6);

  // A tunneling double well with interaction: shifting V by a constant.
  const double wd = 2.0 * pi * 12e3;
  const double d = 0.37e-6;
  const double k4 = 0.125 * mass * wd * wd / (d * d);
  const auto dw = grid_of(128, 1.5e-6, [&](double x) { return k4 * (x * x - d * d) * (x * x - d * d); });
  auto shifted = std::make_shared<Grid1D>(*dw);
  for (auto& v : shifted->values) v += constants::h * 10e3;
  const auto db = spectrum::localized_basis(spectrum::solve_eigenstates(*dw, 8));
  const auto dbs = spectrum::localized_basis(spectrum::solve_eigenstates(*shifted, 8));
  const auto ra = collider::run_gate(dw, db, 1.5e-36, short_gate(3000));
  const auto rb = collider::run_gate(shifted, dbs, 1.5e-36, short_gate(3000));
  double offset = 0.0;
  for (std::size_t k = 0; k < ra.phi.size(); ++k) offset = std::max(offset, std::abs(ra.phi[k] - rb.phi[k]));
  c.above("|phi| with interaction (rad)", std::abs(ra.phi.back()), 1e-4);
  c.below("phi change under offset (rad)", offset, 1e-9);

  // Divergence of the field at random points, relative to the local scale.
  const field::ChipConfig chip;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2e-6, 2e-6);
  double div_rel = 0.0, trace_rel = 0.0;
  const double h = 1e-9;
  for (int k = 0; k < 100; ++k) {
    const field::Vec3 p(u(rng), u(rng), 0.3e-6 + 0.5 * std::abs(u(rng)));
    double div = 0.0;
    for (int i = 0; i < 3; ++i) {
      field::Vec3 e = field::Vec3::Zero();
      e[i] = h;
      div += (field::chip_field(chip, p + e).B[i] - field::chip_field(chip, p - e).B[i]) / (2.0 * h);
    }
    const double r = std::min({std::hypot(p.y(), p.z()), std::hypot(p.x() - 0.75e-6, p.z()),
                               std::hypot(p.x() + 0.75e-6, p.z())});
    const double scale = (field::chip_field(chip, p).B - chip.bias).norm() / r;
    div_rel = std::max(div_rel, std::abs(div) / scale);
    trace_rel = std::max(trace_rel, std::abs(field::chip_jacobian(chip, p).trace()) / scale);
  }
  c.below("finite-difference divergence", div_rel, 1e-4);
  c.below("analytic Jacobian trace", trace_rel, 1e-9);

  for (auto kind : {logic::SchemeKind::duplication, logic::SchemeKind::swap}) {
    const std::string name = kind == logic::SchemeKind::duplication ? "duplication" : "swap";
    try {
      const auto rep = logic::verify_scheme({kind, pi}, 1000, 20021);
      c.below(name + " max deviation", rep.max_deviation, 1e-12);
    } catch (const Error& e) {
      c.add(name + " max deviation", NAN, false, e.what());
    }
  }
  return c;
}

Criterion determinism(const cg::RunConfig& config, const fs::path& work, std::size_t steps) {
  Criterion c;
  cg::RunConfig base = config;
  base.dynamics.n_steps = steps;
  base.outputs.plots = true;
  const std::set<cg::Stage> all{cg::Stage::trap, cg::Stage::spectrum, cg::Stage::gate, cg::Stage::raman,
                                cg::Stage::scheme};
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  base.outputs.directory = (work / "serial").string();
  const auto a = cg::run_pipeline(base, all, {kernels::Execution::serial, false});
  omp_set_num_threads(4);
  base.outputs.directory = (work / "concurrent").string();
  const auto b = cg::run_pipeline(base, all, {kernels::Execution::parallel, true});
  base.outputs.directory = (work / "concurrent_again").string();
  const auto d = cg::run_pipeline(base, all, {kernels::Execution::parallel, true});
  omp_set_num_threads(saved);

  c.add("serial run complete", a.manifest.ok(), a.manifest.ok(), "1");
  c.add("concurrent run complete", b.manifest.ok(), b.manifest.ok(), "1");
  c.add("artifacts hashed", static_cast<double>(a.manifest.files.size()), a.manifest.files.size() >= 7, ">= 7");
  auto mismatches = [](const cg::Manifest& x, const cg::Manifest& y) {
    if (x.files.size() != y.files.size()) return 1e9;
    double n = 0;
    for (std::size_t k = 0; k < x.files.size(); ++k) n += x.files[k] != y.files[k];
    return n;
  };
  const double sc = mismatches(a.manifest, b.manifest);
  const double cc = mismatches(b.manifest, d.manifest);
  c.add("serial vs concurrent hash mismatches", sc, sc == 0.0, "0");
  c.add("repeat run hash mismatches", cc, cc == 0.0, "0");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-6"};
  std::string config_path = CHIPGATE_SOURCE_DIR "/configs/paper.json";
  std::string work = (fs::temp_directory_path() / "chipgate_acceptance").string();
  std::vector<int> only;
  std::size_t calibration_n = 128;
  std::size_t determinism_steps = 4000;
  app.add_option("--config", config_path, "run configuration")->check(CLI::ExistingFile);
  app.add_option("--work", work, "scratch directory for artifacts");
  app.add_option("--criteria", only, "run only these criteria")->delimiter(',');
  app.add_option("--calibration-grid", calibration_n, "grid points per axis for the a_s sweep");
  app.add_option("--determinism-steps", determinism_steps, "gate steps in the determinism runs");
  CLI11_PARSE(app, argc, argv);

  std::set<int> selected(only.begin(), only.end());
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6};
  const auto config = cg::load_config(config_path);
  const fs::path root(work);
  fs::remove_all(root);

  bool all_pass = true;
  auto run = [&](int id, const std::string& title, const std::function<Criterion()>& body) {
    if (!selected.count(id)) return;
    Criterion c;
    try {
      c = body();
    } catch (const std::exception& e) {
      c.fail(e.what());
    }
    c.print(id, title);
    all_pass = all_pass && c.pass();
  };

  json raman;
  auto raman_report = [&]() -> const json& {
    if (raman.is_null()) raman_run(config, root, raman);
    return raman;
  };

  run(1, "trap reproduction", [&] { return trap_reproduction(config, root); });
  run(2, "gate dynamics", [&] { return gate_dynamics(config, root, calibration_n); });
  run(3, "sideband anharmonicity", [&] { return sideband_anharmonicity(raman_report()); });
  run(4, "Raman numbers", [&] { return raman_numbers(raman_report()); });
  run(5, "property suite", property_suite);
  run(6, "determinism", [&] { return determinism(config, root / "determinism", determinism_steps); });
  return all_pass ? 0 : 1;
}
