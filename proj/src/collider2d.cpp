#include "chipgate/collider2d.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <sstream>

#include "chipgate/error.hpp"
#include "chipgate/units.hpp"

namespace chipgate::collider {

using constants::hbar;
using constants::pi;

namespace {

void require_square(const Psi2D& psi) {
  if (!psi.grid) throw GridMismatchError("wavefunction has no grid");
  const std::size_t n = psi.size();
  if (psi.amplitudes.size() != n * n) {
    throw GridMismatchError("wavefunction has " + std::to_string(psi.amplitudes.size()) +
                            " amplitudes, expected " + std::to_string(n * n));
  }
}

void require_same_grid(const Psi2D& a, const Psi2D& b) {
  require_square(a);
  require_square(b);
  if (!a.grid->same_sampling(*b.grid)) throw GridMismatchError("wavefunctions on different grids");
}

// Lattice wavenumbers in FFTW order.
std::vector<double> wavenumbers(std::size_t n, double dx) {
  std::vector<double> k(n);
  const double dk = 2.0 * pi / (static_cast<double>(n) * dx);
  for (std::size_t m = 0; m < n; ++m) {
    const auto mm = static_cast<double>(m);
    k[m] = (m < n / 2 ? mm : mm - static_cast<double>(n)) * dk;
  }
  return k;
}

}  // namespace

double transverse_length(const InteractionParams& params) {
  if (!(params.omega_perp > 0.0) || !(params.mass > 0.0)) {
    throw DomainError("transverse length needs omega_perp > 0 and mass > 0");
  }
  return std::sqrt(hbar / (params.mass * params.omega_perp));
}

double g1d_coupling(const InteractionParams& params) {
  const double a = params.scattering_length;
  if (!std::isfinite(a) || a < 0.0) throw DomainError("scattering length must be >= 0");
  if (!std::isfinite(params.omega_perp) || params.omega_perp < 0.0) {
    throw DomainError("omega_perp must be >= 0");
  }
  const double base = 2.0 * hbar * params.omega_perp * a;
  if (!params.use_transverse_correction || a == 0.0) return base;
  const double denominator = 1.0 - params.correction_constant * a / transverse_length(params);
  if (denominator <= 0.1) {
    std::ostringstream msg;
    msg << "confinement-induced resonance too close: 1 - C a_s / l_perp = " << denominator;
    throw DomainError(msg.str());
  }
  return base / denominator;
}

double Psi2D::norm() const {
  double s = 0.0;
  for (const auto& a : amplitudes) s += std::norm(a);
  const double dx = grid ? grid->spacing : 0.0;
  return s * dx * dx;
}

Psi2D product_state(const GridFunction& first, const GridFunction& second,
                    std::shared_ptr<const Grid1D> grid, bool symmetrize) {
  if (!grid) throw GridMismatchError("product state needs a grid");
  const std::size_t n = grid->size();
  if (first.size() != n || second.size() != n) {
    throw GridMismatchError("grid functions of size " + std::to_string(first.size()) + " and " +
                            std::to_string(second.size()) + " on a grid of " + std::to_string(n));
  }
  Psi2D psi{kernels::ComplexArray(n * n), grid};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double v = first[i] * second[j];
      if (symmetrize) v += second[i] * first[j];
      psi.amplitudes[i * n + j] = v;
    }
  }
  const double scale = 1.0 / std::sqrt(psi.norm());
  for (auto& a : psi.amplitudes) a *= scale;
  return psi;
}

Psi2D exchanged(const Psi2D& psi) {
  require_square(psi);
  Psi2D out{kernels::ComplexArray(psi.amplitudes.size()), psi.grid};
  kernels::serial::transpose(psi.amplitudes, out.amplitudes, psi.size());
  return out;
}

cplx overlap(const Psi2D& a, const Psi2D& b) {
  require_same_grid(a, b);
  const double dx = a.grid->spacing;
  return kernels::serial::inner(a.amplitudes, b.amplitudes, a.size()) * (dx * dx);
}

double exchange_asymmetry(const Psi2D& psi) {
  require_square(psi);
  const std::size_t n = psi.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      s += std::norm(psi.amplitudes[i * n + j] - psi.amplitudes[j * n + i]);
    }
  }
  return std::sqrt(s) * psi.grid->spacing;
}

cplx project(const Psi2D& psi, const GridFunction& first, const GridFunction& second) {
  require_square(psi);
  const std::size_t n = psi.size();
  if (first.size() != n || second.size() != n) {
    throw GridMismatchError("projector does not match the wavefunction grid");
  }
  cplx total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cplx row = 0.0;
    const cplx* p = psi.amplitudes.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) row += second[j] * p[j];
    total += first[i] * row;
  }
  const double dx = psi.grid->spacing;
  return total * (dx * dx);
}

SplitOperator::SplitOperator(const Grid1D& potential, double g1d, double dt, ContactModel contact,
                             Execution execution)
    : n_(potential.size()), dx_(potential.spacing), dispatch_{execution}, fft_(potential.size()) {
  potential.validate(8);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("time step must be positive");
  if (!std::isfinite(g1d) || g1d < 0.0) throw DomainError("g1d must be finite and >= 0");
  const std::size_t n = n_;
  const double mass = potential.mass;
  const auto k = wavenumbers(n, dx_);
  const double inv_n = 1.0 / static_cast<double>(n);

  half_kinetic_.resize(n);
  full_kinetic_.resize(n);
  kinetic_apply_.resize(n);
  kinetic_weight_.resize(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double t = hbar * hbar * k[m] * k[m] / (2.0 * mass);
    half_kinetic_[m] = std::polar(inv_n, -t * 0.5 * dt / hbar);
    full_kinetic_[m] = std::polar(inv_n, -t * dt / hbar);
    kinetic_apply_[m] = t * inv_n;
    kinetic_weight_[m] = t * inv_n * dx_ * dx_;
  }

  interaction_.assign(n * n, 0.0);
  if (g1d > 0.0) {
    if (contact == ContactModel::grid_delta) {
      for (std::size_t i = 0; i < n; ++i) interaction_[i * n + i] = g1d / dx_;
    } else {
      const double width = dx_;
      const double norm = g1d / (std::sqrt(2.0 * pi) * width);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double d = (static_cast<double>(i) - static_cast<double>(j)) * dx_;
          interaction_[i * n + j] = norm * std::exp(-0.5 * d * d / (width * width));
        }
      }
    }
  }

  potential_phase_.resize(n * n);
  potential_weight_.resize(n * n);
  const auto& v = potential.values;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double total = v[i] + v[j] + interaction_[i * n + j];
      potential_phase_[i * n + j] = std::polar(1.0, -total * dt / hbar);
      potential_weight_[i * n + j] = total * dx_ * dx_;
    }
  }
  scratch_.resize(n * n);
}

void SplitOperator::kinetic(kernels::ComplexArray& data, const std::vector<cplx>& factor) {
  dispatch_.row_filter(data, n_, fft_, factor);
  dispatch_.transpose(data, scratch_, n_);
  dispatch_.row_filter(scratch_, n_, fft_, factor);
  data.swap(scratch_);
}

void SplitOperator::advance(Psi2D& psi, std::size_t steps) {
  if (steps == 0) return;
  require_square(psi);
  if (psi.size() != n_) throw GridMismatchError("wavefunction does not match the propagator");
  auto& data = psi.amplitudes;
  kinetic(data, half_kinetic_);
  for (std::size_t s = 0; s < steps; ++s) {
    // The potential phase is symmetric, so it can ride on the first row pass
    // whichever layout the array is in.
    const auto& factor = s + 1 == steps ? half_kinetic_ : full_kinetic_;
    dispatch_.row_filter_after(data, potential_phase_, n_, fft_, factor);
    dispatch_.transpose(data, scratch_, n_);
    dispatch_.row_filter(scratch_, n_, fft_, factor);
    data.swap(scratch_);
  }
  // Each kinetic pass leaves the array transposed; restore (x1, x2) order.
  if ((steps + 1) % 2 == 1) {
    dispatch_.transpose(data, scratch_, n_);
    data.swap(scratch_);
  }
}

double SplitOperator::energy(const Psi2D& psi) const {
  const auto& data = psi.amplitudes;
  const double along_x2 = dispatch_.row_spectral_sum(data, n_, fft_, kinetic_weight_);
  dispatch_.transpose(data, scratch_, n_);
  const double along_x1 = dispatch_.row_spectral_sum(scratch_, n_, fft_, kinetic_weight_);
  const double pot = dispatch_.weighted_norm(data, n_, potential_weight_);
  return along_x1 + along_x2 + pot;
}

double SplitOperator::energy_spread(const Psi2D& psi) const {
  const std::size_t n = n_;
  kernels::ComplexArray t2 = psi.amplitudes;
  dispatch_.row_filter(t2, n, fft_, kinetic_apply_);
  kernels::ComplexArray t1(n * n);
  dispatch_.transpose(psi.amplitudes, t1, n);
  dispatch_.row_filter(t1, n, fft_, kinetic_apply_);
  dispatch_.transpose(t1, scratch_, n);
  const double inv_cell = 1.0 / (dx_ * dx_);
  double h2 = 0.0;
  for (std::size_t k = 0; k < n * n; ++k) {
    const cplx hpsi = t2[k] + scratch_[k] + potential_weight_[k] * inv_cell * psi.amplitudes[k];
    h2 += std::norm(hpsi);
  }
  h2 *= dx_ * dx_;
  const double e = energy(psi);
  return std::sqrt(std::max(0.0, h2 - e * e));
}

Trajectory propagate(const Psi2D& psi, const Grid1D& potential, double g1d, double dt,
                     std::size_t n_steps, std::size_t record_every,
                     const PropagationOptions& options) {
  require_square(psi);
  if (!psi.grid->same_sampling(potential)) {
    throw GridMismatchError("wavefunction and potential are sampled on different grids");
  }
  if (n_steps == 0 || record_every == 0) {
    throw DomainError("n_steps and record_every must be positive");
  }
  const double norm0 = psi.norm();
  if (std::abs(norm0 - 1.0) > 1e-10) {
    std::ostringstream msg;
    msg << "initial wavefunction norm " << norm0 << " is not 1";
    throw DomainError(msg.str());
  }

  SplitOperator stepper(potential, g1d, dt, options.contact, options.execution);
  const std::size_t n = psi.size();
  const double cell = potential.spacing * potential.spacing;
  const kernels::Dispatch dispatch{options.execution};

  Trajectory traj;
  traj.initial_energy = stepper.energy(psi);
  traj.energy_spread = stepper.energy_spread(psi);
  const double e_max = std::abs(traj.initial_energy) + 4.0 * traj.energy_spread;
  const double accuracy = dt * e_max / hbar;
  if (accuracy > options.accuracy_limit) {
    std::ostringstream msg;
    msg << "dt E_max / hbar = " << accuracy << " exceeds " << options.accuracy_limit;
    traj.warnings.push_back(msg.str());
  }

  const std::size_t records = (n_steps + record_every - 1) / record_every + 1;
  traj.times.reserve(records);
  traj.overlaps.reserve(records);
  traj.norms.reserve(records);
  traj.energies.reserve(records);

  Psi2D current = psi;
  std::size_t done = 0;
  auto record = [&] {
    const double norm = dispatch.inner(current.amplitudes, current.amplitudes, n).real() * cell;
    const double allowed = options.max_norm_drift * std::max(1.0, static_cast<double>(done) / 1000.0);
    if (std::abs(norm - norm0) > allowed) {
      std::ostringstream msg;
      msg << "norm drifted by " << norm - norm0 << " after " << done << " steps";
      throw InstabilityError(msg.str());
    }
    traj.times.push_back(static_cast<double>(done) * dt);
    traj.overlaps.push_back(dispatch.inner(psi.amplitudes, current.amplitudes, n) * cell);
    traj.norms.push_back(norm);
    traj.energies.push_back(stepper.energy(current));
    for (const auto& obs : options.observables) traj.observables[obs.name].push_back(obs.measure(current));
  };

  record();
  while (done < n_steps) {
    const std::size_t block = std::min(record_every, n_steps - done);
    stepper.advance(current, block);
    done += block;
    record();
  }
  return traj;
}

std::vector<double> revival_fidelity(const Trajectory& traj) {
  std::vector<double> f(traj.overlaps.size());
  std::transform(traj.overlaps.begin(), traj.overlaps.end(), f.begin(),
                 [](cplx z) { return std::norm(z); });
  return f;
}

std::vector<double> unwrapped_phase(const Trajectory& traj) {
  const std::size_t count = traj.overlaps.size();
  std::vector<double> phase(count);
  double residual_prev = 0.0;
  double unwrapped = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const cplx z = traj.overlaps[k];
    if (std::abs(z) < 1e-6) {
      std::ostringstream msg;
      msg << "overlap magnitude " << std::abs(z) << " at t = " << traj.times[k]
          << " s leaves the phase undefined";
      throw PhaseGapError(msg.str());
    }
    const double carrier = traj.initial_energy * traj.times[k] / hbar;
    const double residual = std::arg(z * std::polar(1.0, carrier));
    if (k == 0) {
      unwrapped = residual;
    } else {
      const double step = std::remainder(residual - residual_prev, 2.0 * pi);
      if (std::abs(step) > 0.5 * pi) {
        std::ostringstream msg;
        msg << "phase step " << step << " rad between t = " << traj.times[k - 1] << " and "
            << traj.times[k] << " s; record more densely";
        throw PhaseGapError(msg.str());
      }
      unwrapped += step;
    }
    residual_prev = residual;
    phase[k] = unwrapped - carrier;
  }
  return phase;
}

std::vector<double> gate_phase(const Trajectory& gg, const Trajectory& ge, const Trajectory& ee) {
  if (gg.times != ge.times || gg.times != ee.times) {
    throw GridMismatchError("gate phase needs trajectories on one time axis");
  }
  const auto p_gg = unwrapped_phase(gg);
  const auto p_ge = unwrapped_phase(ge);
  const auto p_ee = unwrapped_phase(ee);
  std::vector<double> phi(p_gg.size());
  // Carriers are large and cancel; combine residual and carrier parts separately.
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const double t = gg.times[k];
    const double carriers =
        (ee.initial_energy + gg.initial_energy - 2.0 * ge.initial_energy) * t / hbar;
    const double rgg = p_gg[k] + gg.initial_energy * t / hbar;
    const double rge = p_ge[k] + ge.initial_energy * t / hbar;
    const double ree = p_ee[k] + ee.initial_energy * t / hbar;
    phi[k] = ree + rgg - 2.0 * rge - carriers;
  }
  return phi;
}

std::string observable_name(PairKind kind) {
  return kind == PairKind::ge ? "P_phi_ge" : "P_phi_ee";
}

double same_well_population(const Psi2D& psi, const spectrum::LocalizedBasis& basis, PairKind kind) {
  const std::array<std::pair<const GridFunction*, const GridFunction*>, 2> wells{
      std::pair{&basis.gL, &basis.eL}, std::pair{&basis.gR, &basis.eR}};
  double p = 0.0;
  for (const auto& [g, e] : wells) {
    if (kind == PairKind::ge) {
      p += std::norm(project(psi, *g, *e)) + std::norm(project(psi, *e, *g));
    } else {
      p += std::norm(project(psi, *e, *e));
    }
  }
  return p;
}

Observable same_well_observable(const spectrum::LocalizedBasis& basis, PairKind kind) {
  return {observable_name(kind),
          [basis, kind](const Psi2D& psi) { return same_well_population(psi, basis, kind); }};
}

LeakageSeries undesired_populations(const Trajectory& ge, const Trajectory& ee) {
  if (ge.times != ee.times) throw GridMismatchError("leakage series on different time axes");
  auto fetch = [](const Trajectory& t, PairKind kind) {
    const auto it = t.observables.find(observable_name(kind));
    if (it == t.observables.end()) {
      throw GridMismatchError("trajectory did not record " + observable_name(kind));
    }
    return it->second;
  };
  return {fetch(ge, PairKind::ge), fetch(ee, PairKind::ee)};
}

GateSummary select_gate_time(const GateRun& run, const GateOptions& options) {
  GateSummary s;
  std::vector<std::size_t> window;
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    if (run.times[k] >= options.window_start - 1e-12 && run.times[k] <= options.window_end + 1e-12) {
      window.push_back(k);
    }
  }
  if (window.empty()) {
    // Run too short for the window: fall back to every sample after t = 0.
    for (std::size_t k = 1; k < run.times.size(); ++k) window.push_back(k);
    if (window.empty()) throw DomainError("gate run recorded no samples after t = 0");
    s.window_clipped = true;
  }
  auto best_of = [&](bool phase_constrained) -> std::ptrdiff_t {
    std::ptrdiff_t best = -1;
    double best_value = -1.0;
    for (const auto k : window) {
      if (phase_constrained && std::abs(run.phi[k] - pi) > options.phase_tolerance * pi) continue;
      const double v = std::min(run.F_ge[k], run.F_ee[k]);
      if (v > best_value) {
        best_value = v;
        best = static_cast<std::ptrdiff_t>(k);
      }
    }
    return best;
  };
  std::ptrdiff_t best = best_of(true);
  s.phase_condition_met = best >= 0;
  if (best < 0) best = best_of(false);
  const auto k = static_cast<std::size_t>(best);
  s.sample = k;
  s.tau = run.times[k];
  s.F_gg = run.F_gg[k];
  s.F_ge = run.F_ge[k];
  s.F_ee = run.F_ee[k];
  s.phi = run.phi[k];
  s.min_F_gg = *std::min_element(run.F_gg.begin(), run.F_gg.end());
  s.max_P_ge = run.P_ge.empty() ? 0.0 : *std::max_element(run.P_ge.begin(), run.P_ge.end());
  s.max_P_ee = run.P_ee.empty() ? 0.0 : *std::max_element(run.P_ee.begin(), run.P_ee.end());
  return s;
}

GateRun run_gate(std::shared_ptr<const Grid1D> potential, const spectrum::LocalizedBasis& basis,
                 double g1d, const GateOptions& options) {
  if (!potential) throw GridMismatchError("gate run needs a potential grid");
  const bool sym = options.statistics == Statistics::symmetrized;
  const std::array<Psi2D, 3> initial{product_state(basis.gL, basis.gR, potential, sym),
                                     product_state(basis.gL, basis.eR, potential, sym),
                                     product_state(basis.eL, basis.eR, potential, sym)};
  std::array<PropagationOptions, 3> prop;
  for (auto& p : prop) {
    p.execution = options.execution;
    p.contact = options.contact;
  }
  prop[1].observables.push_back(same_well_observable(basis, PairKind::ge));
  prop[2].observables.push_back(same_well_observable(basis, PairKind::ee));

  std::array<Trajectory, 3> traj;
  std::array<std::exception_ptr, 3> failure{};
#pragma omp parallel for schedule(static, 1) if (options.concurrent_trajectories)
  for (int r = 0; r < 3; ++r) {
    try {
      traj[r] = propagate(initial[r], *potential, g1d, options.dt, options.n_steps,
                          options.record_every, prop[r]);
    } catch (...) {
      failure[r] = std::current_exception();
    }
  }
  for (const auto& f : failure) {
    if (f) std::rethrow_exception(f);
  }

  GateRun run;
  run.gg = std::move(traj[0]);
  run.ge = std::move(traj[1]);
  run.ee = std::move(traj[2]);
  run.times = run.gg.times;
  run.F_gg = revival_fidelity(run.gg);
  run.F_ge = revival_fidelity(run.ge);
  run.F_ee = revival_fidelity(run.ee);
  run.phi = gate_phase(run.gg, run.ge, run.ee);
  auto leak = undesired_populations(run.ge, run.ee);
  run.P_ge = std::move(leak.ge);
  run.P_ee = std::move(leak.ee);
  run.summary = select_gate_time(run, options);
  return run;
}

}  // namespace chipgate::collider
