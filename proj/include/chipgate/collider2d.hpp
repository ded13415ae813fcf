#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "chipgate/grid.hpp"
#include "chipgate/kernels.hpp"
#include "chipgate/spectrum1d.hpp"

namespace chipgate::collider {

using cplx = std::complex<double>;
using kernels::Execution;

enum class ContactModel {
  grid_delta,  // g delta_ij / dx on the diagonal
  gaussian,    // normalized Gaussian of width dx in x1 - x2
};

/// Which two-particle wavefunction a product of well states becomes.
enum class Statistics { distinguishable, symmetrized };

struct InteractionParams {
  double scattering_length = 5.3e-9;  // m
  double omega_perp = 0.0;            // rad/s
  bool use_transverse_correction = false;
  double mass = 1.44e-25;             // kg
  double correction_constant = 1.4603;
};

double transverse_length(const InteractionParams& params);

/// 2 hbar omega_perp a_s, optionally divided by 1 - C a_s / l_perp. Throws
/// DomainError for a_s < 0 and when the corrected denominator is <= 0.1.
double g1d_coupling(const InteractionParams& params);

/// Two-particle amplitude psi(x1_i, x2_j) stored row-major at i * n + j.
struct Psi2D {
  kernels::ComplexArray amplitudes;
  std::shared_ptr<const Grid1D> grid;

  std::size_t size() const { return grid ? grid->size() : 0; }
  double norm() const;  // sum |psi|^2 dx^2
};

/// first(x1) second(x2), or its normalized exchange-symmetric combination.
/// Throws GridMismatchError when the inputs do not match the grid.
Psi2D product_state(const GridFunction& first, const GridFunction& second,
                    std::shared_ptr<const Grid1D> grid, bool symmetrize = false);
Psi2D exchanged(const Psi2D& psi);
cplx overlap(const Psi2D& a, const Psi2D& b);
/// L2 norm of psi - exchanged(psi).
double exchange_asymmetry(const Psi2D& psi);
/// <first second | psi> for real grid functions.
cplx project(const Psi2D& psi, const GridFunction& first, const GridFunction& second);

struct Observable {
  std::string name;
  std::function<double(const Psi2D&)> measure;
};

struct PropagationOptions {
  Execution execution = Execution::parallel;
  ContactModel contact = ContactModel::grid_delta;
  std::vector<Observable> observables;
  double max_norm_drift = 1e-8;  // per 1000 steps
  double accuracy_limit = 0.5;   // dt E_max / hbar
};

struct Trajectory {
  std::vector<double> times;      // s
  std::vector<cplx> overlaps;     // <psi(0)|psi(t)>
  std::vector<double> norms;
  std::vector<double> energies;   // J
  std::map<std::string, std::vector<double>> observables;
  double initial_energy = 0.0;    // J
  double energy_spread = 0.0;     // J
  std::vector<std::string> warnings;
};

/// Strang split-operator stepper for H = T1 + T2 + V(x1) + V(x2) + V_int.
/// Kinetic factors are applied as row FFT passes with a transpose between
/// them, so the array alternates between (x1, x2) and (x2, x1) layout; the
/// potential phase is symmetric and does not care.
class SplitOperator {
 public:
  SplitOperator(const Grid1D& potential, double g1d, double dt,
                ContactModel contact = ContactModel::grid_delta,
                Execution execution = Execution::parallel);

  /// `steps` full Strang steps with the inner half kinetic steps merged.
  void advance(Psi2D& psi, std::size_t steps);
  double energy(const Psi2D& psi) const;
  double energy_spread(const Psi2D& psi) const;
  std::size_t size() const { return n_; }

 private:
  void kinetic(kernels::ComplexArray& data, const std::vector<cplx>& factor);

  std::size_t n_;
  double dx_;
  kernels::Dispatch dispatch_;
  kernels::RowFft fft_;
  std::vector<cplx> half_kinetic_, full_kinetic_, kinetic_apply_;
  kernels::ComplexArray potential_phase_;
  std::vector<double> kinetic_weight_, potential_weight_, interaction_;
  mutable kernels::ComplexArray scratch_;
};

/// Records overlap, norm, energy and observables at t = 0 and every
/// `record_every` steps (plus the final step). Throws InstabilityError on
/// norm drift above max_norm_drift per 1000 steps, GridMismatchError when
/// psi and the potential are sampled differently.
Trajectory propagate(const Psi2D& psi, const Grid1D& potential, double g1d, double dt,
                     std::size_t n_steps, std::size_t record_every,
                     const PropagationOptions& options = {});

std::vector<double> revival_fidelity(const Trajectory& traj);

/// Continuous arg <psi(0)|psi(t)>. The carrier exp(-i E0 t / hbar) is removed
/// before nearest-branch unwrapping and restored afterwards. Throws
/// PhaseGapError on |overlap| < 1e-6 or a residual step above pi/2.
std::vector<double> unwrapped_phase(const Trajectory& traj);

/// phi = phi_ee + phi_gg - 2 phi_ge. Throws GridMismatchError when the time
/// axes differ.
std::vector<double> gate_phase(const Trajectory& gg, const Trajectory& ge, const Trajectory& ee);

enum class PairKind { ge, ee };

/// Population of both atoms in the same well: for ge the subspace spanned by
/// g_w e_w and e_w g_w, for ee by e_w e_w, summed over both wells.
double same_well_population(const Psi2D& psi, const spectrum::LocalizedBasis& basis, PairKind kind);
Observable same_well_observable(const spectrum::LocalizedBasis& basis, PairKind kind);
std::string observable_name(PairKind kind);

struct LeakageSeries {
  std::vector<double> ge, ee;
};

/// Reads the same-well series recorded by same_well_observable. Throws
/// GridMismatchError when a trajectory lacks it or the time axes differ.
LeakageSeries undesired_populations(const Trajectory& ge, const Trajectory& ee);

struct GateOptions {
  double dt = 0.1e-6;
  std::size_t n_steps = 220000;
  std::size_t record_every = 80;
  Statistics statistics = Statistics::symmetrized;
  ContactModel contact = ContactModel::grid_delta;
  Execution execution = Execution::parallel;
  bool concurrent_trajectories = true;
  double window_start = 10e-3;  // s
  double window_end = 22e-3;    // s
  double phase_tolerance = 0.1;  // fraction of pi
};

struct GateSummary {
  double tau = 0.0;  // s
  double F_gg = 0.0, F_ge = 0.0, F_ee = 0.0;
  double phi = 0.0;  // rad
  bool phase_condition_met = false;
  bool window_clipped = false;  // run ended before the window; all samples were searched
  double min_F_gg = 0.0;  // over the whole run
  double max_P_ge = 0.0, max_P_ee = 0.0;
  std::size_t sample = 0;
};

struct GateRun {
  Trajectory gg, ge, ee;
  std::vector<double> times, F_gg, F_ge, F_ee, phi, P_ge, P_ee;
  GateSummary summary;
};

/// tau = argmax of min(F_ge, F_ee) over the window among samples with
/// |phi - pi| <= tolerance * pi, or over all window samples when none
/// qualifies (phase_condition_met = false). A run that ends before the
/// window is searched whole (window_clipped). Throws DomainError when there is
/// no sample after t = 0.
GateSummary select_gate_time(const GateRun& run, const GateOptions& options);

/// Propagates gL gR, gL eR and eL eR and evaluates fidelities, phase and
/// leakage. Bitwise identical whether the three run concurrently or not.
GateRun run_gate(std::shared_ptr<const Grid1D> potential, const spectrum::LocalizedBasis& basis,
                 double g1d, const GateOptions& options = {});

}  // namespace chipgate::collider
