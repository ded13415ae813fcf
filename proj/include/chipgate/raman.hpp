#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "chipgate/grid.hpp"
#include "chipgate/spectrum1d.hpp"

namespace chipgate::raman {

/// Two-photon Raman drive of a trapped atom.
struct RamanSetup {
  double rabi_1 = 0.0;       // rad/s
  double rabi_2 = 0.0;       // rad/s
  double detuning = 0.0;     // rad/s, from the intermediate level
  double k_effective = 0.0;  // 1/m, |k1 - k2|
  double trap_omega = 0.0;   // rad/s
  double mass = 1.44e-25;    // kg

  /// Throws ValidityError unless |detuning| >= 10 max(rabi_1, rabi_2) and the
  /// frequencies and mass are positive.
  void validate() const;
};

/// k sqrt(hbar / (2 M omega)). Throws DomainError for omega <= 0.
double lamb_dicke(double k, double trap_omega, double mass);
double lamb_dicke(const RamanSetup& setup);

struct RabiChain {
  double carrier = 0.0;   // Omega_0 = Omega_1 Omega_2 / (2 Delta), rad/s
  double eta = 0.0;
  double sideband = 0.0;  // Omega_0 eta, rad/s
};

RabiChain rabi_chain(const RamanSetup& setup);

enum class Scheme { duplication, swap };
enum class Branch { desired, undesired };

/// Wavevector difference k1 - k2 (1/m) that makes the Raman pair resonant
/// with the sideband: 2 pi nu_t / c for duplication, 2 pi (nu_hf +/- nu_t) / c
/// for the swap branches. Throws DomainError for non-positive frequencies.
double sideband_condition(double trap_freq, double hyperfine_freq, Scheme scheme,
                          Branch branch = Branch::desired);

/// Vibrational ladder phi_0, phi_1, ... of one well plus the harmonic
/// frequency that converts eta into a wavevector on the grid.
struct WellStates {
  std::vector<GridFunction> states;
  double omega = 0.0;  // rad/s
  std::shared_ptr<const Grid1D> grid;
};

/// Left-localized combinations of successive doublets of the full double
/// well; omega from the spacing of the first two doublet means.
WellStates localized_well_states(const spectrum::EigenSet& eig, std::size_t count);

/// Lowest states of the left half of the potential with a hard wall at the
/// barrier top; omega from E1 - E0.
WellStates single_well_states(const Grid1D& potential, std::size_t count);

/// Eigenstates taken as they are, with an explicit frequency.
WellStates plain_states(const spectrum::EigenSet& eig, std::size_t count, double omega);

/// P_n0 = |<phi_n| exp(i k x) |phi_0>|^2 for n < n_max with
/// k = eta / sqrt(hbar / (2 M omega)). Throws ResolutionError when n_max
/// exceeds the available states, DomainError for eta < 0.
std::vector<double> sideband_probabilities(const WellStates& well, double eta, std::size_t n_max);

/// P_20 / P_10.
double anharmonic_ratio(const WellStates& well, double eta);

struct SidebandDynamics {
  std::vector<double> times;    // s
  std::vector<double> initial;  // P_i
  std::vector<double> final;    // P_f
};

/// Resonant Rabi flopping P_f = sin^2(Omega t / 2) on one sideband pair,
/// sampled at n_samples points in [0, duration].
SidebandDynamics jc_sideband_dynamics(double omega_sideband, double duration,
                                      std::size_t n_samples);

}  // namespace chipgate::raman
