#include "chipgate/raman.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "chipgate/error.hpp"
#include "chipgate/units.hpp"

namespace chipgate::raman {

using constants::hbar;
using constants::pi;

void RamanSetup::validate() const {
  if (!(rabi_1 > 0.0) || !(rabi_2 > 0.0)) throw ValidityError("Rabi frequencies must be positive");
  if (!(trap_omega > 0.0) || !(mass > 0.0)) throw ValidityError("trap frequency and mass must be positive");
  if (!(k_effective >= 0.0)) throw ValidityError("k_effective must be >= 0");
  const double ratio = std::abs(detuning) / std::max(rabi_1, rabi_2);
  if (!(ratio >= 10.0)) {
    std::ostringstream msg;
    msg << "detuning is only " << ratio << " times the larger Rabi frequency (need >= 10)";
    throw ValidityError(msg.str());
  }
}

double lamb_dicke(double k, double trap_omega, double mass) {
  if (!(trap_omega > 0.0) || !(mass > 0.0)) throw DomainError("Lamb-Dicke parameter needs omega > 0 and M > 0");
  return std::abs(k) * std::sqrt(hbar / (2.0 * mass * trap_omega));
}

double lamb_dicke(const RamanSetup& setup) {
  return lamb_dicke(setup.k_effective, setup.trap_omega, setup.mass);
}

RabiChain rabi_chain(const RamanSetup& setup) {
  setup.validate();
  RabiChain chain;
  chain.carrier = setup.rabi_1 * setup.rabi_2 / (2.0 * std::abs(setup.detuning));
  chain.eta = lamb_dicke(setup);
  chain.sideband = chain.carrier * chain.eta;
  return chain;
}

double sideband_condition(double trap_freq, double hyperfine_freq, Scheme scheme, Branch branch) {
  if (!(trap_freq > 0.0) || !(hyperfine_freq > 0.0)) {
    throw DomainError("sideband condition needs positive frequencies");
  }
  const double c = constants::c;
  if (scheme == Scheme::duplication) return 2.0 * pi * trap_freq / c;
  const double nu = branch == Branch::desired ? hyperfine_freq + trap_freq : hyperfine_freq - trap_freq;
  return 2.0 * pi * nu / c;
}

WellStates localized_well_states(const spectrum::EigenSet& eig, std::size_t count) {
  if (2 * count > eig.states.size()) {
    throw ResolutionError("need " + std::to_string(2 * count) + " eigenstates for " +
                          std::to_string(count) + " localized levels, have " +
                          std::to_string(eig.states.size()));
  }
  if (count < 2) throw DomainError("need at least two localized levels");
  WellStates well;
  well.grid = eig.grid;
  for (std::size_t d = 0; d < count; ++d) {
    well.states.push_back(spectrum::localized_pair(eig, 2 * d).first);
  }
  const auto& e = eig.energies;
  well.omega = (0.5 * (e[2] + e[3]) - 0.5 * (e[0] + e[1])) / hbar;
  return well;
}

WellStates single_well_states(const Grid1D& potential, std::size_t count) {
  if (count < 2) throw DomainError("need at least two single-well levels");
  auto half = spectrum::half_domain(potential, true);
  auto eig = spectrum::solve_eigenstates(half, count);
  WellStates well;
  well.grid = eig.grid;
  well.states = eig.states;
  well.omega = (eig.energies[1] - eig.energies[0]) / hbar;
  return well;
}

WellStates plain_states(const spectrum::EigenSet& eig, std::size_t count, double omega) {
  if (count > eig.states.size()) throw ResolutionError("not enough eigenstates");
  WellStates well;
  well.grid = eig.grid;
  well.states.assign(eig.states.begin(), eig.states.begin() + static_cast<std::ptrdiff_t>(count));
  well.omega = omega;
  return well;
}

std::vector<double> sideband_probabilities(const WellStates& well, double eta, std::size_t n_max) {
  if (!(eta >= 0.0)) throw DomainError("eta must be >= 0");
  if (n_max > well.states.size()) {
    throw ResolutionError("n_max = " + std::to_string(n_max) + " exceeds the " +
                          std::to_string(well.states.size()) + " available states");
  }
  if (!well.grid) throw DomainError("well states carry no grid");
  const Grid1D& grid = *well.grid;
  const double k = eta / std::sqrt(hbar / (2.0 * grid.mass * well.omega));
  const std::size_t n = grid.size();
  const auto& ground = well.states.front();
  std::vector<std::complex<double>> kicked(n);
  for (std::size_t i = 0; i < n; ++i) kicked[i] = std::polar(ground[i], k * grid.x(i));
  std::vector<double> p(n_max);
  for (std::size_t m = 0; m < n_max; ++m) {
    std::complex<double> amp = 0.0;
    for (std::size_t i = 0; i < n; ++i) amp += well.states[m][i] * kicked[i];
    p[m] = std::norm(amp * grid.spacing);
  }
  return p;
}

double anharmonic_ratio(const WellStates& well, double eta) {
  const auto p = sideband_probabilities(well, eta, 3);
  if (!(p[1] > 0.0)) throw DomainError("P_10 vanishes; ratio undefined");
  return p[2] / p[1];
}

SidebandDynamics jc_sideband_dynamics(double omega_sideband, double duration,
                                      std::size_t n_samples) {
  if (!(omega_sideband > 0.0) || !(duration > 0.0) || n_samples < 2) {
    throw DomainError("sideband dynamics needs positive Omega, duration and >= 2 samples");
  }
  SidebandDynamics d;
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double t = duration * static_cast<double>(k) / static_cast<double>(n_samples - 1);
    const double s = std::sin(0.5 * omega_sideband * t);
    d.times.push_back(t);
    d.final.push_back(s * s);
    d.initial.push_back(1.0 - s * s);
  }
  return d;
}

}  // namespace chipgate::raman
