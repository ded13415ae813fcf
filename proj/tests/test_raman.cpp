#include <doctest.h>

#include "chipgate/error.hpp"
#include "chipgate/raman.hpp"
#include "chipgate/spectrum1d.hpp"
#include "chipgate/trapfinder.hpp"
#include "support.hpp"

using namespace chipgate;
using constants::c;
using constants::pi;

namespace {

constexpr double kTwoPi = 2.0 * pi;

raman::RamanSetup mw_setup() {
  raman::RamanSetup s;
  s.rabi_1 = kTwoPi * 20e6;
  s.rabi_2 = kTwoPi * 20e6;
  s.detuning = kTwoPi * 2e9;
  s.k_effective = kTwoPi * 6.835e9 / c;
  s.trap_omega = kTwoPi * 10e3;
  return s;
}

const spectrum::EigenSet& chip_eigs() {
  static const auto eig = [] {
    const field::ChipConfig cfg;
    const auto seeds = trap::default_seeds();
    const auto t = trap::analyze(cfg, seeds);
    return spectrum::solve_eigenstates(trap::axis_potential(cfg, t, 1.5e-6, 1024), 8);
  }();
  return eig;
}

}  // namespace

TEST_CASE("Lamb-Dicke parameters") {
  const auto mw = mw_setup();
  CHECK(raman::lamb_dicke(mw) == doctest::Approx(1.09e-5).epsilon(0.01));
  const double optical = raman::lamb_dicke(2.0 * kTwoPi / 800e-9, kTwoPi * 10e3, 1.44e-25);
  CHECK(optical >= 1.0);
  CHECK(optical <= 1.3);
  CHECK(raman::lamb_dicke(1e7, 4.0 * 1e5, 1e-25) == doctest::Approx(0.5 * raman::lamb_dicke(1e7, 1e5, 1e-25)).epsilon(1e-14));
  CHECK_THROWS_AS(raman::lamb_dicke(1e7, 0.0, 1e-25), DomainError);
}

TEST_CASE("Rabi frequency chain") {
  const auto mw = mw_setup();
  const auto chain = raman::rabi_chain(mw);
  CHECK(chain.carrier == doctest::Approx(kTwoPi * 100e3).epsilon(1e-12));
  CHECK(chain.sideband == doctest::Approx(chain.carrier * raman::lamb_dicke(mw)).epsilon(1e-14));
  CHECK(chain.sideband / kTwoPi == doctest::Approx(1.0).epsilon(0.1));

  raman::RamanSetup s = mw;
  s.detuning = 10.0 * s.rabi_1;
  CHECK(raman::rabi_chain(s).carrier == doctest::Approx(s.rabi_1 / 20.0).epsilon(1e-14));
  s.detuning *= 2.0;
  CHECK(raman::rabi_chain(s).carrier == doctest::Approx(s.rabi_1 / 40.0).epsilon(1e-14));

  s.detuning = 5.0 * s.rabi_1;
  CHECK_THROWS_AS(raman::rabi_chain(s), ValidityError);
}

TEST_CASE("sideband wavevector conditions") {
  using raman::Branch;
  using raman::Scheme;
  const double dup = raman::sideband_condition(10e3, 6.835e9, Scheme::duplication);
  CHECK(dup / 100.0 == doctest::Approx(2.09e-6).epsilon(0.01));
  const double swap = raman::sideband_condition(10e3, 6.835e9, Scheme::swap, Branch::desired);
  CHECK(swap / 100.0 == doctest::Approx(1.43).epsilon(0.01));
  const double other = raman::sideband_condition(10e3, 6.835e9, Scheme::swap, Branch::undesired);
  CHECK(swap - other == doctest::Approx(4.0 * pi * 10e3 / c).epsilon(1e-6));
  CHECK_THROWS_AS(raman::sideband_condition(-1.0, 6.835e9, Scheme::swap), DomainError);
}

TEST_CASE("harmonic sidebands follow the perturbative ladder") {
  const double nu = 10e3;
  const auto g = support::harmonic(1024, 1.5e-6, nu);
  const auto well = raman::plain_states(spectrum::solve_eigenstates(*g, 6), 6, kTwoPi * nu);

  const auto p0 = raman::sideband_probabilities(well, 0.0, 4);
  CHECK(p0[0] == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t n = 1; n < 4; ++n) CHECK(p0[n] < 1e-20);

  const double eta = 0.05;
  CHECK(raman::anharmonic_ratio(well, eta) == doctest::Approx(eta * eta / 2.0).epsilon(0.05));
  const auto p = raman::sideband_probabilities(well, eta, 6);
  double sum = 0.0;
  for (double v : p) sum += v;
  CHECK(sum <= 1.0 + 1e-9);
  // Coherent displacement: P_10 = eta^2 exp(-eta^2).
  CHECK(p[1] == doctest::Approx(eta * eta * std::exp(-eta * eta)).epsilon(1e-4));
}

TEST_CASE("ground-state survival falls monotonically with eta") {
  const auto well = raman::localized_well_states(chip_eigs(), 3);
  double previous = 1.0 + 1e-15;
  for (int k = 0; k < 30; ++k) {
    const double eta = 0.3 * k / 29.0;
    const double p00 = raman::sideband_probabilities(well, eta, 1)[0];
    CHECK(p00 <= previous);
    previous = p00;
  }
}

TEST_CASE("the double well is anharmonic enough to feed the second sideband") {
  const auto well = raman::localized_well_states(chip_eigs(), 4);
  const double r01 = raman::anharmonic_ratio(well, 0.01);
  for (double eta : {0.01, 0.02, 0.05}) {
    const double r = raman::anharmonic_ratio(well, eta);
    CHECK(r == doctest::Approx(0.038).epsilon(0.005 / 0.038));
    CHECK(std::abs(r - r01) < 0.1 * r01);
  }
  CHECK_THROWS_AS(raman::sideband_probabilities(well, 0.01, 5), ResolutionError);
  CHECK_THROWS_AS(raman::sideband_probabilities(well, -0.01, 2), DomainError);
}

TEST_CASE("single-well restriction is a usable secondary mode") {
  const auto well = raman::single_well_states(*chip_eigs().grid, 3);
  CHECK(well.omega > 0.0);
  const double r = raman::anharmonic_ratio(well, 0.02);
  CHECK(r > 0.0);
  CHECK(r < 0.1);
}

TEST_CASE("resonant sideband flopping") {
  const double omega = kTwoPi * 1.0;
  const auto d = raman::jc_sideband_dynamics(omega, 2.0 * pi / omega, 201);
  for (std::size_t k = 0; k < d.times.size(); ++k) CHECK(d.initial[k] + d.final[k] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(d.final[100] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.final[200] < 1e-12);
  CHECK(d.times[100] == doctest::Approx(0.5).epsilon(1e-12));
}
