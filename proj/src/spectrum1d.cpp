#include "chipgate/spectrum1d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "chipgate/error.hpp"
#include "chipgate/units.hpp"

namespace chipgate::spectrum {

namespace {

void fix_sign(GridFunction& f) {
  double peak = 0.0;
  for (double v : f) peak = std::max(peak, std::abs(v));
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    const double a = std::abs(f[i]);
    if (a >= 0.25 * peak && a >= std::abs(f[i + 1])) {
      if (f[i] < 0.0) {
        for (double& v : f) v = -v;
      }
      return;
    }
  }
}

}  // namespace

double grid_center(const Grid1D& grid) {
  return grid.origin + 0.5 * static_cast<double>(grid.size()) * grid.spacing;
}

Eigen::MatrixXd kinetic_matrix(std::size_t n, double dx, double mass, KineticOperator kind) {
  const double hb2m = constants::hbar * constants::hbar / (2.0 * mass);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
  if (kind == KineticOperator::finite_difference) {
    const double s = hb2m / (dx * dx);
    for (std::size_t i = 0; i < n; ++i) {
      T(i, i) = 2.0 * s;
      if (i + 1 < n) T(i, i + 1) = T(i + 1, i) = -s;
    }
    return T;
  }
  // Periodic sinc-DVR for even n: the discrete Fourier kinetic operator with
  // wavenumbers -n/2..n/2-1 in closed form.
  const double kmax = std::numbers::pi / dx;
  const double nn = static_cast<double>(n);
  std::vector<double> row(n);
  row[0] = hb2m * kmax * kmax / 3.0 * (1.0 + 2.0 / (nn * nn));
  for (std::size_t m = 1; m < n; ++m) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(m) / nn);
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    row[m] = hb2m * 2.0 * kmax * kmax / (nn * nn) * sign / (s * s);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) T(i, j) = row[i > j ? i - j : j - i];
  }
  return T;
}

EigenSet solve_eigenstates(const Grid1D& grid, std::size_t n_states, KineticOperator kind) {
  grid.validate();
  const std::size_t n = grid.size();
  if (n_states == 0 || n_states > n / 4) {
    throw ResolutionError("requested " + std::to_string(n_states) + " states on a " +
                          std::to_string(n) + "-point grid (limit n/4)");
  }
  if (kind == KineticOperator::fourier && n % 2 != 0) {
    throw DomainError("Fourier-grid kinetic operator needs an even number of points");
  }
  Eigen::VectorXd evals;
  Eigen::MatrixXd evecs;
  if (kind == KineticOperator::finite_difference) {
    const double s = constants::hbar * constants::hbar / (2.0 * grid.mass * grid.spacing * grid.spacing);
    Eigen::VectorXd diag(n), sub(n - 1);
    for (std::size_t i = 0; i < n; ++i) diag[i] = 2.0 * s + grid.values[i];
    sub.setConstant(-s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw ConvergenceError("tridiagonal eigensolver failed");
    evals = es.eigenvalues();
    evecs = es.eigenvectors();
  } else {
    Eigen::MatrixXd H = kinetic_matrix(n, grid.spacing, grid.mass, kind);
    for (std::size_t i = 0; i < n; ++i) H(i, i) += grid.values[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed");
    evals = es.eigenvalues();
    evecs = es.eigenvectors();
  }

  EigenSet out;
  out.grid = std::make_shared<const Grid1D>(grid);
  const double norm = 1.0 / std::sqrt(grid.spacing);
  for (std::size_t k = 0; k < n_states; ++k) {
    out.energies.push_back(evals[static_cast<Eigen::Index>(k)]);
    GridFunction f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = evecs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * norm;
    fix_sign(f);
    out.states.push_back(std::move(f));
  }
  return out;
}

std::pair<GridFunction, GridFunction> localized_pair(const EigenSet& eig, std::size_t first) {
  if (first + 1 >= eig.states.size()) {
    throw StructureError("doublet " + std::to_string(first) + " needs two more states");
  }
  const auto& a = eig.states[first];
  const auto& b = eig.states[first + 1];
  const double r = 1.0 / std::sqrt(2.0);
  GridFunction plus(a.size()), minus(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    plus[i] = r * (a[i] + b[i]);
    minus[i] = r * (a[i] - b[i]);
  }
  const double c = grid_center(*eig.grid);
  if (mean_position(plus, *eig.grid) - c < mean_position(minus, *eig.grid) - c) {
    return {std::move(plus), std::move(minus)};
  }
  return {std::move(minus), std::move(plus)};
}

std::array<double, 2> doublet_splittings(const EigenSet& eig) {
  if (eig.energies.size() < 4) throw StructureError("doublet splittings need four states");
  return {eig.energies[1] - eig.energies[0], eig.energies[3] - eig.energies[2]};
}

LocalizedBasis localized_basis(const EigenSet& eig) {
  const auto split = doublet_splittings(eig);
  const auto& E = eig.energies;
  const double ground_gap = E[2] - E[1];
  const double excited_gap = E.size() > 4 ? E[4] - E[3] : ground_gap;
  if (!(split[0] < 0.1 * ground_gap) || !(split[1] < 0.1 * excited_gap)) {
    throw StructureError("no doublet structure: splittings " + std::to_string(split[0]) + ", " +
                         std::to_string(split[1]) + " J against gaps " +
                         std::to_string(ground_gap) + ", " + std::to_string(excited_gap) + " J");
  }
  LocalizedBasis lb;
  std::tie(lb.gL, lb.gR) = localized_pair(eig, 0);
  std::tie(lb.eL, lb.eR) = localized_pair(eig, 2);
  lb.doublet_splittings = split;
  const double c = grid_center(*eig.grid);
  for (const auto* f : {&lb.gL, &lb.eL}) {
    if (!(mean_position(*f, *eig.grid) < c)) throw StructureError("left state is not localized left");
  }
  for (const auto* f : {&lb.gR, &lb.eR}) {
    if (!(mean_position(*f, *eig.grid) > c)) throw StructureError("right state is not localized right");
  }
  return lb;
}

Grid1D half_domain(const Grid1D& grid, bool left_side) {
  const std::size_t n = grid.size();
  const std::size_t half = n / 2;
  Grid1D g = grid;
  if (left_side) {
    g.values.assign(grid.values.begin(), grid.values.begin() + static_cast<std::ptrdiff_t>(half));
  } else {
    g.values.assign(grid.values.begin() + static_cast<std::ptrdiff_t>(half), grid.values.end());
    g.origin = grid.x(half);
  }
  return g;
}

}  // namespace chipgate::spectrum
