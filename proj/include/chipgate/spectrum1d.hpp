#pragma once

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <utility>
#include <vector>

#include "chipgate/grid.hpp"

namespace chipgate::spectrum {

enum class KineticOperator {
  fourier,            // periodic Fourier-grid (sinc) representation, spectrally accurate
  finite_difference,  // 3-point Laplacian with hard walls past the grid ends
};

struct EigenSet {
  std::vector<double> energies;       // J, ascending
  std::vector<GridFunction> states;   // real, sum psi^2 dx = 1
  std::shared_ptr<const Grid1D> grid;
};

struct LocalizedBasis {
  GridFunction gL, gR, eL, eR;
  std::array<double, 2> doublet_splittings{};  // J: E1-E0, E3-E2
};

/// Kinetic energy matrix -hbar^2/2M d^2/dx^2 on n points of spacing dx.
Eigen::MatrixXd kinetic_matrix(std::size_t n, double dx, double mass, KineticOperator kind);

/// Lowest n_states eigenpairs of T + V. States are sign-fixed so that the
/// leftmost antinode is positive. Throws ResolutionError when n_states
/// exceeds a quarter of the grid and ConvergenceError if the solver fails.
EigenSet solve_eigenstates(const Grid1D& grid, std::size_t n_states,
                           KineticOperator kind = KineticOperator::fourier);

/// (left, right) = (psi_k -/+ psi_{k+1})/sqrt2 ordered by mean position.
std::pair<GridFunction, GridFunction> localized_pair(const EigenSet& eig, std::size_t first);

/// Left/right well states from the two lowest doublets. Throws StructureError
/// when either doublet splitting is not below 10% of the gap to the next level.
LocalizedBasis localized_basis(const EigenSet& eig);

/// E1 - E0 and E3 - E2. Throws StructureError with fewer than four states.
std::array<double, 2> doublet_splittings(const EigenSet& eig);

/// Sub-grid covering one side of the grid midpoint, for single-well spectra.
/// The potential jump at the periodic seam acts as a hard wall.
Grid1D half_domain(const Grid1D& grid, bool left_side);

/// Point of mirror symmetry of a periodic grid (index n/2).
double grid_center(const Grid1D& grid);

}  // namespace chipgate::spectrum
