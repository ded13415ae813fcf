#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace chipgate {

/// Where a 1D potential came from: the axis through the two trap minima.
struct AxisInfo {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = Eigen::Vector3d::UnitX();
  double beta = 0.0;   // rad
  double shift = 0.0;  // J subtracted from the sampled potential
};

/// Uniform periodic grid x_i = origin + i * spacing carrying a potential.
struct Grid1D {
  double origin = 0.0;   // m
  double spacing = 0.0;  // m
  std::vector<double> values;  // J
  double mass = 0.0;           // kg
  AxisInfo axis{};

  std::size_t size() const { return values.size(); }
  double x(std::size_t i) const { return origin + static_cast<double>(i) * spacing; }
  std::vector<double> coordinates() const;

  /// Throws DomainError unless spacing > 0, values finite, size >= min_size, mass > 0.
  void validate(std::size_t min_size = 64) const;
  bool same_sampling(const Grid1D& other) const;
};

/// Real grid function normalized with the rectangle rule sum |f|^2 dx = 1.
using GridFunction = std::vector<double>;

double inner(const GridFunction& a, const GridFunction& b, double dx);
double mean_position(const GridFunction& f, const Grid1D& grid);

}  // namespace chipgate
