#include "chipgate/grid.hpp"

#include <cmath>

#include "chipgate/error.hpp"

namespace chipgate {

std::vector<double> Grid1D::coordinates() const {
  std::vector<double> xs(size());
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = x(i);
  return xs;
}

void Grid1D::validate(std::size_t min_size) const {
  if (!(spacing > 0.0)) throw DomainError("grid spacing must be positive");
  if (values.size() < min_size) {
    throw DomainError("grid needs at least " + std::to_string(min_size) + " points, has " +
                      std::to_string(values.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("grid potential contains non-finite values");
  }
  if (!(mass > 0.0)) throw DomainError("grid mass must be positive");
}

bool Grid1D::same_sampling(const Grid1D& other) const {
  return size() == other.size() && origin == other.origin && spacing == other.spacing;
}

double inner(const GridFunction& a, const GridFunction& b, double dx) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * dx;
}

double mean_position(const GridFunction& f, const Grid1D& grid) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += grid.x(i) * f[i] * f[i];
  return s * grid.spacing;
}

}  // namespace chipgate
