#pragma once

#include <cmath>
#include <functional>
#include <memory>

#include "chipgate/grid.hpp"
#include "chipgate/units.hpp"

namespace support {

inline constexpr double kMass = 1.44e-25;

/// Periodic grid of n points on [-halfwidth, halfwidth) sampling v(x).
inline std::shared_ptr<chipgate::Grid1D> make_grid(std::size_t n, double halfwidth,
                                                   const std::function<double(double)>& v) {
  auto g = std::make_shared<chipgate::Grid1D>();
  g->mass = kMass;
  g->spacing = 2.0 * halfwidth / static_cast<double>(n);
  g->origin = -halfwidth;
  g->values.resize(n);
  for (std::size_t i = 0; i < n; ++i) g->values[i] = v(g->x(i));
  return g;
}

inline std::shared_ptr<chipgate::Grid1D> harmonic(std::size_t n, double halfwidth, double freq) {
  const double w = 2.0 * chipgate::constants::pi * freq;
  return make_grid(n, halfwidth, [w](double x) { return 0.5 * kMass * w * w * x * x; });
}

/// Two harmonic wells at +/- d with a cusp between them; tunneling is
/// negligible when d is many oscillator lengths.
inline std::shared_ptr<chipgate::Grid1D> split_harmonic(std::size_t n, double halfwidth, double freq, double d) {
  const double w = 2.0 * chipgate::constants::pi * freq;
  return make_grid(n, halfwidth, [w, d](double x) {
    const double u = std::abs(x) - d;
    return 0.5 * kMass * w * w * u * u;
  });
}

}  // namespace support
