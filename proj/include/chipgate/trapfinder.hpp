#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "chipgate/chipfield.hpp"
#include "chipgate/grid.hpp"

namespace chipgate::trap {

using field::Mat3;
using field::Vec3;

/// A scalar field-magnitude landscape the trap searches operate on. Built from
/// a ChipConfig in production; tests plug in analytic landscapes.
struct MagnitudeModel {
  std::function<double(const Vec3&)> magnitude;  // |B|, T
  std::function<Vec3(const Vec3&)> gradient;     // d|B|/dr, T/m
  double moment = 0.0;                           // J/T
  double mass = 0.0;                             // kg

  double potential(const Vec3& p) const { return moment * magnitude(p); }
};

MagnitudeModel model_of(const field::ChipConfig& config);

struct TrapMinimum {
  Vec3 position = Vec3::Zero();
  double field_magnitude = 0.0;  // T
  double potential = 0.0;        // J
};

/// Local harmonic analysis of the potential at one point.
struct PrincipalAxes {
  std::array<double, 3> freqs{};  // Hz: longitudinal, transverse in-plane, transverse out-of-plane
  std::array<Vec3, 3> axes{};
  Mat3 hessian = Mat3::Zero();    // J/m^2
};

struct TrapCharacterization {
  std::array<TrapMinimum, 2> minima{};
  double beta = 0.0;                // rad, in-plane angle of the line through the minima
  double hessian_axis_angle = 0.0;  // rad, in-plane angle of the soft Hessian eigenvector
  std::array<double, 3> freqs{};    // Hz, averaged over both minima
  std::array<Vec3, 3> axes{};
  double separation = 0.0;          // m, along X'
  double height_z0 = 0.0;           // m
  Vec3 barrier_position = Vec3::Zero();
  double barrier_field = 0.0;       // T
  double barrier_height = 0.0;      // J above the mean minimum potential
  Vec3 center = Vec3::Zero();       // midpoint of the minima
  Vec3 axis_direction = Vec3::UnitX();
};

struct DescentOptions {
  double gradient_tolerance = 1e-6;  // T/m
  int max_iterations = 200;
  double hessian_step = 1e-9;        // m
  double max_step = 50e-9;           // m, Newton step cap
  double dedup_distance = 1e-9;      // m
};

/// Multistart damped Newton descent on |B|. Returns the distinct minima,
/// sorted by x then y. Throws DescentError with a per-seed trace when no seed
/// reaches a stationary point with positive-definite Hessian.
std::vector<TrapMinimum> find_minima(const MagnitudeModel& model, std::span<const Vec3> seeds,
                                     const DescentOptions& options = {});
std::vector<TrapMinimum> find_minima(const field::ChipConfig& config, std::span<const Vec3> seeds,
                                     const DescentOptions& options = {});

/// Seeds at (+/-0.4, 0, 1.2) um, which bracket the paper-style double well.
std::vector<Vec3> default_seeds();

/// Central-difference Hessian of the potential.
Mat3 potential_hessian(const MagnitudeModel& model, const Vec3& p, double step);

/// Frequencies sqrt(lambda/M)/2pi from the potential Hessian. Throws
/// SaddlePointError on a non-positive eigenvalue.
PrincipalAxes principal_axes(const MagnitudeModel& model, const Vec3& p, double step = 1e-9);

TrapCharacterization characterize(const MagnitudeModel& model,
                                  const std::array<TrapMinimum, 2>& minima,
                                  double hessian_step = 1e-9);
TrapCharacterization characterize(const field::ChipConfig& config,
                                  const std::array<TrapMinimum, 2>& minima,
                                  double hessian_step = 1e-9);

/// Find the minima from `seeds` and characterize the two of them.
TrapCharacterization analyze(const field::ChipConfig& config, std::span<const Vec3> seeds,
                             const DescentOptions& options = {});

enum class BiasComponent { X, Y };

struct TuneOptions {
  double scan_halfwidth = 1.0 * constants::gauss;  // T around the current value
  int scan_points = 50;
  std::vector<Vec3> seeds = default_seeds();
  double root_tolerance = 1e-12;  // T on the bias component
};

struct TuneScan {
  std::vector<double> bias_values;  // T
  std::vector<double> min_fields;   // T
};

struct TuneResult {
  field::ChipConfig config;
  double achieved_field = 0.0;  // T
  TuneScan scan;
};

/// Adjust one bias component so |B| at the minima equals target_field. Throws
/// TuningError when the scan finds no sign change or |B|_min is not strictly
/// monotone across it.
TuneResult tune_bias(const field::ChipConfig& config, double target_field, BiasComponent component,
                     const TuneOptions& options = {});

/// Zeeman potential sampled on a periodic grid along the axis through both
/// minima, centered at their midpoint and shifted to vanish at the minima.
Grid1D axis_potential(const field::ChipConfig& config, const TrapCharacterization& trap,
                      double halfwidth, std::size_t n_points);

}  // namespace chipgate::trap
