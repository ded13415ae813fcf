#pragma once

#include <Eigen/Dense>

#include "chipgate/units.hpp"

namespace chipgate::field {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Internal-state constants of the trapped species. Defaults are 87Rb in the
/// |F=2,mF=1> / |F=1,mF=-1> clock pair.
struct AtomSpecies {
  double mass = 1.44e-25;                             // kg
  double gF_mF = 0.5;                                 // Zeeman slope factor
  double bohr_magneton = constants::bohr_magneton;    // J/T
  double magic_field = 3.23 * constants::gauss;       // T
  double hyperfine_freq = 6.835e9;                    // Hz

  /// Effective magnetic moment gF mF muB.
  double moment() const { return gF_mF * bohr_magneton; }
  void validate() const;
};

/// H-configuration chip: one wire along X carrying `current`, two wires along
/// Y at x = +/- a/2 carrying alpha * current, plus a uniform bias field. All
/// wires are infinitely thin and lie in the z = 0 plane.
struct ChipConfig {
  double wire_separation = 1.5e-6;  // a, m
  double current = 29.9e-3;         // I, A
  double alpha = 0.093;
  Vec3 bias = Vec3(-9.91, 50.0, 0.0) * constants::gauss;
  double kappa = constants::kappa;
  AtomSpecies species{};
  /// Distance from a wire below which the field is treated as singular.
  double singularity_epsilon = 1e-9;

  void validate() const;
};

struct FieldSample {
  Vec3 position;
  Vec3 B;
  double magnitude = 0.0;
};

enum class WireAxis { X, Y };

/// Field of one infinite straight wire in the z = 0 plane carrying `current`
/// along +axis. For an X wire `offset` is its y coordinate, for a Y wire its x
/// coordinate. Throws SingularityError closer than `epsilon` to the wire.
Vec3 wire_field(WireAxis axis, double offset, double current, const Vec3& point,
                double kappa = constants::kappa, double epsilon = 1e-9);

/// Jacobian dB_i/dx_j of wire_field.
Mat3 wire_jacobian(WireAxis axis, double offset, double current, const Vec3& point,
                   double kappa = constants::kappa, double epsilon = 1e-9);

FieldSample chip_field(const ChipConfig& config, const Vec3& point);

/// Jacobian of the total chip field (the bias contributes nothing).
Mat3 chip_jacobian(const ChipConfig& config, const Vec3& point);

/// Gradient of |B| from the analytic Jacobian.
Vec3 magnitude_gradient(const ChipConfig& config, const Vec3& point);

/// Zeeman potential U = gF mF muB |B| in joules.
double zeeman_potential(const ChipConfig& config, const Vec3& point);

}  // namespace chipgate::field
