#include "chipgate/chipfield.hpp"

#include <cmath>
#include <sstream>

#include "chipgate/error.hpp"

namespace chipgate::field {

namespace {

struct WireGeometry {
  Vec3 direction;
  Vec3 rho;  // perpendicular displacement from the wire line to the point
};

WireGeometry geometry(WireAxis axis, double offset, const Vec3& point, double epsilon) {
  WireGeometry g;
  if (axis == WireAxis::X) {
    g.direction = Vec3::UnitX();
    g.rho = Vec3(0.0, point.y() - offset, point.z());
  } else {
    g.direction = Vec3::UnitY();
    g.rho = Vec3(point.x() - offset, 0.0, point.z());
  }
  if (!(g.rho.norm() >= epsilon)) {
    std::ostringstream msg;
    msg << "field evaluated " << g.rho.norm() << " m from a wire at (" << point.x() << ", "
        << point.y() << ", " << point.z() << ")";
    throw SingularityError(msg.str());
  }
  return g;
}

Mat3 cross_matrix(const Vec3& d) {
  Mat3 m;
  m << 0.0, -d.z(), d.y(), d.z(), 0.0, -d.x(), -d.y(), d.x(), 0.0;
  return m;
}

}  // namespace

void AtomSpecies::validate() const {
  if (!(mass > 0.0)) throw ValidityError("species mass must be positive");
  if (!(magic_field > 0.0)) throw ValidityError("magic field must be positive");
  if (!std::isfinite(gF_mF) || !(bohr_magneton > 0.0)) {
    throw ValidityError("species Zeeman constants must be finite and positive");
  }
}

void ChipConfig::validate() const {
  if (!(wire_separation > 0.0)) throw ValidityError("wire separation must be positive");
  if (current == 0.0 || !std::isfinite(current)) throw ValidityError("current must be nonzero");
  if (!(kappa > 0.0)) throw ValidityError("kappa must be positive");
  if (!bias.allFinite()) throw ValidityError("bias field must be finite");
  if (!(alpha >= 0.0)) throw ValidityError("alpha must be non-negative");
  species.validate();
}

Vec3 wire_field(WireAxis axis, double offset, double current, const Vec3& point, double kappa,
                double epsilon) {
  const auto g = geometry(axis, offset, point, epsilon);
  return kappa * current * g.direction.cross(g.rho) / g.rho.squaredNorm();
}

Mat3 wire_jacobian(WireAxis axis, double offset, double current, const Vec3& point,
                   double kappa, double epsilon) {
  const auto g = geometry(axis, offset, point, epsilon);
  const double r2 = g.rho.squaredNorm();
  // d/dr of c (d x rho)/|rho|^2 with drho/dr the projector off the wire axis.
  return kappa * current *
         (cross_matrix(g.direction) / r2 -
          2.0 * g.direction.cross(g.rho) * g.rho.transpose() / (r2 * r2));
}

FieldSample chip_field(const ChipConfig& c, const Vec3& point) {
  const double eps = c.singularity_epsilon;
  const double side = c.alpha * c.current;
  Vec3 B = c.bias;
  B += wire_field(WireAxis::X, 0.0, c.current, point, c.kappa, eps);
  B += wire_field(WireAxis::Y, 0.5 * c.wire_separation, side, point, c.kappa, eps);
  B += wire_field(WireAxis::Y, -0.5 * c.wire_separation, side, point, c.kappa, eps);
  return FieldSample{point, B, B.norm()};
}

Mat3 chip_jacobian(const ChipConfig& c, const Vec3& point) {
  const double eps = c.singularity_epsilon;
  const double side = c.alpha * c.current;
  return wire_jacobian(WireAxis::X, 0.0, c.current, point, c.kappa, eps) +
         wire_jacobian(WireAxis::Y, 0.5 * c.wire_separation, side, point, c.kappa, eps) +
         wire_jacobian(WireAxis::Y, -0.5 * c.wire_separation, side, point, c.kappa, eps);
}

Vec3 magnitude_gradient(const ChipConfig& config, const Vec3& point) {
  const auto s = chip_field(config, point);
  if (s.magnitude == 0.0) return Vec3::Zero();
  return chip_jacobian(config, point).transpose() * s.B / s.magnitude;
}

double zeeman_potential(const ChipConfig& config, const Vec3& point) {
  return config.species.moment() * chip_field(config, point).magnitude;
}

}  // namespace chipgate::field
