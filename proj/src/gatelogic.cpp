#include "chipgate/gatelogic.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <sstream>

#include "chipgate/error.hpp"

namespace chipgate::logic {

namespace {

Matrix16 kron(const Matrix4& a, const Matrix4& b) {
  Matrix16 out;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) out.block<4, 4>(4 * i, 4 * j) = a(i, j) * b;
  }
  return out;
}

int two_atom_index(int s1, int o1, int s2, int o2) { return s1 * 8 + o1 * 4 + s2 * 2 + o2; }

}  // namespace

Matrix4 phase_gate_matrix(double phi) {
  Matrix4 m = Matrix4::Identity();
  m(3, 3) = std::polar(1.0, phi);
  return m;
}

Matrix4 single_atom_map(SchemeKind kind) {
  Matrix4 m = Matrix4::Zero();
  std::array<int, 4> image{0, 1, 2, 3};
  if (kind == SchemeKind::duplication) {
    std::swap(image[2], image[3]);
  } else {
    std::swap(image[1], image[2]);
  }
  for (int k = 0; k < 4; ++k) m(image[k], k) = 1.0;
  return m;
}

Matrix16 collision_matrix(double phi) {
  Matrix16 c = Matrix16::Identity();
  for (int s1 = 0; s1 < 2; ++s1) {
    for (int s2 = 0; s2 < 2; ++s2) {
      const int k = two_atom_index(s1, 1, s2, 1);
      c(k, k) = std::polar(1.0, phi);
    }
  }
  return c;
}

Matrix16 scheme_unitary(const Scheme& scheme) {
  const Matrix16 m = kron(single_atom_map(scheme.kind), single_atom_map(scheme.kind));
  return m * collision_matrix(scheme.phase) * m;
}

Vector16 embed(const Vector4& storage) {
  Vector16 v = Vector16::Zero();
  for (int s1 = 0; s1 < 2; ++s1) {
    for (int s2 = 0; s2 < 2; ++s2) v(two_atom_index(s1, 0, s2, 0)) = storage(s1 * 2 + s2);
  }
  return v;
}

Vector16 intermediate_state(const Scheme& scheme, const Vector4& storage) {
  const Matrix16 m = kron(single_atom_map(scheme.kind), single_atom_map(scheme.kind));
  return collision_matrix(scheme.phase) * (m * embed(storage));
}

int schmidt_rank(const Vector16& state, double tol) {
  Matrix4 reshaped;
  for (int s1 = 0; s1 < 2; ++s1) {
    for (int o1 = 0; o1 < 2; ++o1) {
      for (int s2 = 0; s2 < 2; ++s2) {
        for (int o2 = 0; o2 < 2; ++o2) {
          reshaped(s1 * 2 + s2, o1 * 2 + o2) = state(two_atom_index(s1, o1, s2, o2));
        }
      }
    }
  }
  const Eigen::JacobiSVD<Matrix4> svd(reshaped);
  const auto& sv = svd.singularValues();
  return static_cast<int>((sv.array() > tol).count());
}

VerificationReport verify_scheme(const Scheme& scheme, int trials, std::uint64_t seed) {
  if (trials < 1) throw DomainError("verify_scheme needs at least one trial");
  const Matrix16 u = scheme_unitary(scheme);
  const Matrix4 gate = phase_gate_matrix(scheme.phase);

  VerificationReport report;
  report.kind = scheme.kind;
  report.phase = scheme.phase;
  report.trials = trials;
  report.unitarity_error = (u.adjoint() * u - Matrix16::Identity()).cwiseAbs().maxCoeff();
  report.min_intermediate_rank = 4;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int t = 0; t < trials; ++t) {
    Vector4 v;
    for (int k = 0; k < 4; ++k) v(k) = cplx(normal(rng), normal(rng));
    v.normalize();
    const double dev = (u * embed(v) - embed(gate * v)).norm();
    if (dev > 1e-10) {
      std::ostringstream msg;
      msg << "scheme output deviates by " << dev << " for storage input (" << v.transpose() << ")";
      throw VerificationError(msg.str());
    }
    report.max_deviation = std::max(report.max_deviation, dev);
    const int rank = schmidt_rank(intermediate_state(scheme, v));
    report.min_intermediate_rank = std::min(report.min_intermediate_rank, rank);
    report.max_intermediate_rank = std::max(report.max_intermediate_rank, rank);
  }
  return report;
}

}  // namespace chipgate::logic
