#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

namespace chipgate::logic {

using cplx = std::complex<double>;
using Matrix4 = Eigen::Matrix<cplx, 4, 4>;
using Matrix16 = Eigen::Matrix<cplx, 16, 16>;
using Vector4 = Eigen::Matrix<cplx, 4, 1>;
using Vector16 = Eigen::Matrix<cplx, 16, 1>;

// Single-atom basis index s * 2 + o for |s o>, s in {0, 1}, o in {g, e}.
// Two-atom index s1 * 8 + o1 * 4 + s2 * 2 + o2.

enum class SchemeKind { duplication, swap };

struct Scheme {
  SchemeKind kind = SchemeKind::duplication;
  double phase = 0.0;  // collisional phase, rad
};

/// diag(1, 1, 1, exp(i phi)) on |00>, |01>, |10>, |11>.
Matrix4 phase_gate_matrix(double phi);

/// Per-atom step-(i) map. Duplication exchanges |1g> and |1e>; swap
/// exchanges |0e> and |1g>. Both are involutions, so step (iii) is the same map.
Matrix4 single_atom_map(SchemeKind kind);

/// exp(i phi) on states with both operation qubits in |e>.
Matrix16 collision_matrix(double phi);

/// (M x M) C(phi) (M x M).
Matrix16 scheme_unitary(const Scheme& scheme);

/// storage (x) |gg>.
Vector16 embed(const Vector4& storage);

/// State after steps (i) and (ii).
Vector16 intermediate_state(const Scheme& scheme, const Vector4& storage);

/// Number of singular values above tol of the storage-operation reshape.
int schmidt_rank(const Vector16& state, double tol = 1e-10);

struct VerificationReport {
  SchemeKind kind = SchemeKind::duplication;
  double phase = 0.0;
  int trials = 0;
  double max_deviation = 0.0;        // |U embed(v) - embed(H v)|
  double unitarity_error = 0.0;      // max |U^dagger U - 1|
  int min_intermediate_rank = 0;
  int max_intermediate_rank = 0;
};

/// Applies the scheme to `trials` random normalized storage states drawn from
/// a seeded generator and compares with phase_gate_matrix. Throws
/// VerificationError naming the offending input when a deviation exceeds 1e-10.
VerificationReport verify_scheme(const Scheme& scheme, int trials, std::uint64_t seed);

}  // namespace chipgate::logic
