#pragma once

// Dimension-4 state vectors, Hermitian operators and projective measurement.
// One coin register is one 4-dimensional state (two qubits); nothing here
// composes registers.

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <utility>

#include "qmoney/rng.hpp"

namespace qmoney::qsim {

inline constexpr std::size_t kDim = 4;

using Complex = std::complex<double>;
using Amplitudes = Eigen::Matrix<Complex, 4, 1>;
using Matrix4 = Eigen::Matrix<Complex, 4, 4>;

inline constexpr double kNormTolerance = 1e-12;

/// Unit vector in C^4.
class StateVec {
 public:
  /// Throws std::invalid_argument unless the squared norm is 1 within 1e-12.
  explicit StateVec(const Amplitudes& amps);
  StateVec(Complex a0, Complex a1, Complex a2, Complex a3)
      : StateVec(Amplitudes(a0, a1, a2, a3)) {}

  /// Rescales a nonzero vector to unit norm.
  static StateVec normalized(const Amplitudes& amps);
  static StateVec basis_state(std::size_t index);

  const Amplitudes& amplitudes() const noexcept { return amps_; }
  Complex operator[](std::size_t i) const { return amps_[static_cast<Eigen::Index>(i)]; }

  /// Multiplies by a global phase so the first nonzero amplitude is positive real.
  StateVec phase_normalized() const;

  Complex inner(const StateVec& other) const { return amps_.dot(other.amps_); }

  /// Bitwise equality of amplitudes.
  friend bool operator==(const StateVec& a, const StateVec& b) noexcept { return a.amps_ == b.amps_; }

 private:
  struct Unchecked {};
  StateVec(const Amplitudes& amps, Unchecked) : amps_(amps) {}

  Amplitudes amps_;
};

/// 4x4 Hermitian matrix.
class HermitianOp {
 public:
  /// Throws std::invalid_argument unless `m` equals its adjoint within 1e-12.
  explicit HermitianOp(const Matrix4& m);

  static HermitianOp zero() { return HermitianOp(Matrix4::Zero()); }
  static HermitianOp identity() { return HermitianOp(Matrix4::Identity()); }
  /// |v><v|
  static HermitianOp projector(const StateVec& v);

  const Matrix4& matrix() const noexcept { return m_; }
  double trace() const { return m_.trace().real(); }

  HermitianOp& operator+=(const HermitianOp& rhs) {
    m_ += rhs.m_;
    return *this;
  }
  friend HermitianOp operator+(HermitianOp lhs, const HermitianOp& rhs) { return lhs += rhs; }
  friend HermitianOp operator*(double s, const HermitianOp& op) { return HermitianOp(s * op.m_); }

 private:
  Matrix4 m_;
};

/// Ordered orthonormal basis of C^4.
class ProjectiveBasis {
 public:
  /// Throws std::invalid_argument unless the vectors are pairwise orthogonal within 1e-12.
  explicit ProjectiveBasis(const std::array<StateVec, 4>& vectors);

  static ProjectiveBasis standard();
  /// Columns of a unitary matrix.
  static ProjectiveBasis from_unitary(const Matrix4& u);

  const StateVec& operator[](std::size_t i) const { return vectors_[i]; }
  std::span<const StateVec, 4> vectors() const noexcept { return vectors_; }

  /// Outcome probabilities |<b_i|s>|^2.
  std::array<double, 4> probabilities(const StateVec& state) const;

 private:
  std::array<StateVec, 4> vectors_;
};

struct MeasureResult {
  std::size_t outcome;
  StateVec collapsed;
};

/// Projective measurement. The collapsed state is the phase-normalized basis
/// vector of the observed outcome; outcomes of probability zero never occur.
MeasureResult measure(const StateVec& state, const ProjectiveBasis& basis, Rng& rng);

struct EigenPair {
  double value;
  StateVec vector;
};

/// Largest eigenvalue and a unit eigenvector (phase-normalized).
EigenPair top_eigenpair(const HermitianOp& op);

/// Full spectrum, eigenvalues ascending; column i of `vectors` pairs with values[i].
struct Spectrum {
  std::array<double, 4> values;
  Matrix4 vectors;
};
Spectrum eigen_decompose(const HermitianOp& op);

/// <state|op|state>
double expectation(const HermitianOp& op, const StateVec& state);

/// Haar-random unit vector.
StateVec random_state(Rng& rng);
/// Haar-random unitary (QR of a complex Ginibre matrix with phase fix).
Matrix4 random_unitary(Rng& rng);

}  // namespace qmoney::qsim
