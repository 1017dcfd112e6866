#include "qmoney/qsim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qmoney::qsim {

namespace {

// Box-Muller; consumes exactly two uniforms per call.
double standard_normal(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Complex complex_normal(Rng& rng) {
  const double re = standard_normal(rng);
  const double im = standard_normal(rng);
  return {re, im};
}

}  // namespace

StateVec::StateVec(const Amplitudes& amps) : amps_(amps) {
  if (std::abs(amps_.squaredNorm() - 1.0) > kNormTolerance) {
    throw std::invalid_argument("StateVec: squared norm differs from 1");
  }
}

StateVec StateVec::normalized(const Amplitudes& amps) {
  const double n = amps.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("StateVec: cannot normalize zero vector");
  return StateVec(Amplitudes(amps / n), Unchecked{});
}

StateVec StateVec::basis_state(std::size_t index) {
  if (index >= kDim) throw std::out_of_range("StateVec: basis index");
  Amplitudes a = Amplitudes::Zero();
  a[static_cast<Eigen::Index>(index)] = 1.0;
  return StateVec(a, Unchecked{});
}

StateVec StateVec::phase_normalized() const {
  for (Eigen::Index i = 0; i < amps_.size(); ++i) {
    const double mag = std::abs(amps_[i]);
    if (mag > kNormTolerance) {
      const Complex phase = std::conj(amps_[i]) / mag;
      Amplitudes out = amps_ * phase;
      out[i] = mag;
      return StateVec(out, Unchecked{});
    }
  }
  return *this;
}

HermitianOp::HermitianOp(const Matrix4& m) : m_(m) {
  if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > kNormTolerance) {
    throw std::invalid_argument("HermitianOp: matrix is not Hermitian");
  }
}

HermitianOp HermitianOp::projector(const StateVec& v) {
  return HermitianOp(v.amplitudes() * v.amplitudes().adjoint());
}

ProjectiveBasis::ProjectiveBasis(const std::array<StateVec, 4>& vectors) : vectors_(vectors) {
  for (std::size_t i = 0; i < kDim; ++i) {
    for (std::size_t j = i + 1; j < kDim; ++j) {
      if (std::abs(vectors_[i].inner(vectors_[j])) > kNormTolerance) {
        throw std::invalid_argument("ProjectiveBasis: vectors are not orthogonal");
      }
    }
  }
}

ProjectiveBasis ProjectiveBasis::standard() {
  return ProjectiveBasis({StateVec::basis_state(0), StateVec::basis_state(1), StateVec::basis_state(2),
                          StateVec::basis_state(3)});
}

ProjectiveBasis ProjectiveBasis::from_unitary(const Matrix4& u) {
  // Columns are renormalized to absorb rounding from the factorization.
  return ProjectiveBasis({StateVec::normalized(u.col(0)), StateVec::normalized(u.col(1)),
                          StateVec::normalized(u.col(2)), StateVec::normalized(u.col(3))});
}

std::array<double, 4> ProjectiveBasis::probabilities(const StateVec& state) const {
  std::array<double, 4> p{};
  for (std::size_t i = 0; i < kDim; ++i) p[i] = std::norm(vectors_[i].inner(state));
  return p;
}

MeasureResult measure(const StateVec& state, const ProjectiveBasis& basis, Rng& rng) {
  const auto p = basis.probabilities(state);
  const double total = p[0] + p[1] + p[2] + p[3];
  const double u = rng.uniform() * total;

  std::size_t last_possible = 0;
  for (std::size_t i = 0; i < kDim; ++i) {
    if (p[i] > 0.0) last_possible = i;
  }
  std::size_t outcome = last_possible;
  double acc = 0.0;
  for (std::size_t i = 0; i < last_possible; ++i) {
    acc += p[i];
    if (p[i] > 0.0 && u < acc) {
      outcome = i;
      break;
    }
  }
  return {outcome, basis[outcome].phase_normalized()};
}

Spectrum eigen_decompose(const HermitianOp& op) {
  Eigen::SelfAdjointEigenSolver<Matrix4> solver(op.matrix());
  Spectrum s;
  for (std::size_t i = 0; i < kDim; ++i) s.values[i] = solver.eigenvalues()[static_cast<Eigen::Index>(i)];
  s.vectors = solver.eigenvectors();
  return s;
}

EigenPair top_eigenpair(const HermitianOp& op) {
  const Spectrum s = eigen_decompose(op);
  return {s.values[3], StateVec::normalized(s.vectors.col(3)).phase_normalized()};
}

double expectation(const HermitianOp& op, const StateVec& state) {
  const Amplitudes& v = state.amplitudes();
  return v.dot(op.matrix() * v).real();
}

StateVec random_state(Rng& rng) {
  Amplitudes a;
  for (Eigen::Index i = 0; i < 4; ++i) a[i] = complex_normal(rng);
  return StateVec::normalized(a);
}

Matrix4 random_unitary(Rng& rng) {
  Matrix4 z;
  for (Eigen::Index c = 0; c < 4; ++c)
    for (Eigen::Index r = 0; r < 4; ++r) z(r, c) = complex_normal(rng);
  Eigen::HouseholderQR<Matrix4> qr(z);
  Matrix4 q = qr.householderQ();
  const Matrix4 r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < 4; ++i) {
    const Complex d = r(i, i);
    if (std::abs(d) > 0.0) q.col(i) *= d / std::abs(d);
  }
  return q;
}

}  // namespace qmoney::qsim
