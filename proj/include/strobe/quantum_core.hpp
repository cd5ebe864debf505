#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "strobe/errors.hpp"

namespace strobe {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Conditional state of a D-level system: Hermitian, unit trace, positive semidefinite.
///
/// The constructor validates all three invariants and throws InvariantViolation
/// when any of them fails. Instances are immutable.
class DensityMatrix {
 public:
  static constexpr double kHermitianTol = 1e-12;
  static constexpr double kTraceTol = 1e-12;
  static constexpr double kPsdTol = 1e-10;

  explicit DensityMatrix(Matrix m);

  static DensityMatrix maximally_mixed(int dim);
  static DensityMatrix pure(const Vector& psi);
  static DensityMatrix diagonal(const std::vector<double>& populations);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }

  /// Eigenvalues in ascending order.
  RealVector eigenvalues() const;
  RealVector populations() const { return m_.diagonal().real(); }

 private:
  Matrix m_;
};

/// Hermitian, traceless operator being monitored.
class Observable {
 public:
  static constexpr double kHermitianTol = 1e-12;
  static constexpr double kTraceTol = 1e-12;

  explicit Observable(Matrix m);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  RealVector eigenvalues() const;

 private:
  Matrix m_;
};

class UnitaryMatrix {
 public:
  static constexpr double kUnitaryTol = 1e-10;

  explicit UnitaryMatrix(Matrix m);
  static UnitaryMatrix identity(int dim);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  UnitaryMatrix adjoint() const;
  UnitaryMatrix operator*(const UnitaryMatrix& rhs) const;

 private:
  struct Unchecked {};
  UnitaryMatrix(Matrix m, Unchecked) : m_(std::move(m)) {}
  Matrix m_;
};

enum class InfidelityMode { Eigenvalue, Population };

struct Infidelity {
  double delta = 0.0;
  int index = 0;
};

/// 1 - tr(rho^2), evaluated as twice the sum of 2x2 principal minors so that
/// nearly pure states keep relative precision.
double impurity(const DensityMatrix& rho);
double impurity(const Matrix& rho);

/// Distance from the dominant eigenvalue (or population) to one.
///
/// Delta is accumulated as the sum of the non-dominant eigenvalues/populations
/// rather than as 1 - max, which keeps ln(Delta) meaningful far below machine
/// epsilon when the state is diagonal. In Eigenvalue mode the returned index is
/// the basis state with the largest overlap with the dominant eigenvector.
/// Ties resolve to the smallest index.
Infidelity infidelity(const DensityMatrix& rho, InfidelityMode mode);
Infidelity infidelity(const Matrix& rho, InfidelityMode mode);

/// diag(j, j-1, ..., -j) with j = (D-1)/2.
Observable jz_operator(int dim);

/// D[A]rho = A rho A^+ - (A^+ A rho + rho A^+ A)/2
Matrix dissipator(const Matrix& a, const Matrix& rho);

/// H[A]rho = A rho + rho A^+ - tr[(A^+ + A) rho] rho
Matrix innovator(const Matrix& a, const Matrix& rho);

/// U^+ X U, the monitored observable after the control U.
Observable rotated_observable(const UnitaryMatrix& u, const Observable& x);

Matrix hermitize(const Matrix& m);

/// Kronecker product a (x) b.
Matrix kron(const Matrix& a, const Matrix& b);

/// Smallest eigenvalue of a Hermitian matrix.
double min_eigenvalue(const Matrix& m);

/// True when every off-diagonal entry is exactly zero.
bool is_exactly_diagonal(const Matrix& m);

}  // namespace strobe
