#include "strobe/quantum_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace strobe {

namespace {

double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    std::ostringstream os;
    os << what << ": expected a non-empty square matrix, got " << m.rows() << "x" << m.cols();
    throw InvalidDimension(os.str());
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

}  // namespace

DensityMatrix::DensityMatrix(Matrix m) : m_(std::move(m)) {
  require_square(m_, "DensityMatrix");
  const double herm = max_abs(m_ - m_.adjoint());
  if (herm >= kHermitianTol) {
    throw InvariantViolation("DensityMatrix not Hermitian (max |rho - rho^+| = " + fmt(herm) + ")");
  }
  const double tr_err = std::abs(m_.trace() - Complex(1.0, 0.0));
  if (tr_err >= kTraceTol) {
    throw InvariantViolation("DensityMatrix trace differs from 1 by " + fmt(tr_err));
  }
  if (!is_exactly_diagonal(m_)) {
    const double lo = min_eigenvalue(m_);
    if (lo < -kPsdTol) {
      throw InvariantViolation("DensityMatrix has negative eigenvalue " + fmt(lo));
    }
  } else if (m_.diagonal().real().minCoeff() < -kPsdTol) {
    throw InvariantViolation("DensityMatrix has negative population " +
                             fmt(m_.diagonal().real().minCoeff()));
  }
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  if (dim < 1) throw InvalidDimension("maximally_mixed: dimension must be positive");
  return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::pure(const Vector& psi) {
  const double n = psi.norm();
  if (n == 0.0) throw InvariantViolation("pure: zero state vector");
  const Vector v = psi / n;
  Matrix m = v * v.adjoint();
  return DensityMatrix(hermitize(m));
}

DensityMatrix DensityMatrix::diagonal(const std::vector<double>& populations) {
  const auto d = static_cast<Eigen::Index>(populations.size());
  Matrix m = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) m(i, i) = populations[static_cast<std::size_t>(i)];
  return DensityMatrix(std::move(m));
}

RealVector DensityMatrix::eigenvalues() const {
  if (is_exactly_diagonal(m_)) {
    RealVector p = m_.diagonal().real();
    std::sort(p.begin(), p.end());
    return p;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

Observable::Observable(Matrix m) : m_(std::move(m)) {
  require_square(m_, "Observable");
  const double herm = max_abs(m_ - m_.adjoint());
  if (herm >= kHermitianTol) {
    throw InvariantViolation("Observable not Hermitian (max |X - X^+| = " + fmt(herm) + ")");
  }
  const double tr = std::abs(m_.trace());
  if (tr >= kTraceTol) throw InvariantViolation("Observable not traceless (|tr X| = " + fmt(tr) + ")");
}

RealVector Observable::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

UnitaryMatrix::UnitaryMatrix(Matrix m) : m_(std::move(m)) {
  require_square(m_, "UnitaryMatrix");
  const auto d = m_.rows();
  const double err = max_abs(m_.adjoint() * m_ - Matrix::Identity(d, d));
  if (err >= kUnitaryTol) throw InvariantViolation("matrix not unitary (max |U^+U - I| = " + fmt(err) + ")");
}

UnitaryMatrix UnitaryMatrix::identity(int dim) {
  if (dim < 1) throw InvalidDimension("identity: dimension must be positive");
  return UnitaryMatrix(Matrix::Identity(dim, dim), Unchecked{});
}

UnitaryMatrix UnitaryMatrix::adjoint() const { return UnitaryMatrix(m_.adjoint(), Unchecked{}); }

UnitaryMatrix UnitaryMatrix::operator*(const UnitaryMatrix& rhs) const {
  if (rhs.dim() != dim()) throw InvalidDimension("UnitaryMatrix product: dimension mismatch");
  return UnitaryMatrix(m_ * rhs.m_);
}

double impurity(const Matrix& rho) {
  // 1 - tr rho^2 = 2 e2(eigenvalues) / (tr rho)^2, and e2 is the sum of the
  // 2x2 principal minors.
  const auto d = rho.rows();
  double e2 = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double pi = rho(i, i).real();
    for (Eigen::Index j = i + 1; j < d; ++j) {
      e2 += pi * rho(j, j).real() - std::norm(rho(i, j));
    }
  }
  const double tr = rho.trace().real();
  return 2.0 * e2 / (tr * tr);
}

double impurity(const DensityMatrix& rho) { return impurity(rho.matrix()); }

Infidelity infidelity(const Matrix& rho, InfidelityMode mode) {
  const auto d = rho.rows();
  if (mode == InfidelityMode::Population || is_exactly_diagonal(rho)) {
    const RealVector p = rho.diagonal().real();
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < d; ++i) {
      if (p(i) > p(best)) best = i;
    }
    double rest = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (i != best) rest += p(i);
    }
    return {std::max(0.0, rest / p.sum()), static_cast<int>(best)};
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
  const RealVector& ev = es.eigenvalues();
  double rest = 0.0;
  for (Eigen::Index i = 0; i + 1 < d; ++i) rest += ev(i);
  const Vector top = es.eigenvectors().col(d - 1);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < d; ++i) {
    if (std::norm(top(i)) > std::norm(top(best)) + 1e-12) best = i;
  }
  return {std::max(0.0, rest / ev.sum()), static_cast<int>(best)};
}

Infidelity infidelity(const DensityMatrix& rho, InfidelityMode mode) {
  return infidelity(rho.matrix(), mode);
}

Observable jz_operator(int dim) {
  if (dim < 2) throw InvalidDimension("jz_operator: dimension must be at least 2");
  const double j = (dim - 1) / 2.0;
  Matrix m = Matrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) m(i, i) = j - i;
  return Observable(std::move(m));
}

Matrix dissipator(const Matrix& a, const Matrix& rho) {
  if (a.rows() != rho.rows() || a.cols() != rho.cols()) {
    throw InvalidDimension("dissipator: dimension mismatch");
  }
  const Matrix ad = a.adjoint();
  const Matrix ada = ad * a;
  return a * rho * ad - 0.5 * (ada * rho + rho * ada);
}

Matrix innovator(const Matrix& a, const Matrix& rho) {
  if (a.rows() != rho.rows() || a.cols() != rho.cols()) {
    throw InvalidDimension("innovator: dimension mismatch");
  }
  const Matrix ad = a.adjoint();
  const Complex mean = ((ad + a) * rho).trace();
  return a * rho + rho * ad - mean * rho;
}

Observable rotated_observable(const UnitaryMatrix& u, const Observable& x) {
  if (u.dim() != x.dim()) throw InvalidDimension("rotated_observable: dimension mismatch");
  return Observable(hermitize(u.matrix().adjoint() * x.matrix() * u.matrix()));
}

Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return k;
}

double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool is_exactly_diagonal(const Matrix& m) {
  const auto d = m.rows();
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      if (i != j && m(i, j) != Complex(0.0, 0.0)) return false;
    }
  }
  return true;
}

}  // namespace strobe
