#include "strobe/analytics.hpp"

#include <cmath>

#include "strobe/random.hpp"

namespace strobe {

namespace {

double tr_real(const Matrix& m) { return m.trace().real(); }

void require_same_dim(const DensityMatrix& rho, int d, const char* what) {
  if (rho.dim() != d) throw InvalidDimension(std::string(what) + ": dimension mismatch");
}

// H[A]rho for Hermitian A.
Matrix innovation(const Matrix& a, const Matrix& rho) {
  return a * rho + rho * a - 2.0 * (a * rho).trace().real() * rho;
}

Matrix vec(const Matrix& m) { return Eigen::Map<const Matrix>(m.data(), m.size(), 1); }

}  // namespace

double mean_impurity_increment(const DensityMatrix& rho, const Observable& xc, double gamma) {
  require_same_dim(rho, xc.dim(), "mean_impurity_increment");
  const Matrix& r = rho.matrix();
  const Matrix xr = xc.matrix() * r;
  const double t_xrxr = tr_real(xr * xr);
  const double t_xr = tr_real(xr);
  const double t_xr2 = tr_real(xr * r);
  const double t_r2 = tr_real(r * r);
  return -8.0 * gamma * (t_xrxr - 2.0 * t_xr * t_xr2 + t_xr * t_xr * t_r2);
}

double t1_functional(const Matrix& u, const DensityMatrix& rho, const Observable& x) {
  const Matrix r = u * rho.matrix() * u.adjoint();
  const Matrix xr = x.matrix() * r;
  return tr_real(xr * xr);
}

double haar_integral_T1(const DensityMatrix& rho, const Observable& x) {
  require_same_dim(rho, x.dim(), "haar_integral_T1");
  const double d = rho.dim();
  const double trx2 = tr_real(x.matrix() * x.matrix());
  const double purity = tr_real(rho.matrix() * rho.matrix());
  return trx2 * (d - purity) / (d * (d * d - 1.0));
}

Complex permutation_contraction(const std::vector<Matrix>& ops, const Permutation& s) {
  const int n = s.dim();
  if (static_cast<int>(ops.size()) != n) throw InvalidDimension("permutation_contraction: operator count mismatch");
  const Permutation inv = s.inverse();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  Complex result(1.0, 0.0);
  for (int m = 0; m < n; ++m) {
    if (seen[static_cast<std::size_t>(m)]) continue;
    Matrix prod = ops[static_cast<std::size_t>(m)];
    seen[static_cast<std::size_t>(m)] = 1;
    for (int k = inv(m); k != m; k = inv(k)) {
      prod = prod * ops[static_cast<std::size_t>(k)];
      seen[static_cast<std::size_t>(k)] = 1;
    }
    result *= prod.trace();
  }
  return result;
}

Complex q_prime_fourth_moment(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& e) {
  const auto dim = a.rows();
  for (const Matrix* m : {&a, &b, &c, &e}) {
    if (m->rows() != dim || m->cols() != dim) throw InvalidDimension("q_prime_fourth_moment: dimension mismatch");
  }
  if (dim < 2) throw SingularFormula("q_prime_fourth_moment: D(D^2 - 1) vanishes for D = 1");
  const double d = static_cast<double>(dim);
  const std::vector<Matrix> ops{a, b, c, e};
  const Permutation shift = Permutation::from_digits("2341");
  auto term = [&](const char* digits) {
    return permutation_contraction(ops, Permutation::from_digits(digits) * shift);
  };
  const Complex num = d * (term("2143") + term("4321")) - (term("4123") + term("2341"));
  return num / (d * (d * d - 1.0));
}

double brace_factor(const DensityMatrix& rho) {
  const Matrix& r = rho.matrix();
  const Matrix r2 = r * r;
  const double p2 = tr_real(r2);
  const double p3 = tr_real(r2 * r);
  return 1.0 - 2.0 * p3 + p2 * p2;
}

DlRate haar_avg_dL_rate(const DensityMatrix& rho, const Observable& x, double gamma) {
  require_same_dim(rho, x.dim(), "haar_avg_dL_rate");
  const double d = rho.dim();
  const double trx2 = tr_real(x.matrix() * x.matrix());
  const double b = brace_factor(rho);
  return {-8.0 * trx2 / (d * d - 1.0) * gamma * b, b};
}

double purification_upper_bound(double l0, int dim, double gamma, double t) {
  return std::exp(-(2.0 / 3.0) * dim * gamma * t) * l0;
}

double purification_bound_rate(double trace_x2, int dim, double gamma) {
  const double d = dim;
  return 8.0 * gamma * trace_x2 / (d * d - 1.0);
}

double aleph(int dim) { return dim * (dim + 1.0) / 12.0; }

Matrix dissipator_superop(const Matrix& a) {
  const auto d = a.rows();
  const Matrix id = Matrix::Identity(d, d);
  const Matrix ada = a.adjoint() * a;
  return kron(a.conjugate(), a) - 0.5 * kron(id, ada) - 0.5 * kron(ada.transpose(), id);
}

GeneratorReport permutation_averaged_generator(int dim, double gamma, std::uint64_t seed, int n_states,
                                               std::optional<double> aleph_override) {
  if (dim < 2) throw InvalidDimension("permutation_averaged_generator: D must be at least 2");
  if (dim > 8) throw Refused("permutation_averaged_generator: D! enumeration refused for D > 8");
  GeneratorReport rep;
  rep.dim = dim;
  rep.aleph = aleph_override.value_or(aleph(dim));
  rep.n_states = n_states;

  const Matrix jz = jz_operator(dim).matrix();
  const std::uint64_t n_perm = factorial(dim);
  std::vector<Matrix> rotated;
  rotated.reserve(n_perm);
  for (std::uint64_t r = 0; r < n_perm; ++r) {
    const Matrix p = Permutation::unrank(dim, r).matrix().matrix();
    rotated.push_back(p.adjoint() * jz * p);
  }
  std::vector<Matrix> projectors;
  for (int i = 0; i < dim; ++i) {
    Matrix pi = Matrix::Zero(dim, dim);
    pi(i, i) = 1.0;
    projectors.push_back(pi);
  }

  const auto d2 = static_cast<Eigen::Index>(dim) * dim;
  Matrix avg = Matrix::Zero(d2, d2);
  for (const Matrix& xp : rotated) avg += dissipator_superop(xp);
  avg *= 2.0 * gamma / static_cast<double>(n_perm);
  Matrix proj = Matrix::Zero(d2, d2);
  for (const Matrix& pi : projectors) proj += dissipator_superop(pi);
  proj *= 2.0 * gamma * rep.aleph;
  rep.drift_max_diff = (avg - proj).cwiseAbs().maxCoeff();

  for (int k = 0; k < n_states; ++k) {
    Rng rng = make_rng(seed, Stream::Oracle, static_cast<std::uint64_t>(k));
    const Matrix rho = random_density_matrix(dim, rng).matrix();
    Matrix lhs = Matrix::Zero(d2, d2);
    for (const Matrix& xp : rotated) {
      const Matrix v = vec(innovation(xp, rho));
      lhs += v * v.transpose();
    }
    lhs *= 2.0 * gamma / static_cast<double>(n_perm);
    Matrix rhs = Matrix::Zero(d2, d2);
    for (const Matrix& pi : projectors) {
      const Matrix v = vec(innovation(pi, rho));
      rhs += v * v.transpose();
    }
    rhs *= 2.0 * gamma * rep.aleph;
    rep.noise_max_diff = std::max(rep.noise_max_diff, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return rep;
}

PopulationStep population_sde_step(const RealVector& p, double gamma, double dt, const RealVector& dws,
                                   std::optional<double> aleph_value) {
  const auto d = p.size();
  if (dws.size() != d) throw InvalidDimension("population_sde_step: dws size mismatch");
  if (!(dt > 0.0)) throw ConfigError("population_sde_step: dt must be positive");
  const double amp = 2.0 * std::sqrt(2.0 * gamma * aleph_value.value_or(aleph(static_cast<int>(d))));
  const double weighted = p.dot(dws);
  PopulationStep out;
  out.p.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    // dw_i (p_i - p_i^2) - p_i sum_{j != i} p_j dw_j = p_i (dw_i - sum_j p_j dw_j)
    out.p(i) = p(i) + amp * p(i) * (dws(i) - weighted);
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    if (out.p(i) < 0.0) {
      out.clipped_mass -= out.p(i);
      out.p(i) = 0.0;
    }
  }
  out.p /= out.p.sum();
  return out;
}

double log_infidelity_rate(const RealVector& p, double gamma, std::optional<double> aleph_value) {
  const auto d = p.size();
  if (d < 2) throw InvalidDimension("log_infidelity_rate: need at least two populations");
  Eigen::Index top = 0;
  for (Eigen::Index i = 1; i < d; ++i) {
    if (p(i) > p(top)) top = i;
  }
  double rest = 0.0;
  double rest_sq = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (i == top) continue;
    rest += p(i);
    rest_sq += p(i) * p(i);
  }
  if (!(rest > 0.0)) throw SingularFormula("log_infidelity_rate: infidelity is zero");
  const double p0 = p(top);
  const double a = aleph_value.value_or(aleph(static_cast<int>(d)));
  const double lead = p0 * rest;  // p0 - p0^2 when the populations sum to one
  return -4.0 * gamma * a * (lead * lead + p0 * p0 * rest_sq) / (rest * rest);
}

RateBounds log_infidelity_rate_bounds(int dim, double gamma) {
  if (dim < 2) throw InvalidDimension("log_infidelity_rate_bounds: D must be at least 2");
  const double a = aleph(dim);
  return {4.0 * gamma * a * dim / (dim - 1.0), 8.0 * gamma * a, RateBounds::Context::LogInfidelity};
}

RateBounds measurement_speedup_bounds(int dim) {
  if (dim < 2) throw InvalidDimension("measurement_speedup_bounds: D must be at least 2");
  const double d = dim;
  return {d * d * (d + 1.0) / (12.0 * (d - 1.0)), d * (d + 1.0) / 6.0, RateBounds::Context::Speedup};
}

double purification_speedup_asymptote(int dim) {
  if (dim < 2) throw InvalidDimension("purification_speedup_asymptote: D must be at least 2");
  return 2.0 * dim / 3.0;
}

double feedback_purification_speedup(int dim) {
  if (dim < 2) throw InvalidDimension("feedback_purification_speedup: D must be at least 2");
  return 2.0 * (dim + 1.0) / 3.0;
}

}  // namespace strobe
