#include "strobe/sme_engine.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "strobe/random.hpp"

namespace strobe {

namespace {

std::string lower(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == '-') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

double safe_log(double v) { return std::log(std::max(v, std::numeric_limits<double>::denorm_min())); }

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

void apply_action(FilterKernel& kern, const ControlAction& a) {
  if (a.permutation) {
    kern.apply_permutation(*a.permutation);
  } else {
    kern.apply_unitary(a.unitary.matrix());
  }
}

// U(t) bookkeeping with periodic re-unitarization.
class ControlProduct {
 public:
  explicit ControlProduct(int dim) : u_(Matrix::Identity(dim, dim)) {}
  void push(const Matrix& uq) {
    u_ = uq * u_;
    if (++since_check_ >= 10000) {
      since_check_ = 0;
      const auto d = u_.rows();
      if ((u_.adjoint() * u_ - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-9) u_ = polish_unitary(u_);
    }
  }
  const Matrix& matrix() const { return u_; }

 private:
  Matrix u_;
  int since_check_ = 0;
};

Matrix heisenberg_state(const Matrix& lab, const Matrix& u) {
  Matrix r = hermitize(u.adjoint() * lab * u);
  r /= r.trace().real();
  return r;
}

}  // namespace

std::string to_string(Integrator i) {
  return i == Integrator::MeasurementOperator ? "measurement_operator" : "euler_maruyama";
}

Integrator parse_integrator(std::string_view s) {
  const std::string n = lower(s);
  if (n == "measurementoperator" || n == "mo" || n == "kraus") return Integrator::MeasurementOperator;
  if (n == "eulermaruyama" || n == "euler" || n == "em") return Integrator::EulerMaruyama;
  throw ConfigError("unknown integrator '" + std::string(s) + "'");
}

std::string to_string(Sampling s) { return s == Sampling::Physical ? "physical" : "tilted"; }

Sampling parse_sampling(std::string_view s) {
  const std::string n = lower(s);
  if (n == "physical") return Sampling::Physical;
  if (n == "tilted") return Sampling::Tilted;
  throw ConfigError("unknown sampling '" + std::string(s) + "'");
}

void SimParams::validate() const {
  if (dim < 2) throw InvalidDimension("dimension must be at least 2");
  if (!std::isfinite(gamma) || gamma < 0.0) throw ConfigError("gamma must be finite and non-negative");
  if (!std::isfinite(dt) || !(dt > 0.0)) throw ConfigError("dt must be positive");
  if (gamma > 0.0 && !allow_large_dt && dt > 0.01 / gamma * (1.0 + 1e-12)) {
    throw ConfigError("dt exceeds 0.01/gamma; set allow_large_dt to override");
  }
  if (!std::isfinite(total_time) || total_time < dt) throw ConfigError("total_time must be at least dt");
}

std::int64_t SimParams::steps() const { return std::llround(total_time / dt); }

MeasurementBasis::MeasurementBasis(const Matrix& x) {
  if (x.rows() != x.cols() || x.rows() < 1) throw InvalidDimension("MeasurementBasis: expected a square matrix");
  const auto d = x.rows();
  if (is_exactly_diagonal(x)) {
    x_ = x.diagonal().real();
    v_ = Matrix::Identity(d, d);
    identity_ = true;
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(x));
    x_ = es.eigenvalues();
    v_ = es.eigenvectors();
    identity_ = false;
  }
}

MeasurementBasis MeasurementBasis::rotated(const Matrix& u) const {
  MeasurementBasis b;
  b.x_ = x_;
  b.v_ = u.adjoint() * v_;
  b.identity_ = false;
  return b;
}

MeasurementBasis MeasurementBasis::shifted(double lambda) const {
  MeasurementBasis b = *this;
  b.x_.array() += lambda;
  return b;
}

Matrix MeasurementBasis::to_eigen(const Matrix& rho) const {
  if (identity_) return rho;
  return hermitize(v_.adjoint() * rho * v_);
}

Matrix MeasurementBasis::from_eigen(const Matrix& s) const {
  if (identity_) return s;
  return hermitize(v_ * s * v_.adjoint());
}

FilterKernel::FilterKernel(const Matrix& rho0, MeasurementBasis basis, double gamma, double dt,
                           Integrator integrator)
    : basis_(std::move(basis)),
      s_(basis_.to_eigen(rho0)),
      gamma_(gamma),
      dt_(dt),
      sqrt2g_(std::sqrt(2.0 * gamma)),
      sqrt4g_(std::sqrt(4.0 * gamma)),
      integrator_(integrator) {
  if (rho0.rows() != basis_.dim()) throw InvalidDimension("FilterKernel: state and observable dimensions differ");
}

double FilterKernel::mean_x() const {
  const RealVector& x = basis_.eigenvalues();
  double m = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) m += x(i) * s_(i, i).real();
  return m;
}

double FilterKernel::record_increment(double dw) const { return sqrt4g_ * mean_x() * dt_ + dw; }

double FilterKernel::update_from_record(double dR) {
  const double dw = dR - sqrt4g_ * mean_x() * dt_;
  step(dw);
  return dw;
}

void FilterKernel::step(double dw) {
  if (integrator_ == Integrator::MeasurementOperator) {
    step_measurement_operator(dw);
  } else {
    step_euler(dw);
  }
}

void FilterKernel::step_measurement_operator(double dw) {
  const RealVector& x = basis_.eigenvalues();
  const auto d = x.size();
  const double m = mean_x();
  RealVector a(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double c = sqrt2g_ * (x(i) - m);
    a(i) = c * dw - c * c * dt_;
  }
  const double amax = a.maxCoeff();
  RealVector f = (a.array() - amax).exp().matrix();
  double norm = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) norm += f(i) * f(i) * s_(i, i).real();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw IntegratorError("measurement step lost the state (norm " + std::to_string(norm) + "); reduce dt");
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) s_(i, j) *= (f(i) * f(j)) / norm;
  }
  last_log_norm_ = std::log(norm) + 2.0 * amax;
}

void FilterKernel::step_euler(double dw) {
  const RealVector& x = basis_.eigenvalues();
  const auto d = x.size();
  const double m = mean_x();
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double gap = x(i) - x(j);
      const double factor = -gamma_ * gap * gap * dt_ + sqrt2g_ * dw * (x(i) + x(j) - 2.0 * m);
      s_(i, j) += factor * s_(i, j);
    }
  }
  const double norm = s_.trace().real();
  s_ /= norm;
  last_log_norm_ = std::log(norm);
  const double lo = is_exactly_diagonal(s_) ? s_.diagonal().real().minCoeff() : min_eigenvalue(s_);
  if (lo < -DensityMatrix::kPsdTol) {
    throw IntegratorError("Euler-Maruyama step produced eigenvalue " + std::to_string(lo) +
                          "; reduce dt or use the measurement-operator integrator");
  }
}

void FilterKernel::apply_unitary(const Matrix& u) {
  const Matrix ue = basis_.is_identity() ? u : Matrix(basis_.vectors().adjoint() * u * basis_.vectors());
  s_ = hermitize(ue * s_ * ue.adjoint());
  s_ /= s_.trace().real();
}

void FilterKernel::apply_permutation(const Permutation& p) {
  if (!basis_.is_identity()) {
    apply_unitary(p.matrix().matrix());
    return;
  }
  const auto d = s_.rows();
  Matrix out(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) out(p(static_cast<int>(i)), p(static_cast<int>(j))) = s_(i, j);
  }
  s_ = std::move(out);
}

StepResult sme_step(const DensityMatrix& rho, const MeasurementBasis& basis, double gamma, double dt, double dw,
                    Integrator integrator) {
  if (!std::isfinite(dw)) throw IntegratorError("sme_step: non-finite dw");
  FilterKernel k(rho.matrix(), basis, gamma, dt, integrator);
  const double dR = k.record_increment(dw);
  k.step(dw);
  Matrix out = k.lab_state();
  out /= out.trace().real();
  try {
    return {DensityMatrix(hermitize(out)), dR};
  } catch (const InvariantViolation& e) {
    throw IntegratorError(std::string("sme_step left the state space (") + e.what() + "); reduce dt");
  }
}

StepResult sme_step(const DensityMatrix& rho, const Observable& xc, double gamma, double dt, double dw,
                    Integrator integrator) {
  if (xc.dim() != rho.dim()) throw InvalidDimension("sme_step: dimension mismatch");
  return sme_step(rho, MeasurementBasis(xc.matrix()), gamma, dt, dw, integrator);
}

void MeasurementRecord::validate() const {
  const std::int64_t n = params.steps();
  if (static_cast<std::int64_t>(increments.size()) != n) {
    throw RecordCorrupt("record truncated: expected " + std::to_string(n) + " increments, found " +
                        std::to_string(increments.size()));
  }
  std::int64_t last = 0;
  for (const auto& e : control_log) {
    if (e.step <= last || e.step >= n) throw RecordCorrupt("control log steps out of order or out of range");
    last = e.step;
  }
}

std::uint64_t state_hash(const Matrix& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](double v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  };
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    feed(m.data()[k].real());
    feed(m.data()[k].imag());
  }
  return h;
}

std::int64_t pulse_interval_steps(double delta_t, double dt) {
  if (!(delta_t > 0.0)) throw ConfigError("delta_t must be positive");
  const double r = delta_t / dt;
  const std::int64_t k = std::llround(r);
  if (k < 1 || std::abs(r - static_cast<double>(k)) > 1e-9 * std::max(1.0, r)) {
    throw ConfigError("delta_t = " + std::to_string(delta_t) + " is not an integer multiple of dt = " +
                      std::to_string(dt));
  }
  return k;
}

std::int64_t default_save_every(std::int64_t steps) {
  return std::max<std::int64_t>(1, (steps + 9999) / 10000);
}

TrajectoryResult simulate_trajectory(const DensityMatrix& rho0, const Observable& x, const ControlSchedule& schedule,
                                     const SimParams& params, std::uint64_t seed, const TrajectoryOptions& options) {
  params.validate();
  const int dim = params.dim;
  if (x.dim() != dim || rho0.dim() != dim) throw InvalidDimension("simulate_trajectory: dimension mismatch");
  schedule.validate(dim);

  const std::int64_t n_steps = params.steps();
  const std::int64_t k =
      schedule.strategy == Strategy::NoControl ? 0 : pulse_interval_steps(schedule.delta_t, params.dt);
  const std::int64_t save = options.save_every > 0 ? options.save_every : default_save_every(n_steps);
  const double dt = params.dt;
  const double sqrt2g = std::sqrt(2.0 * params.gamma);

  FilterKernel kern(rho0.matrix(), MeasurementBasis(x.matrix()), params.gamma, dt, options.integrator);
  ControlProduct product(dim);

  Rng noise(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(dt));

  // Tilted-sampling state.
  const bool tilted = options.sampling == Sampling::Tilted;
  std::vector<double> tilts;
  int branch = -1;  // -1: model branch, j >= 0: constant tilt j
  Rng sampler = make_rng(seed, Stream::Sampling);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (tilted) {
    RealVector ev = kern.basis().eigenvalues();
    std::sort(ev.begin(), ev.end());
    for (Eigen::Index i = 0; i + 1 < ev.size(); ++i) {
      if (ev(i + 1) - ev(i) > 1e-12) tilts.push_back(sqrt2g * 0.5 * (ev(i) + ev(i + 1)));
    }
    if (tilts.empty()) tilts.push_back(0.0);
    if (unif(sampler) >= 0.5) {
      branch = std::min(static_cast<int>(unif(sampler) * static_cast<double>(tilts.size())),
                        static_cast<int>(tilts.size()) - 1);
    }
  }
  double log_w_lin = 0.0;
  double y = 0.0;
  const double ln_half = std::log(0.5);
  const double ln_m = std::log(static_cast<double>(tilts.empty() ? 1 : tilts.size()));

  TrajectoryResult out{{}, {}, {}, {}, DensityMatrix::maximally_mixed(dim), Matrix(), Matrix(), MeasurementRecord{}};
  MeasurementRecord& rec = out.record;
  rec.params = params;
  rec.seed = seed;
  rec.schedule = schedule;
  rec.integrator = options.integrator;
  if (options.keep_record) rec.increments.reserve(static_cast<std::size_t>(n_steps));

  auto sample = [&](std::int64_t n) {
    const Matrix& s = kern.state();
    const double t = static_cast<double>(n) * dt;
    out.times.push_back(t);
    out.impurity_series.push_back(impurity(s));
    out.log_infidelity_series.push_back(safe_log(infidelity(s, options.infidelity_mode).delta));
    if (tilted) {
      double mix = -std::numeric_limits<double>::infinity();
      for (double c : tilts) mix = log_add(mix, 2.0 * c * y - 2.0 * c * c * t);
      const double log_den = log_add(ln_half + log_w_lin, ln_half + mix - ln_m);
      out.log_weight_series.push_back(log_w_lin - log_den);
    }
  };

  sample(0);
  const RealVector& xs = kern.basis().eigenvalues();
  for (std::int64_t n = 0; n < n_steps; ++n) {
    double dw;
    double cm = 0.0;
    if (!tilted) {
      dw = gauss(noise);
    } else {
      const double m = kern.mean_x();
      cm = sqrt2g * m;
      if (branch < 0) {
        // Draw the outcome from the discrete measurement model: pick a level,
        // then a Gaussian centred on its drift.
        double u = unif(sampler);
        Eigen::Index level = xs.size() - 1;
        for (Eigen::Index i = 0; i < xs.size(); ++i) {
          u -= kern.state()(i, i).real();
          if (u < 0.0) {
            level = i;
            break;
          }
        }
        dw = gauss(noise) + 2.0 * sqrt2g * (xs(level) - m) * dt;
      } else {
        const double dy = 2.0 * tilts[static_cast<std::size_t>(branch)] * dt + gauss(noise);
        dw = dy - 2.0 * cm * dt;
      }
    }
    const double dR = kern.record_increment(dw);
    const double dw_used = kern.update_from_record(dR);
    if (options.keep_record) rec.increments.push_back(dR);
    if (tilted) {
      const double dy = dw_used + 2.0 * cm * dt;
      y += dy;
      log_w_lin += kern.last_log_norm() + 2.0 * cm * dy - 2.0 * cm * cm * dt;
    }

    const std::int64_t n1 = n + 1;
    if (n1 % save == 0 || n1 == n_steps) sample(n1);
    if (k > 0 && n1 % k == 0 && n1 < n_steps) {
      const auto q = static_cast<std::uint64_t>(n1 / k);
      const ControlAction action = next_control(schedule, dim, q);
      apply_action(kern, action);
      product.push(action.unitary.matrix());
      rec.control_log.push_back({n1, action.id});
    }
  }

  out.lab_state = kern.lab_state();
  out.control_product = product.matrix();
  const Matrix fin = heisenberg_state(out.lab_state, out.control_product);
  out.final_state = DensityMatrix(fin);
  rec.final_state_hash = state_hash(fin);
  rec.final_state = fin;
  return out;
}

DensityMatrix filter_record(const DensityMatrix& rho0, const Observable& x, const MeasurementRecord& record) {
  record.validate();
  const SimParams& params = record.params;
  const int dim = params.dim;
  if (x.dim() != dim || rho0.dim() != dim) throw InvalidDimension("filter_record: dimension mismatch");
  const ControlSchedule& schedule = record.schedule;
  const std::int64_t n_steps = params.steps();
  const std::int64_t k =
      schedule.strategy == Strategy::NoControl ? 0 : pulse_interval_steps(schedule.delta_t, params.dt);

  FilterKernel kern(rho0.matrix(), MeasurementBasis(x.matrix()).shifted(record.lambda_shift), params.gamma,
                    params.dt, record.integrator);
  ControlProduct product(dim);
  std::size_t next_log = 0;
  for (std::int64_t n = 0; n < n_steps; ++n) {
    kern.update_from_record(record.increments[static_cast<std::size_t>(n)]);
    const std::int64_t n1 = n + 1;
    if (k > 0 && n1 % k == 0 && n1 < n_steps) {
      if (next_log >= record.control_log.size() || record.control_log[next_log].step != n1) {
        throw RecordCorrupt("control log has no entry for the pulse at step " + std::to_string(n1));
      }
      const auto q = static_cast<std::uint64_t>(n1 / k);
      const ControlAction action = resolve_control(schedule, dim, q, record.control_log[next_log].id);
      apply_action(kern, action);
      product.push(action.unitary.matrix());
      ++next_log;
    }
  }
  if (next_log != record.control_log.size()) throw RecordCorrupt("control log has entries at non-pulse steps");
  return DensityMatrix(heisenberg_state(kern.lab_state(), product.matrix()));
}

LambdaShiftReport lambda_shift_check(const DensityMatrix& rho0, const Observable& x, double lambda,
                                     std::uint64_t seed, const SimParams& params, const ControlSchedule& schedule,
                                     Integrator integrator) {
  params.validate();
  const int dim = params.dim;
  if (x.dim() != dim || rho0.dim() != dim) throw InvalidDimension("lambda_shift_check: dimension mismatch");
  schedule.validate(dim);
  const std::int64_t n_steps = params.steps();
  const std::int64_t k =
      schedule.strategy == Strategy::NoControl ? 0 : pulse_interval_steps(schedule.delta_t, params.dt);
  const MeasurementBasis basis(x.matrix());
  FilterKernel a(rho0.matrix(), basis, params.gamma, params.dt, integrator);
  FilterKernel b(rho0.matrix(), basis.shifted(lambda), params.gamma, params.dt, integrator);
  const double expected = std::sqrt(4.0 * params.gamma) * lambda * params.dt;

  Rng noise(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(params.dt));
  LambdaShiftReport rep;
  for (std::int64_t n = 0; n < n_steps; ++n) {
    const double dw = gauss(noise);
    const double ra = a.record_increment(dw);
    const double rb = b.record_increment(dw);
    rep.max_record_error = std::max(rep.max_record_error, std::abs((rb - ra) - expected));
    a.update_from_record(ra);
    b.update_from_record(rb);
    const std::int64_t n1 = n + 1;
    if (k > 0 && n1 % k == 0 && n1 < n_steps) {
      const ControlAction action = next_control(schedule, dim, static_cast<std::uint64_t>(n1 / k));
      apply_action(a, action);
      apply_action(b, action);
    }
    rep.max_state_diff = std::max(rep.max_state_diff, (a.state() - b.state()).cwiseAbs().maxCoeff());
  }
  return rep;
}

DensityMatrix make_initial_state(const std::string& spec, int dim) {
  if (dim < 2) throw InvalidDimension("initial state: dimension must be at least 2");
  const std::string s = lower(spec);
  if (s == "mixed" || s == "maximallymixed") return DensityMatrix::maximally_mixed(dim);
  if (s == "plus") return DensityMatrix::pure(Vector::Ones(dim));
  if (s.rfind("basis:", 0) == 0) {
    int idx = -1;
    try {
      idx = std::stoi(s.substr(6));
    } catch (const std::exception&) {
      throw ConfigError("initial state '" + spec + "': bad basis index");
    }
    if (idx < 0 || idx >= dim) throw ConfigError("initial state '" + spec + "': index out of range");
    Vector v = Vector::Zero(dim);
    v(idx) = 1.0;
    return DensityMatrix::pure(v);
  }
  throw ConfigError("unknown initial state '" + spec + "' (use mixed, plus or basis:k)");
}

}  // namespace strobe
