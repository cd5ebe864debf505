#include "strobe/oracles.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <json.hpp>

#include "strobe/random.hpp"
#include "strobe/record_io.hpp"
#include "strobe/stats.hpp"

namespace strobe {

namespace {

HaarMomentReport make_report(double closed, const RunningStats& s) {
  return {closed, s.mean, s.stderr_mean(), s.n};
}

std::uint64_t counter(int test, int dim, int k) {
  return static_cast<std::uint64_t>(test) * 1000000ULL + static_cast<std::uint64_t>(dim) * 1000ULL +
         static_cast<std::uint64_t>(k);
}

double symmetric_impurity_rate(const DensityMatrix& rho, double l0, const MeasurementBasis& basis, double gamma,
                               double dt, double dw) {
  const double lp = impurity(sme_step(rho, basis, gamma, dt, dw).rho);
  const double lm = impurity(sme_step(rho, basis, gamma, dt, -dw).rho);
  return (0.5 * (lp + lm) - l0) / dt;
}

double log_rest(const RealVector& p, Eigen::Index top) {
  double rest = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (i != top) rest += p(i);
  }
  return std::log(rest);
}

std::string tag(const std::string& name, int dim, int k = -1) {
  std::string s = name + "[D=" + std::to_string(dim);
  if (k >= 0) s += ",k=" + std::to_string(k);
  return s + "]";
}

OracleRow row(const std::string& name, const HaarMomentReport& r, double sigma) {
  return {name, r.closed_form, r.monte_carlo_mean, r.monte_carlo_stderr, r.n_samples, r.within(sigma)};
}

}  // namespace

double HaarMomentReport::z_score() const {
  const double diff = std::abs(monte_carlo_mean - closed_form);
  if (monte_carlo_stderr > 0.0) return diff / monte_carlo_stderr;
  return diff <= 1e-12 * std::max(1.0, std::abs(closed_form)) ? 0.0 : std::numeric_limits<double>::infinity();
}

HaarMomentReport mc_haar_T1(const DensityMatrix& rho, const Observable& x, std::int64_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::Oracle);
  RunningStats s;
  for (std::int64_t i = 0; i < n; ++i) s.add(t1_functional(haar_sample(rho.dim(), rng).matrix(), rho, x));
  return make_report(haar_integral_T1(rho, x), s);
}

double design_average_T1(const std::vector<UnitaryMatrix>& set, const DensityMatrix& rho, const Observable& x) {
  if (set.empty()) throw InvariantViolation("design_average_T1: empty set");
  double sum = 0.0;
  for (const auto& u : set) sum += t1_functional(u.matrix(), rho, x);
  return sum / static_cast<double>(set.size());
}

std::pair<HaarMomentReport, HaarMomentReport> mc_q_prime(const Matrix& a, const Matrix& b, const Matrix& c,
                                                         const Matrix& e, std::int64_t n, std::uint64_t seed) {
  const Complex closed = q_prime_fourth_moment(a, b, c, e);
  Rng rng = make_rng(seed, Stream::Oracle);
  RunningStats re, im;
  const int d = static_cast<int>(a.rows());
  for (std::int64_t i = 0; i < n; ++i) {
    const Matrix u = haar_sample(d, rng).matrix();
    const Matrix ud = u.adjoint();
    const Complex v = (a * u * b * ud * c * u * e * ud).trace();
    re.add(v.real());
    im.add(v.imag());
  }
  return {make_report(closed.real(), re), make_report(closed.imag(), im)};
}

HaarMomentReport mc_impurity_drift(const DensityMatrix& rho, const Observable& xc, double gamma, double dt,
                                   std::int64_t n_pairs, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::Oracle);
  std::normal_distribution<double> gauss(0.0, std::sqrt(dt));
  const MeasurementBasis basis(xc.matrix());
  const double l0 = impurity(rho);
  RunningStats s;
  for (std::int64_t i = 0; i < n_pairs; ++i) s.add(symmetric_impurity_rate(rho, l0, basis, gamma, dt, gauss(rng)));
  return make_report(mean_impurity_increment(rho, xc, gamma), s);
}

HaarMomentReport mc_haar_impurity_drift(const DensityMatrix& rho, const Observable& x, double gamma, double dt,
                                        std::int64_t n_samples, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::Oracle);
  std::normal_distribution<double> gauss(0.0, std::sqrt(dt));
  const MeasurementBasis basis(x.matrix());
  const double l0 = impurity(rho);
  RunningStats s;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    const Matrix u = haar_sample(rho.dim(), rng).matrix();
    s.add(symmetric_impurity_rate(rho, l0, basis.rotated(u), gamma, dt, gauss(rng)));
  }
  return make_report(haar_avg_dL_rate(rho, x, gamma).rate, s);
}

MatrixDriftReport mc_state_drift(const DensityMatrix& rho, const Observable& xc, double gamma, double dt,
                                 std::int64_t n_pairs, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::Oracle);
  std::normal_distribution<double> gauss(0.0, std::sqrt(dt));
  const MeasurementBasis basis(xc.matrix());
  const int d = rho.dim();
  const auto n_entries = static_cast<std::size_t>(d * d);
  std::vector<RunningStats> re(n_entries), im(n_entries);
  for (std::int64_t i = 0; i < n_pairs; ++i) {
    const double dw = gauss(rng);
    const Matrix sym = 0.5 * (sme_step(rho, basis, gamma, dt, dw).rho.matrix() +
                              sme_step(rho, basis, gamma, dt, -dw).rho.matrix());
    const Matrix rate = (sym - rho.matrix()) / dt;
    for (std::size_t k = 0; k < n_entries; ++k) {
      re[k].add(rate.data()[k].real());
      im[k].add(rate.data()[k].imag());
    }
  }
  const Matrix closed = 2.0 * gamma * dissipator(xc.matrix(), rho.matrix());
  MatrixDriftReport rep;
  rep.n_pairs = n_pairs;
  for (std::size_t k = 0; k < n_entries; ++k) {
    const HaarMomentReport r1 = make_report(closed.data()[k].real(), re[k]);
    const HaarMomentReport r2 = make_report(closed.data()[k].imag(), im[k]);
    rep.max_z = std::max({rep.max_z, r1.z_score(), r2.z_score()});
    rep.max_abs_diff = std::max({rep.max_abs_diff, std::abs(r1.monte_carlo_mean - r1.closed_form),
                                 std::abs(r2.monte_carlo_mean - r2.closed_form)});
  }
  return rep;
}

constexpr double kDefaultDt = 1e-3;
constexpr double kMaxClippedMass = 1e-6;

HaarMomentReport mc_log_infidelity_rate(const RealVector& p, double gamma, double dt, std::int64_t n_pairs,
                                        std::uint64_t seed, std::optional<double> aleph_value) {
  Rng rng = make_rng(seed, Stream::Oracle);
  std::normal_distribution<double> gauss(0.0, std::sqrt(dt));
  Eigen::Index top = 0;
  for (Eigen::Index i = 1; i < p.size(); ++i) {
    if (p(i) > p(top)) top = i;
  }
  const double l0 = log_rest(p, top);
  RunningStats s;
  RealVector dws(p.size());
  for (std::int64_t i = 0; i < n_pairs; ++i) {
    for (Eigen::Index j = 0; j < dws.size(); ++j) dws(j) = gauss(rng);
    const PopulationStep plus = population_sde_step(p, gamma, dt, dws, aleph_value);
    const PopulationStep minus = population_sde_step(p, gamma, dt, -dws, aleph_value);
    if (dt <= kDefaultDt && std::max(plus.clipped_mass, minus.clipped_mass) > kMaxClippedMass) {
      throw InvariantViolation("mc_log_infidelity_rate: clipped population mass exceeds 1e-6 in one step");
    }
    s.add((0.5 * (log_rest(plus.p, top) + log_rest(minus.p, top)) - l0) / dt);
  }
  return make_report(log_infidelity_rate(p, gamma, aleph_value), s);
}

std::vector<OracleRow> run_oracle_suite(const OracleSettings& cfg) {
  for (int d : cfg.permutation_dims) {
    if (d > 8) throw Refused("permutation identity for D = " + std::to_string(d) + " refused (D! enumeration)");
  }
  std::vector<OracleRow> rows;
  const double g = cfg.gamma;

  for (int d : cfg.dims) {
    for (int k = 0; k < cfg.inputs; ++k) {
      Rng rng = make_rng(cfg.seed, Stream::Oracle, counter(1, d, k));
      const DensityMatrix rho = random_density_matrix(d, rng, 1 + k % d);
      const Observable x = random_observable(d, rng);
      rows.push_back(row(tag("haar_T1", d, k), mc_haar_T1(rho, x, cfg.haar_samples, rng()), cfg.sigma));
    }
  }

  for (int d : {2, 4}) {
    const auto& set = two_design_set(d);
    const int n_inputs = d == 2 ? cfg.inputs : std::min(cfg.inputs, 5);
    for (int k = 0; k < n_inputs; ++k) {
      Rng rng = make_rng(cfg.seed, Stream::Oracle, counter(2, d, k));
      const DensityMatrix rho = random_density_matrix(d, rng, 1 + k % d);
      const Observable x = random_observable(d, rng);
      const double closed = haar_integral_T1(rho, x);
      const double avg = design_average_T1(set, rho, x);
      rows.push_back({tag("two_design_T1", d, k), closed, avg, 0.0, static_cast<std::int64_t>(set.size()),
                      std::abs(avg - closed) <= 1e-10});
    }
  }

  for (int d : cfg.dims) {
    for (int k = 0; k < std::min(cfg.inputs, 5); ++k) {
      Rng rng = make_rng(cfg.seed, Stream::Oracle, counter(3, d, k));
      const Matrix a = complex_gaussian(d, d, rng), b = complex_gaussian(d, d, rng);
      const Matrix c = complex_gaussian(d, d, rng), e = complex_gaussian(d, d, rng);
      const auto [re, im] = mc_q_prime(a, b, c, e, cfg.q_prime_samples, rng());
      rows.push_back(row(tag("q_prime_re", d, k), re, cfg.sigma));
      rows.push_back(row(tag("q_prime_im", d, k), im, cfg.sigma));
    }
  }

  for (int d : cfg.permutation_dims) {
    const GeneratorReport rep = permutation_averaged_generator(d, g, cfg.seed, 10, cfg.aleph_override);
    rows.push_back({tag("perm_average_drift", d), 0.0, rep.drift_max_diff, 0.0, 1, rep.drift_max_diff <= 1e-12});
    rows.push_back({tag("perm_average_noise", d), 0.0, rep.noise_max_diff, 0.0, rep.n_states,
                    rep.noise_max_diff <= 1e-12});
  }

  for (int d : cfg.dims) {
    for (int k = 0; k < cfg.inputs; ++k) {
      Rng rng = make_rng(cfg.seed, Stream::Oracle, counter(4, d, k));
      const DensityMatrix rho = random_density_matrix(d, rng, 2 + k % (d - 1));
      const Observable x = random_observable(d, rng);
      rows.push_back(
          row(tag("impurity_drift", d, k), mc_impurity_drift(rho, x, g, cfg.drift_dt, cfg.drift_pairs, rng()),
              cfg.sigma));
      rows.push_back(row(tag("haar_impurity_drift", d, k),
                         mc_haar_impurity_drift(rho, x, g, cfg.drift_dt, cfg.haar_drift_samples, rng()), cfg.sigma));
    }
  }

  for (int d : cfg.dims) {
    for (int k = 0; k < 3; ++k) {
      Rng rng = make_rng(cfg.seed, Stream::Oracle, counter(5, d, k));
      const DensityMatrix rho = random_density_matrix(d, rng, 2 + k % (d - 1));
      const Observable x = random_observable(d, rng);
      const MatrixDriftReport rep = mc_state_drift(rho, x, g, cfg.drift_dt, cfg.drift_pairs, rng());
      rows.push_back({tag("state_drift_max_z", d, k), 0.0, rep.max_z, 0.0, rep.n_pairs, rep.max_z <= cfg.sigma});
    }
  }

  for (int d : cfg.dims) {
    for (int k = 0; k < 5; ++k) {
      Rng rng = make_rng(cfg.seed, Stream::Oracle, counter(6, d, k));
      std::uniform_real_distribution<double> u(0.01, 0.3);
      std::exponential_distribution<double> ex(1.0);
      const double delta = u(rng);
      RealVector p(d);
      p(0) = 0.0;
      for (int i = 1; i < d; ++i) p(i) = ex(rng);
      p *= delta / p.sum();
      p(0) = 1.0 - delta;
      rows.push_back(
          row(tag("log_infidelity_rate", d, k), mc_log_infidelity_rate(p, g, cfg.drift_dt, cfg.drift_pairs, rng()),
              cfg.sigma));
    }
  }

  for (int d = 2; d <= 6; ++d) {
    Rng rng = make_rng(cfg.seed, Stream::Oracle, counter(7, d, 0));
    const int n = 20000;
    int violations = 0;
    for (int k = 0; k < n; ++k) {
      const DensityMatrix rho = random_density_matrix(d, rng, 1 + k % d);
      const double b = brace_factor(rho);
      if (impurity(rho) > b + 1e-12 || b < -1e-12) ++violations;
    }
    rows.push_back({tag("impurity_below_brace", d), 0.0, static_cast<double>(violations), 0.0, n, violations == 0});
  }

  {
    bool ordered = true;
    for (int d = 2; d <= 64; ++d) {
      const RateBounds b = measurement_speedup_bounds(d);
      ordered = ordered && b.lower <= b.upper;
    }
    const RateBounds b4 = measurement_speedup_bounds(4);
    rows.push_back({"speedup_bounds_ordered[D=2..64]", 1.0, ordered ? 1.0 : 0.0, 0.0, 63, ordered});
    rows.push_back({"speedup_lower[D=4]", 20.0 / 9.0, b4.lower, 0.0, 1, std::abs(b4.lower - 20.0 / 9.0) < 1e-14});
    rows.push_back({"speedup_upper[D=4]", 10.0 / 3.0, b4.upper, 0.0, 1, std::abs(b4.upper - 10.0 / 3.0) < 1e-14});
  }
  return rows;
}

void write_oracle_csv(const std::string& path, const std::vector<OracleRow>& rows) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os << "name,closed_form,mc_mean,mc_stderr,n,pass\n";
  for (const auto& r : rows) {
    os << r.name << "," << format_double(r.closed_form) << "," << format_double(r.mc_mean) << ","
       << format_double(r.mc_stderr) << "," << r.n << "," << (r.pass ? "pass" : "fail") << "\n";
  }
}

void write_oracle_json(const std::string& path, const std::vector<OracleRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"name", r.name},
                   {"closed_form", r.closed_form},
                   {"mc_mean", r.mc_mean},
                   {"mc_stderr", r.mc_stderr},
                   {"n", r.n},
                   {"pass", r.pass}});
  }
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os << arr.dump(2) << "\n";
}

}  // namespace strobe
