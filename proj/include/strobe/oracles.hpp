#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "strobe/analytics.hpp"
#include "strobe/sme_engine.hpp"

namespace strobe {

struct HaarMomentReport {
  double closed_form = 0.0;
  double monte_carlo_mean = 0.0;
  double monte_carlo_stderr = 0.0;
  std::int64_t n_samples = 0;

  /// |mean - closed| / stderr (0 when both differences and stderr vanish)
  double z_score() const;
  bool within(double sigma) const { return z_score() <= sigma; }
};

/// Monte Carlo over Haar U of t1_functional.
HaarMomentReport mc_haar_T1(const DensityMatrix& rho, const Observable& x, std::int64_t n, std::uint64_t seed);

/// Exact average of t1_functional over a finite set.
double design_average_T1(const std::vector<UnitaryMatrix>& set, const DensityMatrix& rho, const Observable& x);

/// Real and imaginary parts of the Haar average of tr[A U B U^+ C U E U^+].
std::pair<HaarMomentReport, HaarMomentReport> mc_q_prime(const Matrix& a, const Matrix& b, const Matrix& c,
                                                         const Matrix& e, std::int64_t n, std::uint64_t seed);

/// Noise average of d(impurity)/dt from sme_step with antithetic dw pairs.
HaarMomentReport mc_impurity_drift(const DensityMatrix& rho, const Observable& xc, double gamma, double dt,
                                   std::int64_t n_pairs, std::uint64_t seed);

/// Average over Haar U of the noise-averaged d(impurity)/dt with X rotated to U^+ X U.
HaarMomentReport mc_haar_impurity_drift(const DensityMatrix& rho, const Observable& x, double gamma, double dt,
                                        std::int64_t n_samples, std::uint64_t seed);

struct MatrixDriftReport {
  double max_z = 0.0;
  double max_abs_diff = 0.0;
  std::int64_t n_pairs = 0;
};

/// Elementwise noise average of (rho' - rho)/dt against 2 gamma D[Xc]rho.
MatrixDriftReport mc_state_drift(const DensityMatrix& rho, const Observable& xc, double gamma, double dt,
                                 std::int64_t n_pairs, std::uint64_t seed);

/// Noise average of d ln(Delta)/dt under population_sde_step.
HaarMomentReport mc_log_infidelity_rate(const RealVector& p, double gamma, double dt, std::int64_t n_pairs,
                                        std::uint64_t seed, std::optional<double> aleph_value = std::nullopt);

struct OracleRow {
  std::string name;
  double closed_form = 0.0;
  double mc_mean = 0.0;
  double mc_stderr = 0.0;
  std::int64_t n = 0;
  bool pass = false;
};

struct OracleSettings {
  std::vector<int> dims{2, 3, 4};
  std::vector<int> permutation_dims{2, 3, 4};
  int inputs = 20;
  std::int64_t haar_samples = 100000;
  std::int64_t q_prime_samples = 20000;
  std::int64_t drift_pairs = 20000;
  std::int64_t haar_drift_samples = 40000;
  double drift_dt = 1e-5;
  double sigma = 4.0;
  double gamma = 1.0;
  std::uint64_t seed = 20240601;
  /// Replaces D(D+1)/12 in the projector-model comparisons.
  std::optional<double> aleph_override;
};

/// Runs every closed-form comparison. Throws Refused for permutation_dims above 8.
std::vector<OracleRow> run_oracle_suite(const OracleSettings& s);

void write_oracle_csv(const std::string& path, const std::vector<OracleRow>& rows);
void write_oracle_json(const std::string& path, const std::vector<OracleRow>& rows);

}  // namespace strobe
