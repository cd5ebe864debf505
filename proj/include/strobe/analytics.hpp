#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "strobe/control.hpp"
#include "strobe/quantum_core.hpp"

namespace strobe {

/// Noise-averaged impurity drift d<L>/dt at fixed (rho, Xc):
/// -8 gamma { tr(XrXr) - 2 tr(Xr) tr(Xr^2) + tr(Xr)^2 tr(r^2) }.
double mean_impurity_increment(const DensityMatrix& rho, const Observable& xc, double gamma);

/// tr[X U rho U^+ X U rho U^+]
double t1_functional(const Matrix& u, const DensityMatrix& rho, const Observable& x);

/// Haar integral of t1_functional: tr(X^2)(D - tr rho^2) / (D(D^2 - 1)).
double haar_integral_T1(const DensityMatrix& rho, const Observable& x);

/// tr[(A_1 (x) ... (x) A_n) P_s] for the tensor-factor permutation P_s that
/// moves factor m to slot s(m). Evaluated as a product over the cycles of s of
/// traces of operator products; no D^n matrix is formed. With this convention
/// P_s P_t = P_{s o t}.
Complex permutation_contraction(const std::vector<Matrix>& ops, const Permutation& s);

/// Haar average of tr[A U B U^+ C U E U^+], i.e. tr[(A (x) B (x) C (x) E) Q' P_2341]
/// with Q' = [D(P_2143 + P_4321) - (P_4123 + P_2341)] / (D(D^2 - 1)).
/// Throws SingularFormula for D = 1.
Complex q_prime_fourth_moment(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& e);

struct DlRate {
  double rate;
  double brace;
};

/// Haar-averaged impurity drift: rate = -8 tr(X^2)/(D^2 - 1) gamma B with
/// B = 1 - 2 tr rho^3 + (tr rho^2)^2.
DlRate haar_avg_dL_rate(const DensityMatrix& rho, const Observable& x, double gamma);

double brace_factor(const DensityMatrix& rho);

/// exp(-(2/3) D gamma t) L0, the bound for X = J_z.
double purification_upper_bound(double l0, int dim, double gamma, double t);

/// 8 gamma tr(X^2) / (D^2 - 1): decay rate of the bound for a general X.
double purification_bound_rate(double trace_x2, int dim, double gamma);

/// D(D + 1) / 12
double aleph(int dim);

struct GeneratorReport {
  int dim = 0;
  double aleph = 0.0;
  /// max elementwise |avg_P 2g D[P^+ J_z P] - 2g aleph sum_i D[Pi_i]| over superoperator entries
  double drift_max_diff = 0.0;
  /// max over the sampled states of the elementwise difference of the noise second moments
  double noise_max_diff = 0.0;
  int n_states = 0;
};

/// Compares the permutation-averaged J_z generator with the projector model.
/// aleph_override replaces D(D+1)/12 on the projector side (fault injection).
/// Throws Refused for D > 8.
GeneratorReport permutation_averaged_generator(int dim, double gamma, std::uint64_t seed = 1, int n_states = 10,
                                               std::optional<double> aleph_override = std::nullopt);

/// Column-major superoperator matrices (vec(A rho B) = (B^T (x) A) vec(rho)).
Matrix dissipator_superop(const Matrix& a);

struct PopulationStep {
  RealVector p;
  double clipped_mass = 0.0;
};

/// p_i += 2 sqrt(2 gamma aleph) { dw_i (p_i - p_i^2) - p_i sum_{j != i} p_j dw_j },
/// then negative entries are clipped and p is renormalized.
PopulationStep population_sde_step(const RealVector& p, double gamma, double dt, const RealVector& dws,
                                   std::optional<double> aleph_value = std::nullopt);

/// Noise-averaged d ln(Delta)/dt with Delta = 1 - p_0, p_0 the largest population:
/// -4 gamma aleph [(p0 - p0^2)^2 + p0^2 sum_{j != 0} p_j^2] / (1 - p0)^2.
double log_infidelity_rate(const RealVector& p, double gamma, std::optional<double> aleph_value = std::nullopt);

struct RateBounds {
  enum class Context { LogInfidelity, Speedup };
  double lower;
  double upper;
  Context context;
};

/// |d ln Delta / dt| as Delta -> 0 for the flat (lower) and two-level (upper) profiles.
RateBounds log_infidelity_rate_bounds(int dim, double gamma);

/// D^2 (D + 1) / (12 (D - 1)) <= S <= D (D + 1) / 6
RateBounds measurement_speedup_bounds(int dim);

/// 2D / 3
double purification_speedup_asymptote(int dim);

/// 2(D + 1) / 3, the locally optimal feedback value used for comparison.
double feedback_purification_speedup(int dim);

}  // namespace strobe
