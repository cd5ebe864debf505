#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "strobe/control.hpp"
#include "strobe/quantum_core.hpp"

namespace strobe {

/// MeasurementOperator: rho <- M rho M / tr with M = exp(c dw - c^2 dt) built
/// from the centred operator c = sqrt(2 gamma)(X - <X>). Agrees with the SME to
/// O(dt), keeps rho positive and eigenprojectors of X fixed.
/// EulerMaruyama: explicit Euler step of the SME with hermitize + renormalize.
enum class Integrator { MeasurementOperator, EulerMaruyama };

/// Physical: dw ~ N(0, dt). Tilted: importance sampling for rare late-time
/// events (see simulate_trajectory); each trajectory then carries a weight.
enum class Sampling { Physical, Tilted };

std::string to_string(Integrator i);
Integrator parse_integrator(std::string_view s);
std::string to_string(Sampling s);
Sampling parse_sampling(std::string_view s);

struct SimParams {
  double gamma = 1.0;
  double dt = 1e-3;
  double total_time = 1.0;
  int dim = 2;
  /// Permit dt > 0.01 / gamma.
  bool allow_large_dt = false;

  void validate() const;
  std::int64_t steps() const;
};

/// Eigen-decomposition X = V diag(x) V^+ of the monitored observable. When X is
/// exactly diagonal V is the identity and no basis change is performed.
class MeasurementBasis {
 public:
  explicit MeasurementBasis(const Matrix& x);
  /// Basis of U^+ X U from the basis of X without a new eigensolve.
  MeasurementBasis rotated(const Matrix& u) const;
  /// X + lambda I.
  MeasurementBasis shifted(double lambda) const;

  int dim() const { return static_cast<int>(x_.size()); }
  const RealVector& eigenvalues() const { return x_; }
  const Matrix& vectors() const { return v_; }
  bool is_identity() const { return identity_; }

  Matrix to_eigen(const Matrix& rho) const;
  Matrix from_eigen(const Matrix& s) const;

 private:
  MeasurementBasis() = default;
  RealVector x_;
  Matrix v_;
  bool identity_ = false;
};

/// Conditional state in the eigenbasis of X plus the update rule. Online
/// simulation and offline filtering both go through this class, so a record
/// replays with the same floating-point sequence.
class FilterKernel {
 public:
  FilterKernel(const Matrix& rho0, MeasurementBasis basis, double gamma, double dt,
               Integrator integrator);

  /// <X> in the current state.
  double mean_x() const;
  /// dR = sqrt(4 gamma) <X> dt + dw
  double record_increment(double dw) const;
  /// Recover dw = dR - sqrt(4 gamma) <X> dt and step. Returns the dw used.
  double update_from_record(double dR);
  /// One step with innovation dw. Throws IntegratorError on a positivity failure.
  void step(double dw);

  /// rho <- U rho U^+ with U given in the computational basis.
  void apply_unitary(const Matrix& u);
  void apply_permutation(const Permutation& p);

  /// State in the eigenbasis of X.
  const Matrix& state() const { return s_; }
  /// State in the computational basis.
  Matrix lab_state() const { return basis_.from_eigen(s_); }
  const MeasurementBasis& basis() const { return basis_; }

  /// ln tr of the unnormalized state produced by the last step.
  double last_log_norm() const { return last_log_norm_; }

 private:
  void step_measurement_operator(double dw);
  void step_euler(double dw);

  MeasurementBasis basis_;
  Matrix s_;
  double gamma_;
  double dt_;
  double sqrt2g_;
  double sqrt4g_;
  Integrator integrator_;
  double last_log_norm_ = 0.0;
};

struct StepResult {
  DensityMatrix rho;
  double dR;
};

/// One integrator step of the SME for the Hermitian operator Xc.
StepResult sme_step(const DensityMatrix& rho, const Observable& xc, double gamma, double dt, double dw,
                    Integrator integrator = Integrator::MeasurementOperator);
/// Same, for a pre-computed basis (Xc need not be traceless).
StepResult sme_step(const DensityMatrix& rho, const MeasurementBasis& basis, double gamma, double dt,
                    double dw, Integrator integrator = Integrator::MeasurementOperator);

struct ControlLogEntry {
  std::int64_t step = 0;
  std::uint64_t id = 0;
  bool operator==(const ControlLogEntry&) const = default;
};

/// Everything needed to replay a trajectory offline.
struct MeasurementRecord {
  SimParams params;
  std::uint64_t seed = 0;
  ControlSchedule schedule;
  PermutationConvention convention = PermutationConvention::Image;
  Integrator integrator = Integrator::MeasurementOperator;
  std::string observable = "jz";
  std::string initial_state = "mixed";
  /// The increments were produced with X + lambda_shift I.
  double lambda_shift = 0.0;
  std::vector<double> increments;
  std::vector<ControlLogEntry> control_log;
  std::optional<std::uint64_t> final_state_hash;
  std::optional<Matrix> final_state;

  /// Length and ordering checks. Throws RecordCorrupt.
  void validate() const;
};

/// FNV-1a over the IEEE-754 bytes of the entries (column-major, re then im).
std::uint64_t state_hash(const Matrix& m);

struct TrajectoryOptions {
  Integrator integrator = Integrator::MeasurementOperator;
  Sampling sampling = Sampling::Physical;
  InfidelityMode infidelity_mode = InfidelityMode::Eigenvalue;
  /// Save every k-th step; 0 picks k so that at most 10^4 + 1 points are kept.
  std::int64_t save_every = 0;
  bool keep_record = false;
};

struct TrajectoryResult {
  std::vector<double> times;
  std::vector<double> impurity_series;
  std::vector<double> log_infidelity_series;
  /// ln of the importance weight at each saved time (Tilted sampling only).
  std::vector<double> log_weight_series;
  /// rho(T) with the controls folded into the observable: U(T)^+ sigma U(T).
  DensityMatrix final_state;
  /// sigma(T): the state in the frame where X itself is measured.
  Matrix lab_state;
  /// U(T) = U_q ... U_1
  Matrix control_product;
  MeasurementRecord record;
};

std::int64_t pulse_interval_steps(double delta_t, double dt);
std::int64_t default_save_every(std::int64_t steps);

/// One trajectory. Pulse q is applied at step q * (delta_t / dt) for q >= 1,
/// between the step ending there and the next one; saved samples are taken
/// before the pulse. Noise comes from mt19937_64(seed).
///
/// Tilted sampling: with probability 1/2 the trajectory draws its record from
/// the measurement model itself, otherwise from a constant-drift record whose
/// drift sits halfway between two adjacent eigenvalues of X. The weight is the
/// likelihood ratio against the equal mixture of these proposals, so weighted
/// averages estimate physical expectations.
TrajectoryResult simulate_trajectory(const DensityMatrix& rho0, const Observable& x,
                                     const ControlSchedule& schedule, const SimParams& params,
                                     std::uint64_t seed, const TrajectoryOptions& options = {});

/// Offline replay of a record. Throws RecordCorrupt when the control log does
/// not match the schedule.
DensityMatrix filter_record(const DensityMatrix& rho0, const Observable& x, const MeasurementRecord& record);

struct LambdaShiftReport {
  /// max over steps of max |rho_lambda - rho| elementwise
  double max_state_diff = 0.0;
  /// max over steps of |(dR_lambda - dR) - sqrt(4 gamma) lambda dt|
  double max_record_error = 0.0;
};

/// Run X and X + lambda I side by side on identical dw.
LambdaShiftReport lambda_shift_check(const DensityMatrix& rho0, const Observable& x, double lambda,
                                     std::uint64_t seed, const SimParams& params,
                                     const ControlSchedule& schedule = {},
                                     Integrator integrator = Integrator::MeasurementOperator);

/// Initial-state spec: "mixed", "basis:k", "plus" (uniform superposition).
DensityMatrix make_initial_state(const std::string& spec, int dim);

}  // namespace strobe
