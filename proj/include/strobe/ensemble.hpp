#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "strobe/sme_engine.hpp"

namespace strobe {

enum class Metric { Impurity, LogInfidelity };

std::string to_string(Metric m);
Metric parse_metric(std::string_view s);

struct EnsembleSpec {
  SimParams params;
  ControlSchedule schedule;
  std::string initial_state = "mixed";
  int n_trajectories = 100;
  /// Trajectory i uses noise seed base_seed + i.
  std::uint64_t base_seed = 1;
  TrajectoryOptions options;
  /// 0: STROBE_THREADS, else hardware concurrency.
  int threads = 0;
  /// Replace trajectory-level standard errors by a bootstrap over chunks.
  bool bootstrap = false;
  int bootstrap_resamples = 200;
};

struct EnsembleStats {
  std::string strategy;
  double delta_t = 0.0;
  SimParams params;
  Sampling sampling = Sampling::Physical;
  std::vector<double> times;
  std::vector<double> mean_impurity;
  std::vector<double> se_impurity;
  std::vector<double> mean_log_infidelity;
  std::vector<double> se_log_infidelity;
  int n_trajectories = 0;
  int n_excluded = 0;
};

/// Label used in CSV output: "NoControl" or "<Strategy>@<delta_t>".
std::string strategy_label(const ControlSchedule& schedule);

/// Trajectories are grouped in fixed chunks of 64 indices; each chunk is
/// reduced with Welford updates and the chunks are merged in index order, so
/// the result does not depend on the thread count. Under tilted sampling the
/// means are of weight * value. Trajectories whose integrator fails are
/// excluded; more than 1% exclusions throws IntegratorError.
EnsembleStats run_ensemble(const EnsembleSpec& spec);

int resolve_thread_count(int requested);

struct Crossing {
  double time;
  double stderr;
};

/// First downward crossing of `target`. In log mode the interpolation is
/// linear in (t, ln value). The standard error is the interpolated curve
/// error divided by the local slope. Throws NoCrossing.
Crossing crossing_time(const std::vector<double>& times, const std::vector<double>& values,
                       const std::vector<double>& stderrs, double target, bool log_mode);

struct SpeedupEstimate {
  double target_level = 0.0;
  double t_no_control = 0.0;
  double t_no_control_se = 0.0;
  double t_control = 0.0;
  double t_control_se = 0.0;
  double speedup = 0.0;
  double stderr = 0.0;
};

/// Ratio of crossing times of the ensemble means. Impurity targets are levels
/// of <L>; log-infidelity targets are levels of <ln Delta>.
SpeedupEstimate speedup(const EnsembleStats& no_control, const EnsembleStats& controlled, double target,
                        Metric metric);

struct SpeedupRow {
  std::string strategy;
  double delta_t = 0.0;
  SpeedupEstimate estimate;
};

struct SweepSpec {
  EnsembleSpec baseline;
  std::vector<EnsembleSpec> controlled;
  std::vector<double> targets;
  Metric metric = Metric::Impurity;
};

struct SweepResult {
  EnsembleStats baseline;
  std::vector<EnsembleStats> controlled;
  std::vector<SpeedupRow> rows;
  /// Targets skipped because a curve never reached them.
  std::vector<std::string> notices;
};

/// Baseline once, then every controlled ensemble, then one row per
/// (ensemble, target) that both curves reach.
SweepResult sweep(const SweepSpec& spec);

void write_curves_csv(const std::string& path, const std::vector<EnsembleStats>& curves);
void write_speedups_csv(const std::string& path, const std::vector<SpeedupRow>& rows);

/// Least-squares slope of values against times over [t_lo, t_hi].
double fitted_slope(const std::vector<double>& times, const std::vector<double>& values, double t_lo, double t_hi);

}  // namespace strobe
