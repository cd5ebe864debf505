#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "strobe/ensemble.hpp"
#include "strobe/oracles.hpp"

namespace strobe {

/// Experiment manifest. Stored as flat TOML keys (see README for the schema);
/// command-line flags of the same name override file values.
struct RunConfig {
  int dimension = 4;
  double gamma = 1.0;
  /// 0 picks dt = min(delta_t, 1e-3/gamma), refined so that it divides delta_t.
  double dt = 0.0;
  bool allow_large_dt = false;
  std::vector<double> delta_t{0.01};
  double total_time = 6.0;
  int n_trajectories = 200;
  /// No-control baseline; 0 reuses total_time / n_trajectories.
  double baseline_time = 0.0;
  int baseline_trajectories = 0;
  std::string baseline_sampling = "physical";
  std::vector<std::string> strategies{"HaarRandom"};
  std::vector<double> targets{1e-1, 1e-2, 1e-3};
  std::uint64_t base_seed = 1;
  std::uint64_t control_seed = 7;
  std::string initial_state = "mixed";
  std::string output_dir = "out";
  std::vector<std::string> alternation;
  std::string convention = "image";
  std::string metric = "impurity";
  std::string infidelity_mode = "eigenvalue";
  std::string integrator = "measurement_operator";
  int save_points = 10000;
  bool bootstrap = false;
  int bootstrap_resamples = 200;
  /// Number of trajectory records written per controlled ensemble.
  int records = 0;
  /// Also write each record with dR shifted as for X + lambda I.
  double record_lambda_shift = 0.0;
  int threads = 0;

  std::vector<int> oracle_dims{2, 3, 4};
  std::vector<int> oracle_permutation_dims{2, 3, 4};
  int oracle_inputs = 20;
  std::int64_t oracle_samples = 100000;
  std::int64_t oracle_q_samples = 20000;
  std::int64_t oracle_pairs = 20000;
  std::int64_t oracle_haar_pairs = 40000;
  double oracle_dt = 1e-5;
  double oracle_sigma = 4.0;
  std::uint64_t oracle_seed = 20240601;
  /// Non-zero replaces D(D+1)/12 in the permutation identity (fault injection).
  double aleph_override = 0.0;

  /// Input for the filter command.
  std::string record;

  bool operator==(const RunConfig&) const = default;
};

struct ParsedArgs {
  RunConfig config;
  bool help = false;
  std::string help_text;
};

/// Parse "--config file.toml --key value ..." (program and subcommand names
/// already stripped). Throws ConfigError on unknown keys or bad values.
ParsedArgs parse_args(const std::vector<std::string>& args, const std::string& command = "strobe");

RunConfig load_config(const std::string& path);
RunConfig parse_config_string(const std::string& toml);
std::string to_toml(const RunConfig& cfg);

/// Checks everything that can be checked before a run starts. Throws ConfigError.
void validate(const RunConfig& cfg);

/// Step size for pulse interval delta_t (0: no control).
double resolve_dt(const RunConfig& cfg, double delta_t);

std::vector<Permutation> alternation_list(const RunConfig& cfg);

/// Ensemble for one (strategy, delta_t). `notice` receives the 2-design
/// fallback message when it applies.
EnsembleSpec make_ensemble_spec(const RunConfig& cfg, Strategy strategy, double delta_t, std::string* notice = nullptr);
EnsembleSpec make_baseline_spec(const RunConfig& cfg);

SweepSpec make_sweep_spec(const RunConfig& cfg, std::vector<std::string>* notices = nullptr);

OracleSettings make_oracle_settings(const RunConfig& cfg);

}  // namespace strobe
