#include "strobe/config.hpp"

#include <cmath>
#include <sstream>

#include <CLI11.hpp>

#include "strobe/record_io.hpp"

namespace strobe {

namespace {

void bind(CLI::App& app, RunConfig& c) {
  app.add_option("--dimension", c.dimension, "Hilbert-space dimension D");
  app.add_option("--gamma", c.gamma, "measurement strength");
  app.add_option("--dt", c.dt, "integrator step (0: automatic)");
  app.add_option("--allow_large_dt", c.allow_large_dt, "permit dt > 0.01/gamma");
  app.add_option("--delta_t", c.delta_t, "pulse intervals")->expected(0, CLI::detail::expected_max_vector_size);
  app.add_option("--total_time", c.total_time, "duration of controlled runs");
  app.add_option("--n_trajectories", c.n_trajectories, "trajectories per controlled ensemble");
  app.add_option("--baseline_time", c.baseline_time, "duration of the no-control baseline (0: total_time)");
  app.add_option("--baseline_trajectories", c.baseline_trajectories, "baseline trajectories (0: n_trajectories)");
  app.add_option("--baseline_sampling", c.baseline_sampling, "physical or tilted");
  app.add_option("--strategies", c.strategies, "control strategies")->expected(0, CLI::detail::expected_max_vector_size);
  app.add_option("--targets", c.targets, "impurity levels or ln(Delta) levels")->expected(0, CLI::detail::expected_max_vector_size);
  app.add_option("--base_seed", c.base_seed, "noise seed of trajectory 0");
  app.add_option("--control_seed", c.control_seed, "seed of the pulse sequence");
  app.add_option("--initial_state", c.initial_state, "mixed, plus or basis:k");
  app.add_option("--output_dir", c.output_dir, "directory for CSV output");
  app.add_option("--alternation", c.alternation, "permutation digit strings for DeterministicAlternation")->expected(0, CLI::detail::expected_max_vector_size);
  app.add_option("--convention", c.convention, "image or preimage reading of digit strings");
  app.add_option("--metric", c.metric, "impurity or log_infidelity (sweep only)");
  app.add_option("--infidelity_mode", c.infidelity_mode, "eigenvalue or population (sweep only)");
  app.add_option("--integrator", c.integrator, "measurement_operator or euler_maruyama");
  app.add_option("--save_points", c.save_points, "maximum saved points per curve");
  app.add_option("--bootstrap", c.bootstrap, "bootstrap standard errors over trajectory chunks");
  app.add_option("--bootstrap_resamples", c.bootstrap_resamples, "bootstrap resamples");
  app.add_option("--records", c.records, "trajectory records written per controlled ensemble");
  app.add_option("--record_lambda_shift", c.record_lambda_shift, "extra record copies shifted by lambda");
  app.add_option("--threads", c.threads, "worker threads (0: STROBE_THREADS or all cores)");
  app.add_option("--oracle_dims", c.oracle_dims, "dimensions for the oracle suite")->expected(0, CLI::detail::expected_max_vector_size);
  app.add_option("--oracle_permutation_dims", c.oracle_permutation_dims, "dimensions for the permutation identity")->expected(0, CLI::detail::expected_max_vector_size);
  app.add_option("--oracle_inputs", c.oracle_inputs, "random inputs per dimension");
  app.add_option("--oracle_samples", c.oracle_samples, "Haar samples for the T1 integral");
  app.add_option("--oracle_q_samples", c.oracle_q_samples, "Haar samples for the fourth moment");
  app.add_option("--oracle_pairs", c.oracle_pairs, "antithetic noise pairs for drift oracles");
  app.add_option("--oracle_haar_pairs", c.oracle_haar_pairs, "Haar samples for the averaged drift");
  app.add_option("--oracle_dt", c.oracle_dt, "step for drift oracles");
  app.add_option("--oracle_sigma", c.oracle_sigma, "pass threshold in standard errors");
  app.add_option("--oracle_seed", c.oracle_seed, "oracle seed");
  app.add_option("--aleph_override", c.aleph_override, "replace D(D+1)/12 (fault injection)");
  app.add_option("--record", c.record, "record file for the filter command");
  app.set_config("--config", "", "TOML manifest");
  app.allow_config_extras(false);
}

template <class T>
std::string join(const std::vector<T>& v, bool quote) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_same_v<T, std::string>) {
      s += quote ? "\"" + v[i] + "\"" : v[i];
    } else if constexpr (std::is_floating_point_v<T>) {
      s += format_double(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s + "]";
}

std::string q(const std::string& s) { return "\"" + s + "\""; }

// CLI11 reads "key = []" as a single empty string.
void drop_empty(RunConfig& c) {
  for (auto* v : {&c.strategies, &c.alternation}) std::erase(*v, std::string());
}

}  // namespace

ParsedArgs parse_args(const std::vector<std::string>& args, const std::string& command) {
  ParsedArgs out;
  CLI::App app{"strobe " + command, "strobe " + command};
  bind(app, out.config);
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out.help = true;
    out.help_text = app.help();
    return out;
  } catch (const CLI::ParseError& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }
  drop_empty(out.config);
  validate(out.config);
  return out;
}

RunConfig parse_config_string(const std::string& toml) {
  RunConfig cfg;
  CLI::App app{"strobe"};
  bind(app, cfg);
  std::istringstream is(toml);
  try {
    app.parse_from_stream(is);
  } catch (const CLI::ParseError& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }
  drop_empty(cfg);
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) { return parse_args({"--config", path}).config; }

std::string to_toml(const RunConfig& c) {
  std::ostringstream os;
  os << "dimension = " << c.dimension << "\n"
     << "gamma = " << format_double(c.gamma) << "\n"
     << "dt = " << format_double(c.dt) << "\n"
     << "allow_large_dt = " << (c.allow_large_dt ? "true" : "false") << "\n"
     << "delta_t = " << join(c.delta_t, true) << "\n"
     << "total_time = " << format_double(c.total_time) << "\n"
     << "n_trajectories = " << c.n_trajectories << "\n"
     << "baseline_time = " << format_double(c.baseline_time) << "\n"
     << "baseline_trajectories = " << c.baseline_trajectories << "\n"
     << "baseline_sampling = " << q(c.baseline_sampling) << "\n"
     << "strategies = " << join(c.strategies, true) << "\n"
     << "targets = " << join(c.targets, true) << "\n"
     << "base_seed = " << c.base_seed << "\n"
     << "control_seed = " << c.control_seed << "\n"
     << "initial_state = " << q(c.initial_state) << "\n"
     << "output_dir = " << q(c.output_dir) << "\n"
     << "alternation = " << join(c.alternation, true) << "\n"
     << "convention = " << q(c.convention) << "\n"
     << "metric = " << q(c.metric) << "\n"
     << "infidelity_mode = " << q(c.infidelity_mode) << "\n"
     << "integrator = " << q(c.integrator) << "\n"
     << "save_points = " << c.save_points << "\n"
     << "bootstrap = " << (c.bootstrap ? "true" : "false") << "\n"
     << "bootstrap_resamples = " << c.bootstrap_resamples << "\n"
     << "records = " << c.records << "\n"
     << "record_lambda_shift = " << format_double(c.record_lambda_shift) << "\n"
     << "threads = " << c.threads << "\n"
     << "oracle_dims = " << join(c.oracle_dims, true) << "\n"
     << "oracle_permutation_dims = " << join(c.oracle_permutation_dims, true) << "\n"
     << "oracle_inputs = " << c.oracle_inputs << "\n"
     << "oracle_samples = " << c.oracle_samples << "\n"
     << "oracle_q_samples = " << c.oracle_q_samples << "\n"
     << "oracle_pairs = " << c.oracle_pairs << "\n"
     << "oracle_haar_pairs = " << c.oracle_haar_pairs << "\n"
     << "oracle_dt = " << format_double(c.oracle_dt) << "\n"
     << "oracle_sigma = " << format_double(c.oracle_sigma) << "\n"
     << "oracle_seed = " << c.oracle_seed << "\n"
     << "aleph_override = " << format_double(c.aleph_override) << "\n"
     << "record = " << q(c.record) << "\n";
  return os.str();
}

std::vector<Permutation> alternation_list(const RunConfig& cfg) {
  const PermutationConvention conv = parse_permutation_convention(cfg.convention);
  std::vector<Permutation> out;
  for (const auto& d : cfg.alternation) {
    Permutation p = Permutation::from_digits(d, conv);
    if (p.dim() != cfg.dimension) {
      throw ConfigError("alternation entry '" + d + "' does not have D = " + std::to_string(cfg.dimension) + " digits");
    }
    out.push_back(std::move(p));
  }
  return out;
}

double resolve_dt(const RunConfig& cfg, double delta_t) {
  if (cfg.dt > 0.0) {
    if (delta_t > 0.0) pulse_interval_steps(delta_t, cfg.dt);
    return cfg.dt;
  }
  const double base = cfg.gamma > 0.0 ? 1e-3 / cfg.gamma : 1e-3;
  if (!(delta_t > 0.0)) return base;
  const double dt = std::min(delta_t, base);
  return delta_t / std::ceil(delta_t / dt - 1e-9);
}

void validate(const RunConfig& c) {
  if (c.dimension < 2) throw ConfigError("dimension must be at least 2");
  if (!std::isfinite(c.gamma) || c.gamma < 0.0) throw ConfigError("gamma must be finite and non-negative");
  if (c.dt < 0.0) throw ConfigError("dt must be positive (or 0 for automatic)");
  if (!(c.total_time > 0.0)) throw ConfigError("total_time must be positive");
  if (c.baseline_time < 0.0) throw ConfigError("baseline_time must be non-negative");
  if (c.n_trajectories < 1) throw ConfigError("n_trajectories must be at least 1");
  if (c.baseline_trajectories < 0) throw ConfigError("baseline_trajectories must be non-negative");
  if (c.save_points < 1) throw ConfigError("save_points must be at least 1");
  if (c.records < 0) throw ConfigError("records must be non-negative");
  parse_sampling(c.baseline_sampling);
  parse_metric(c.metric);
  parse_integrator(c.integrator);
  parse_permutation_convention(c.convention);
  if (c.infidelity_mode != "eigenvalue" && c.infidelity_mode != "population") {
    throw ConfigError("infidelity_mode must be eigenvalue or population");
  }
  make_initial_state(c.initial_state, c.dimension);
  bool wants_alternation = false;
  for (const auto& s : c.strategies) {
    const Strategy st = parse_strategy(s);
    if (st == Strategy::NoControl) throw ConfigError("NoControl is the implicit baseline; do not list it");
    wants_alternation = wants_alternation || st == Strategy::DeterministicAlternation;
  }
  if (wants_alternation && c.alternation.empty()) {
    throw ConfigError("DeterministicAlternation requires a non-empty alternation list");
  }
  alternation_list(c);
  if (!c.strategies.empty() && c.delta_t.empty()) throw ConfigError("delta_t list is empty");
  for (double d : c.delta_t) {
    if (!(d > 0.0)) throw ConfigError("delta_t entries must be positive");
    SimParams p{c.gamma, resolve_dt(c, d), c.total_time, c.dimension, c.allow_large_dt};
    p.validate();
  }
  SimParams base{c.gamma, resolve_dt(c, 0.0), c.baseline_time > 0.0 ? c.baseline_time : c.total_time, c.dimension,
                 c.allow_large_dt};
  base.validate();
  for (int d : c.oracle_dims) {
    if (d < 2) throw ConfigError("oracle_dims entries must be at least 2");
  }
  if (c.oracle_inputs < 1 || c.oracle_samples < 2 || c.oracle_pairs < 2 || c.oracle_q_samples < 2 ||
      c.oracle_haar_pairs < 2) {
    throw ConfigError("oracle sample counts must be at least 2");
  }
  if (!(c.oracle_dt > 0.0) || !(c.oracle_sigma > 0.0)) throw ConfigError("oracle_dt and oracle_sigma must be positive");
}

namespace {

EnsembleSpec common_spec(const RunConfig& cfg) {
  EnsembleSpec s;
  s.params.gamma = cfg.gamma;
  s.params.dim = cfg.dimension;
  s.params.allow_large_dt = cfg.allow_large_dt;
  s.initial_state = cfg.initial_state;
  s.base_seed = cfg.base_seed;
  s.threads = cfg.threads;
  s.bootstrap = cfg.bootstrap;
  s.bootstrap_resamples = cfg.bootstrap_resamples;
  s.options.integrator = parse_integrator(cfg.integrator);
  s.options.infidelity_mode =
      cfg.infidelity_mode == "population" ? InfidelityMode::Population : InfidelityMode::Eigenvalue;
  return s;
}

std::int64_t save_every(const SimParams& p, int save_points) {
  const std::int64_t n = p.steps();
  return std::max<std::int64_t>(1, (n + save_points - 1) / save_points);
}

}  // namespace

EnsembleSpec make_ensemble_spec(const RunConfig& cfg, Strategy strategy, double delta_t, std::string* notice) {
  EnsembleSpec s = common_spec(cfg);
  if (strategy == Strategy::TwoDesign && !has_two_design(cfg.dimension)) {
    if (notice) {
      *notice = "no bundled 2-design for D = " + std::to_string(cfg.dimension) + "; using HaarRandom";
    }
    strategy = Strategy::HaarRandom;
  }
  s.schedule.strategy = strategy;
  s.schedule.delta_t = delta_t;
  s.schedule.seed = cfg.control_seed;
  if (strategy == Strategy::DeterministicAlternation) s.schedule.alternation = alternation_list(cfg);
  s.params.dt = resolve_dt(cfg, delta_t);
  s.params.total_time = cfg.total_time;
  s.n_trajectories = cfg.n_trajectories;
  s.options.save_every = save_every(s.params, cfg.save_points);
  return s;
}

EnsembleSpec make_baseline_spec(const RunConfig& cfg) {
  EnsembleSpec s = common_spec(cfg);
  s.params.dt = resolve_dt(cfg, 0.0);
  s.params.total_time = cfg.baseline_time > 0.0 ? cfg.baseline_time : cfg.total_time;
  s.n_trajectories = cfg.baseline_trajectories > 0 ? cfg.baseline_trajectories : cfg.n_trajectories;
  s.options.sampling = parse_sampling(cfg.baseline_sampling);
  s.options.save_every = save_every(s.params, cfg.save_points);
  return s;
}

SweepSpec make_sweep_spec(const RunConfig& cfg, std::vector<std::string>* notices) {
  SweepSpec sw;
  sw.baseline = make_baseline_spec(cfg);
  sw.targets = cfg.targets;
  sw.metric = parse_metric(cfg.metric);
  for (const auto& name : cfg.strategies) {
    const Strategy st = parse_strategy(name);
    for (double d : cfg.delta_t) {
      std::string notice;
      sw.controlled.push_back(make_ensemble_spec(cfg, st, d, &notice));
      if (!notice.empty() && notices) notices->push_back(notice);
    }
  }
  return sw;
}

OracleSettings make_oracle_settings(const RunConfig& cfg) {
  OracleSettings s;
  s.dims = cfg.oracle_dims;
  s.permutation_dims = cfg.oracle_permutation_dims;
  s.inputs = cfg.oracle_inputs;
  s.haar_samples = cfg.oracle_samples;
  s.q_prime_samples = cfg.oracle_q_samples;
  s.drift_pairs = cfg.oracle_pairs;
  s.haar_drift_samples = cfg.oracle_haar_pairs;
  s.drift_dt = cfg.oracle_dt;
  s.sigma = cfg.oracle_sigma;
  s.gamma = cfg.gamma > 0.0 ? cfg.gamma : 1.0;
  s.seed = cfg.oracle_seed;
  if (cfg.aleph_override != 0.0) s.aleph_override = cfg.aleph_override;
  return s;
}

}  // namespace strobe
