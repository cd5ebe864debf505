// strobe: command-line driver. Exit codes: 0 ok, 1 configuration, 2 runtime, 3 oracle/verification failure.
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "strobe/config.hpp"
#include "strobe/ensemble.hpp"
#include "strobe/oracles.hpp"
#include "strobe/record_io.hpp"

namespace fs = std::filesystem;
using namespace strobe;

namespace {

constexpr int kOk = 0;
constexpr int kConfig = 1;
constexpr int kRuntime = 2;
constexpr int kOracle = 3;

const char* kUsage =
    "usage: strobe <purify|measure|sweep|oracle|filter> [--config file.toml] [--key value ...]\n"
    "       strobe <command> --help\n";

std::string file_label(std::string s) {
  for (char& c : s) {
    if (c == '@') c = '_';
  }
  return s;
}

void write_records(const RunConfig& cfg, const SweepSpec& sw) {
  if (cfg.records <= 0) return;
  const fs::path dir = fs::path(cfg.output_dir) / "records";
  fs::create_directories(dir);
  const Observable x = jz_operator(cfg.dimension);
  const DensityMatrix rho0 = make_initial_state(cfg.initial_state, cfg.dimension);
  for (const auto& spec : sw.controlled) {
    TrajectoryOptions opt = spec.options;
    opt.keep_record = true;
    for (int i = 0; i < cfg.records; ++i) {
      const auto seed = spec.base_seed + static_cast<std::uint64_t>(i);
      TrajectoryResult r = simulate_trajectory(rho0, x, spec.schedule, spec.params, seed, opt);
      r.record.initial_state = cfg.initial_state;
      r.record.convention = parse_permutation_convention(cfg.convention);
      const std::string stem = file_label(strategy_label(spec.schedule)) + "_" + std::to_string(i);
      write_record((dir / (stem + ".csv")).string(), r.record);
      if (cfg.record_lambda_shift != 0.0) {
        write_record((dir / (stem + "_shifted.csv")).string(), shift_record(r.record, cfg.record_lambda_shift));
      }
    }
  }
}

int run_sweep(RunConfig cfg, const char* metric, const char* mode) {
  if (metric) cfg.metric = metric;
  if (mode) cfg.infidelity_mode = mode;
  validate(cfg);
  std::vector<std::string> notices;
  const SweepSpec sw = make_sweep_spec(cfg, &notices);
  for (const auto& n : notices) std::cerr << "notice: " << n << "\n";

  SweepResult res = sweep(sw);
  for (const auto& n : res.notices) std::cerr << "notice: " << n << "\n";

  fs::create_directories(cfg.output_dir);
  std::vector<EnsembleStats> curves;
  if (!res.controlled.empty()) curves.push_back(res.baseline);
  curves.insert(curves.end(), res.controlled.begin(), res.controlled.end());
  write_curves_csv((fs::path(cfg.output_dir) / "curves.csv").string(), curves);
  write_speedups_csv((fs::path(cfg.output_dir) / "speedups.csv").string(), res.rows);
  {
    std::ofstream os(fs::path(cfg.output_dir) / "config.toml");
    os << to_toml(cfg);
  }
  write_records(cfg, sw);

  std::cout << std::left << std::setw(34) << "strategy" << std::setw(14) << "target" << std::setw(12) << "speedup"
            << "stderr\n";
  for (const auto& r : res.rows) {
    std::cout << std::setw(34) << r.strategy << std::setw(14) << r.estimate.target_level << std::setw(12)
              << r.estimate.speedup << r.estimate.stderr << "\n";
  }
  return kOk;
}

int run_oracle(const RunConfig& cfg) {
  const std::vector<OracleRow> rows = run_oracle_suite(make_oracle_settings(cfg));
  fs::create_directories(cfg.output_dir);
  write_oracle_csv((fs::path(cfg.output_dir) / "oracle.csv").string(), rows);
  write_oracle_json((fs::path(cfg.output_dir) / "oracle.json").string(), rows);
  int failed = 0;
  for (const auto& r : rows) {
    if (!r.pass) {
      ++failed;
      std::cout << "FAIL " << r.name << ": closed " << format_double(r.closed_form) << " vs "
                << format_double(r.mc_mean) << " (se " << format_double(r.mc_stderr) << ")\n";
    }
  }
  std::cout << rows.size() - static_cast<std::size_t>(failed) << "/" << rows.size() << " oracle checks passed\n";
  return failed == 0 ? kOk : kOracle;
}

int run_filter(const RunConfig& cfg) {
  if (cfg.record.empty()) throw ConfigError("filter needs --record <file>");
  const MeasurementRecord rec = read_record(cfg.record);
  if (rec.observable != "jz") throw ConfigError("filter supports observable=jz only, record has '" + rec.observable + "'");
  const DensityMatrix rho0 = make_initial_state(rec.initial_state, rec.params.dim);
  const DensityMatrix out = filter_record(rho0, jz_operator(rec.params.dim), rec);

  fs::create_directories(cfg.output_dir);
  std::ofstream os(fs::path(cfg.output_dir) / "filtered_state.csv");
  const Infidelity inf = infidelity(out, InfidelityMode::Eigenvalue);
  os << "key,value\n";
  os << "impurity," << format_double(impurity(out)) << "\n";
  os << "infidelity," << format_double(inf.delta) << "\n";
  os << "infidelity_index," << inf.index << "\n";
  os << "state_hash," << state_hash(out.matrix()) << "\n";
  for (Eigen::Index j = 0; j < out.matrix().cols(); ++j) {
    for (Eigen::Index i = 0; i < out.matrix().rows(); ++i) {
      os << "rho_" << i << "_" << j << "," << format_double(out.matrix()(i, j).real()) << "+"
         << format_double(out.matrix()(i, j).imag()) << "i\n";
    }
  }

  bool ok = true;
  if (rec.lambda_shift == 0.0 && rec.final_state_hash) {
    ok = state_hash(out.matrix()) == *rec.final_state_hash;
    std::cout << "hash check: " << (ok ? "match" : "MISMATCH") << "\n";
  } else if (rec.final_state) {
    const double diff = (out.matrix() - *rec.final_state).cwiseAbs().maxCoeff();
    ok = diff <= 1e-12;
    std::cout << "stored-state check (lambda = " << rec.lambda_shift << "): max diff " << diff << "\n";
  }
  std::cout << "impurity " << format_double(impurity(out)) << ", infidelity " << format_double(inf.delta) << "\n";
  return ok ? kOk : kOracle;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << kUsage;
    return kConfig;
  }
  const std::string cmd = argv[1];
  const std::vector<std::string> args(argv + 2, argv + argc);
  try {
    if (cmd != "purify" && cmd != "measure" && cmd != "sweep" && cmd != "oracle" && cmd != "filter") {
      if (cmd == "--help" || cmd == "-h") {
        std::cout << kUsage;
        return kOk;
      }
      std::cerr << "unknown command '" << cmd << "'\n" << kUsage;
      return kConfig;
    }
    const ParsedArgs parsed = parse_args(args, cmd);
    if (parsed.help) {
      std::cout << parsed.help_text;
      return kOk;
    }
    const RunConfig& cfg = parsed.config;
    if (cmd == "purify") return run_sweep(cfg, "impurity", "eigenvalue");
    if (cmd == "measure") return run_sweep(cfg, "log_infidelity", "population");
    if (cmd == "sweep") return run_sweep(cfg, nullptr, nullptr);
    if (cmd == "oracle") return run_oracle(cfg);
    return run_filter(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const InvalidDimension& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const UnsupportedDesign& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const Refused& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
