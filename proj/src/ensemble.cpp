#include "strobe/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "strobe/random.hpp"
#include "strobe/record_io.hpp"
#include "strobe/stats.hpp"

namespace strobe {

namespace {

constexpr int kChunk = 64;

struct ChunkResult {
  std::vector<RunningStats> impurity;
  std::vector<RunningStats> log_infidelity;
  std::vector<double> times;
  int excluded = 0;
  std::string first_error;
  std::exception_ptr failure;
};

std::string short_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::string to_string(Metric m) { return m == Metric::Impurity ? "impurity" : "log_infidelity"; }

Metric parse_metric(std::string_view s) {
  std::string n;
  for (char c : s) {
    if (c != '_' && c != '-') n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (n == "impurity") return Metric::Impurity;
  if (n == "loginfidelity") return Metric::LogInfidelity;
  throw ConfigError("unknown metric '" + std::string(s) + "'");
}

std::string strategy_label(const ControlSchedule& schedule) {
  if (schedule.strategy == Strategy::NoControl) return to_string(schedule.strategy);
  return to_string(schedule.strategy) + "@" + short_double(schedule.delta_t);
}

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("STROBE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

EnsembleStats run_ensemble(const EnsembleSpec& spec) {
  if (spec.n_trajectories < 1) throw ConfigError("n_trajectories must be at least 1");
  spec.params.validate();
  spec.schedule.validate(spec.params.dim);
  if (spec.schedule.strategy != Strategy::NoControl) pulse_interval_steps(spec.schedule.delta_t, spec.params.dt);
  const DensityMatrix rho0 = make_initial_state(spec.initial_state, spec.params.dim);
  const Observable x = jz_operator(spec.params.dim);
  const bool weighted = spec.options.sampling == Sampling::Tilted;

  const int n = spec.n_trajectories;
  const int n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<ChunkResult> chunks(static_cast<std::size_t>(n_chunks));
  std::atomic<int> next{0};

  auto worker = [&]() {
    for (int c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) {
      ChunkResult& out = chunks[static_cast<std::size_t>(c)];
      const int lo = c * kChunk;
      const int hi = std::min(n, lo + kChunk);
      for (int i = lo; i < hi; ++i) {
        try {
          const TrajectoryResult r = simulate_trajectory(rho0, x, spec.schedule, spec.params,
                                                         spec.base_seed + static_cast<std::uint64_t>(i), spec.options);
          if (out.times.empty()) {
            out.times = r.times;
            out.impurity.resize(r.times.size());
            out.log_infidelity.resize(r.times.size());
          }
          for (std::size_t k = 0; k < r.times.size(); ++k) {
            const double w = weighted ? std::exp(r.log_weight_series[k]) : 1.0;
            out.impurity[k].add(w * r.impurity_series[k]);
            out.log_infidelity[k].add(w * r.log_infidelity_series[k]);
          }
        } catch (const IntegratorError& e) {
          if (out.excluded++ == 0) out.first_error = e.what();
        } catch (...) {
          out.failure = std::current_exception();
          return;
        }
      }
    }
  };

  const int n_threads = std::min(resolve_thread_count(spec.threads), n_chunks);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  EnsembleStats st;
  st.strategy = strategy_label(spec.schedule);
  st.delta_t = spec.schedule.strategy == Strategy::NoControl ? 0.0 : spec.schedule.delta_t;
  st.params = spec.params;
  st.sampling = spec.options.sampling;
  for (const auto& c : chunks) {
    if (c.failure) std::rethrow_exception(c.failure);
  }
  std::vector<RunningStats> imp, lnd;
  std::string first_error;
  for (const auto& c : chunks) {
    st.n_excluded += c.excluded;
    if (first_error.empty()) first_error = c.first_error;
    if (c.times.empty()) continue;
    if (st.times.empty()) {
      st.times = c.times;
      imp.resize(c.times.size());
      lnd.resize(c.times.size());
    }
    for (std::size_t k = 0; k < imp.size(); ++k) {
      imp[k].merge(c.impurity[k]);
      lnd[k].merge(c.log_infidelity[k]);
    }
  }
  if (st.n_excluded * 100 > n) {
    throw IntegratorError(std::to_string(st.n_excluded) + " of " + std::to_string(n) +
                          " trajectories excluded (first: " + first_error + ")");
  }
  st.n_trajectories = n - st.n_excluded;
  for (std::size_t k = 0; k < imp.size(); ++k) {
    st.mean_impurity.push_back(imp[k].mean);
    st.se_impurity.push_back(imp[k].stderr_mean());
    st.mean_log_infidelity.push_back(lnd[k].mean);
    st.se_log_infidelity.push_back(lnd[k].stderr_mean());
  }

  if (spec.bootstrap && n_chunks > 1) {
    Rng rng = make_rng(spec.base_seed, Stream::Sampling, 0xb007);
    std::uniform_int_distribution<int> pick(0, n_chunks - 1);
    std::vector<RunningStats> boot_imp(imp.size()), boot_lnd(imp.size());
    for (int b = 0; b < spec.bootstrap_resamples; ++b) {
      std::vector<RunningStats> ri(imp.size()), rl(imp.size());
      for (int c = 0; c < n_chunks; ++c) {
        const ChunkResult& ch = chunks[static_cast<std::size_t>(pick(rng))];
        if (ch.times.empty()) continue;
        for (std::size_t k = 0; k < imp.size(); ++k) {
          ri[k].merge(ch.impurity[k]);
          rl[k].merge(ch.log_infidelity[k]);
        }
      }
      for (std::size_t k = 0; k < imp.size(); ++k) {
        boot_imp[k].add(ri[k].mean);
        boot_lnd[k].add(rl[k].mean);
      }
    }
    for (std::size_t k = 0; k < imp.size(); ++k) {
      st.se_impurity[k] = std::sqrt(boot_imp[k].variance());
      st.se_log_infidelity[k] = std::sqrt(boot_lnd[k].variance());
    }
  }
  return st;
}

Crossing crossing_time(const std::vector<double>& times, const std::vector<double>& values,
                       const std::vector<double>& stderrs, double target, bool log_mode) {
  const std::size_t n = times.size();
  if (values.size() != n || stderrs.size() != n) throw InvalidDimension("crossing_time: series lengths differ");
  if (n == 0) throw NoCrossing("crossing_time: empty curve");
  if (log_mode && !(target > 0.0)) throw NoCrossing("crossing_time: log mode needs a positive target");
  auto f = [&](std::size_t i) { return log_mode ? std::log(values[i]) : values[i]; };
  auto sf = [&](std::size_t i) { return log_mode ? stderrs[i] / values[i] : stderrs[i]; };
  const double ft = log_mode ? std::log(target) : target;
  if (!(values[0] >= target)) throw NoCrossing("crossing_time: curve starts below the target");
  if (values[0] == target) return {times[0], sf(0)};
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (values[i] > target && values[i + 1] <= target) {
      if (log_mode && !(values[i + 1] > 0.0)) {
        return {times[i + 1], 0.0};
      }
      const double fa = f(i), fb = f(i + 1);
      const double h = times[i + 1] - times[i];
      const double w = (fa - ft) / (fa - fb);
      // Adjacent means on a dense grid differ by little more than their
      // noise, so the slope is fitted over about 1% of the curve.
      const std::size_t m = (n - 1) / 100;
      const std::size_t lo = i >= m ? i - m : 0, hi = std::min(n - 1, i + 1 + m);
      double st = 0.0, sv = 0.0;
      for (std::size_t k = lo; k <= hi; ++k) {
        st += times[k];
        sv += f(k);
      }
      const double tm = st / static_cast<double>(hi - lo + 1), vm = sv / static_cast<double>(hi - lo + 1);
      double stt = 0.0, stv = 0.0;
      for (std::size_t k = lo; k <= hi; ++k) {
        stt += (times[k] - tm) * (times[k] - tm);
        stv += (times[k] - tm) * (f(k) - vm);
      }
      double slope = stv / stt;
      if (!(slope * (fb - fa) > 0.0)) slope = (fb - fa) / h;
      const double sigma = (1.0 - w) * sf(i) + w * sf(i + 1);
      return {times[i] + w * h, sigma / std::abs(slope)};
    }
  }
  throw NoCrossing("curve never reaches " + format_double(target) + " before t = " + format_double(times.back()));
}

SpeedupEstimate speedup(const EnsembleStats& no_control, const EnsembleStats& controlled, double target,
                        Metric metric) {
  if (no_control.params.dim != controlled.params.dim || no_control.params.gamma != controlled.params.gamma) {
    throw ConfigError("speedup: ensembles differ in D or gamma");
  }
  const bool imp = metric == Metric::Impurity;
  const Crossing a = imp ? crossing_time(no_control.times, no_control.mean_impurity, no_control.se_impurity, target, true)
                         : crossing_time(no_control.times, no_control.mean_log_infidelity,
                                         no_control.se_log_infidelity, target, false);
  const Crossing b = imp ? crossing_time(controlled.times, controlled.mean_impurity, controlled.se_impurity, target, true)
                         : crossing_time(controlled.times, controlled.mean_log_infidelity,
                                         controlled.se_log_infidelity, target, false);
  SpeedupEstimate s;
  s.target_level = target;
  s.t_no_control = a.time;
  s.t_no_control_se = a.stderr;
  s.t_control = b.time;
  s.t_control_se = b.stderr;
  if (!(b.time > 0.0) || !(a.time > 0.0)) throw NoCrossing("speedup: crossing at t = 0");
  s.speedup = a.time / b.time;
  s.stderr = s.speedup * std::hypot(a.stderr / a.time, b.stderr / b.time);
  return s;
}

SweepResult sweep(const SweepSpec& spec) {
  SweepResult res;
  if (spec.controlled.empty()) return res;
  res.baseline = run_ensemble(spec.baseline);
  for (const auto& c : spec.controlled) {
    res.controlled.push_back(run_ensemble(c));
    const EnsembleStats& st = res.controlled.back();
    for (double target : spec.targets) {
      try {
        res.rows.push_back({st.strategy, st.delta_t, speedup(res.baseline, st, target, spec.metric)});
      } catch (const NoCrossing& e) {
        res.notices.push_back(st.strategy + " target " + format_double(target) + ": " + e.what());
      }
    }
  }
  return res;
}

void write_curves_csv(const std::string& path, const std::vector<EnsembleStats>& curves) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os << "strategy,time,mean_L,se_L,mean_lnDelta,se_lnDelta\n";
  for (const auto& c : curves) {
    for (std::size_t k = 0; k < c.times.size(); ++k) {
      os << c.strategy << "," << format_double(c.times[k]) << "," << format_double(c.mean_impurity[k]) << ","
         << format_double(c.se_impurity[k]) << "," << format_double(c.mean_log_infidelity[k]) << ","
         << format_double(c.se_log_infidelity[k]) << "\n";
    }
  }
  if (!os) throw ConfigError("write to '" + path + "' failed");
}

void write_speedups_csv(const std::string& path, const std::vector<SpeedupRow>& rows) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os << "strategy,delta_t,target,speedup,stderr\n";
  for (const auto& r : rows) {
    os << r.strategy << "," << format_double(r.delta_t) << "," << format_double(r.estimate.target_level) << ","
       << format_double(r.estimate.speedup) << "," << format_double(r.estimate.stderr) << "\n";
  }
  if (!os) throw ConfigError("write to '" + path + "' failed");
}

double fitted_slope(const std::vector<double>& times, const std::vector<double>& values, double t_lo, double t_hi) {
  double n = 0.0, st = 0.0, sv = 0.0, stt = 0.0, stv = 0.0;
  for (std::size_t i = 0; i < times.size() && i < values.size(); ++i) {
    if (times[i] < t_lo || times[i] > t_hi) continue;
    n += 1.0;
    st += times[i];
    sv += values[i];
    stt += times[i] * times[i];
    stv += times[i] * values[i];
  }
  const double den = n * stt - st * st;
  if (n < 2.0 || den == 0.0) throw NoCrossing("fitted_slope: fewer than two points in the window");
  return (n * stv - st * sv) / den;
}

}  // namespace strobe
