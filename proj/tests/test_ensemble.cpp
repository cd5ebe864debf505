#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "strobe/ensemble.hpp"

using namespace strobe;
namespace fs = std::filesystem;

namespace {

EnsembleSpec small_spec(Strategy s, int n, std::uint64_t seed = 5) {
  EnsembleSpec e;
  e.params = {1.0, 1e-3, 1.0, 3, false};
  e.schedule.strategy = s;
  e.schedule.delta_t = s == Strategy::NoControl ? 0.0 : 0.01;
  e.schedule.seed = 11;
  e.n_trajectories = n;
  e.base_seed = seed;
  e.options.save_every = 10;
  return e;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("strobe_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("strategy labels") {
  ControlSchedule none;
  CHECK(strategy_label(none) == "NoControl");
  ControlSchedule haar;
  haar.strategy = Strategy::HaarRandom;
  haar.delta_t = 0.01;
  CHECK(strategy_label(haar) == "HaarRandom@0.01");
}

TEST_CASE("crossing_time on an exact exponential") {
  std::vector<double> t, v, se;
  for (int i = 0; i <= 500; ++i) {
    t.push_back(0.01 * i);
    v.push_back(std::exp(-t.back()));
    se.push_back(0.0);
  }
  const Crossing c = crossing_time(t, v, se, std::exp(-2.0), true);
  CHECK(std::abs(c.time - 2.0) < 1e-3);
  CHECK(c.stderr == 0.0);
  CHECK(std::abs(crossing_time(t, v, se, std::exp(-2.0), false).time - 2.0) < 1e-3);
  CHECK_THROWS_AS(crossing_time(t, v, se, 1.5, true), NoCrossing);
  CHECK_THROWS_AS(crossing_time(t, v, se, 1e-9, true), NoCrossing);
}

TEST_CASE("crossing_time error band is calibrated on synthetic data") {
  Rng rng = make_rng(41, Stream::Sampling);
  std::normal_distribution<double> n(0.0, 1.0);
  const double sigma = 0.02;
  int inside = 0;
  for (int r = 0; r < 100; ++r) {
    std::vector<double> t, v, se;
    for (int i = 0; i <= 50; ++i) {
      t.push_back(0.1 * i);
      const double truth = std::exp(-1.0 * t.back());
      v.push_back(truth * (1.0 + sigma * n(rng)));
      se.push_back(sigma * truth);
    }
    const Crossing c = crossing_time(t, v, se, std::exp(-2.03), true);
    if (std::abs(c.time - 2.03) <= 1.96 * c.stderr) ++inside;
  }
  CHECK(inside >= 95);
}

TEST_CASE("crossing_time error uses a stable slope on dense curves") {
  Rng rng = make_rng(43, Stream::Sampling);
  std::normal_distribution<double> n(0.0, 1.0);
  const double se = 0.05;
  int inside = 0;
  for (int r = 0; r < 100; ++r) {
    std::vector<double> t, v, s;
    for (int i = 0; i <= 4000; ++i) {
      t.push_back(1e-3 * i);
      v.push_back(-10.0 * t.back() + se * n(rng));
      s.push_back(se);
    }
    const Crossing c = crossing_time(t, v, s, -20.0, false);
    CHECK(c.stderr == doctest::Approx(se / 10.0).epsilon(0.1));
    if (std::abs(c.time - 2.0) <= 1.96 * c.stderr) ++inside;
  }
  CHECK(inside >= 90);
}

TEST_CASE("fitted_slope") {
  std::vector<double> t, v;
  for (int i = 0; i < 100; ++i) {
    t.push_back(0.1 * i);
    v.push_back(3.0 - 2.5 * t.back());
  }
  CHECK(fitted_slope(t, v, 2.0, 8.0) == doctest::Approx(-2.5));
  CHECK_THROWS_AS(fitted_slope(t, v, 20.0, 30.0), NoCrossing);
}

TEST_CASE("single-trajectory ensemble equals the trajectory") {
  const EnsembleSpec e = small_spec(Strategy::HaarRandom, 1);
  const EnsembleStats s = run_ensemble(e);
  TrajectoryOptions opt = e.options;
  const TrajectoryResult r = simulate_trajectory(DensityMatrix::maximally_mixed(3), jz_operator(3), e.schedule,
                                                 e.params, e.base_seed, opt);
  CHECK(s.n_trajectories == 1);
  CHECK(s.mean_impurity == r.impurity_series);
  CHECK(s.mean_log_infidelity == r.log_infidelity_series);
  for (double x : s.se_impurity) CHECK(x == 0.0);
}

TEST_CASE("ensembles are independent of the thread count") {
  EnsembleSpec e = small_spec(Strategy::RandomPermutation, 150);
  e.threads = 1;
  const EnsembleStats a = run_ensemble(e);
  e.threads = 3;
  const EnsembleStats b = run_ensemble(e);
  CHECK(a.mean_impurity == b.mean_impurity);
  CHECK(a.se_impurity == b.se_impurity);
  CHECK(a.mean_log_infidelity == b.mean_log_infidelity);
}

TEST_CASE("speed-up of an ensemble against itself is one") {
  EnsembleSpec e = small_spec(Strategy::NoControl, 50);
  e.params.total_time = 3.0;
  const EnsembleStats s = run_ensemble(e);
  for (double target : {0.3, 0.1}) {
    const SpeedupEstimate est = speedup(s, s, target, Metric::Impurity);
    CHECK(est.speedup == 1.0);
    CHECK(est.t_control == est.t_no_control);
  }
  const SpeedupEstimate ln = speedup(s, s, -2.0, Metric::LogInfidelity);
  CHECK(ln.speedup == 1.0);
}

TEST_CASE("tilted sampling is unbiased") {
  EnsembleSpec phys = small_spec(Strategy::NoControl, 4000, 900);
  phys.params.dim = 4;
  phys.params.total_time = 2.0;
  phys.options.save_every = 500;
  EnsembleSpec tilt = phys;
  tilt.options.sampling = Sampling::Tilted;
  tilt.base_seed = 90000;
  const EnsembleStats a = run_ensemble(phys);
  const EnsembleStats b = run_ensemble(tilt);
  REQUIRE(a.times == b.times);
  for (std::size_t k = 1; k < a.times.size(); ++k) {
    CHECK(std::abs(a.mean_impurity[k] - b.mean_impurity[k]) <= 4.0 * std::hypot(a.se_impurity[k], b.se_impurity[k]));
    CHECK(std::abs(a.mean_log_infidelity[k] - b.mean_log_infidelity[k]) <=
          4.0 * std::hypot(a.se_log_infidelity[k], b.se_log_infidelity[k]));
  }
}

TEST_CASE("bootstrap errors are finite and positive") {
  EnsembleSpec e = small_spec(Strategy::HaarRandom, 256);
  e.bootstrap = true;
  e.bootstrap_resamples = 50;
  const EnsembleStats s = run_ensemble(e);
  for (std::size_t k = 1; k < s.times.size(); ++k) {
    CHECK(std::isfinite(s.se_impurity[k]));
    CHECK(s.se_impurity[k] > 0.0);
  }
}

TEST_CASE("sweep and CSV output") {
  SweepSpec sw;
  sw.baseline = small_spec(Strategy::NoControl, 40);
  sw.baseline.params.total_time = 3.0;
  sw.targets = {0.3, 0.1, 1e-30};
  sw.controlled = {small_spec(Strategy::HaarRandom, 40), small_spec(Strategy::RandomPermutation, 40)};
  for (auto& c : sw.controlled) c.params.total_time = 3.0;
  const SweepResult r = sweep(sw);
  CHECK(r.controlled.size() == 2);
  CHECK(r.rows.size() == 4);
  CHECK(r.notices.size() == 2);
  for (const auto& row : r.rows) CHECK(row.estimate.speedup > 0.0);

  const fs::path dir = temp_dir("sweep");
  std::vector<EnsembleStats> curves{r.baseline};
  curves.insert(curves.end(), r.controlled.begin(), r.controlled.end());
  write_curves_csv((dir / "a.csv").string(), curves);
  write_speedups_csv((dir / "b.csv").string(), r.rows);
  const std::string a = slurp(dir / "a.csv");
  const std::string b = slurp(dir / "b.csv");
  CHECK(a.rfind("strategy,time,mean_L,se_L,mean_lnDelta,se_lnDelta\n", 0) == 0);
  CHECK(b.rfind("strategy,delta_t,target,speedup,stderr\n", 0) == 0);

  const SweepResult again = sweep(sw);
  std::vector<EnsembleStats> curves2{again.baseline};
  curves2.insert(curves2.end(), again.controlled.begin(), again.controlled.end());
  write_curves_csv((dir / "a2.csv").string(), curves2);
  write_speedups_csv((dir / "b2.csv").string(), again.rows);
  CHECK(slurp(dir / "a2.csv") == a);
  CHECK(slurp(dir / "b2.csv") == b);

  SweepSpec empty = sw;
  empty.controlled.clear();
  const SweepResult none = sweep(empty);
  CHECK(none.rows.empty());
  CHECK(none.controlled.empty());
}

TEST_CASE("thread count resolution") {
  CHECK(resolve_thread_count(3) == 3);
  setenv("STROBE_THREADS", "2", 1);
  CHECK(resolve_thread_count(0) == 2);
  unsetenv("STROBE_THREADS");
  CHECK(resolve_thread_count(0) >= 1);
}

TEST_CASE("ensemble validation") {
  EnsembleSpec e = small_spec(Strategy::HaarRandom, 0);
  CHECK_THROWS_AS(run_ensemble(e), ConfigError);
  e = small_spec(Strategy::HaarRandom, 2);
  e.schedule.delta_t = 0.0105;
  CHECK_THROWS_AS(run_ensemble(e), ConfigError);
}
