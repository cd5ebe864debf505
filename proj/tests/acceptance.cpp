// Acceptance run: one PASS/FAIL line per criterion. Exit code is the number
// of failing criteria; "acceptance run complete" is printed when every
// criterion was evaluated.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "strobe/analytics.hpp"
#include "strobe/ensemble.hpp"
#include "strobe/oracles.hpp"
#include "strobe/random.hpp"
#include "strobe/record_io.hpp"

using namespace strobe;

namespace {

// Pinned tolerances.
constexpr double kSigma = 4.0;               // Monte Carlo agreement, standard errors
constexpr double kIdentityTol = 1e-12;       // permutation identity, lambda shift
constexpr double kSlopeTol = 0.05;           // relative, no-control slopes
constexpr double kHaarBandLo = 2.3;          // purification speed-up band at dt_pulse = 0.01
constexpr double kHaarBandHi = 3.0;
constexpr double kSlowPulseMin = 1.3;        // purification speed-up at dt_pulse = 1
constexpr double kBoundSigma = 2.0;          // exponential bound
constexpr double kSpeedupSigma = 2.0;        // measurement speed-up band and ordering
constexpr double kAlternationRel = 0.15;     // alternation vs random permutations
constexpr double kDesignTol = 1e-10;         // 2-design balance

constexpr std::uint64_t kSeed = 20240601;
constexpr int kTrajectories = 2000;

int failures = 0;

void report(int id, bool pass, const std::string& detail, double seconds) {
  if (!pass) ++failures;
  std::printf("criterion %d: %s  %s  [%.1fs]\n", id, pass ? "PASS" : "FAIL", detail.c_str(), seconds);
  std::fflush(stdout);
}

template <class F>
void run(int id, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = false;
  try {
    pass = f(detail);
  } catch (const std::exception& e) {
    detail += std::string(" exception: ") + e.what();
    pass = false;
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(id, pass, detail, s);
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

EnsembleSpec spec(int dim, Strategy s, double delta_t, double dt, double T, int n, Sampling sampling,
                  InfidelityMode mode) {
  EnsembleSpec e;
  e.params = {1.0, dt, T, dim, false};
  e.schedule.strategy = s;
  e.schedule.delta_t = delta_t;
  e.schedule.seed = kSeed;
  e.n_trajectories = n;
  e.base_seed = kSeed;
  e.options.sampling = sampling;
  e.options.infidelity_mode = mode;
  return e;
}

std::vector<double> log_of(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) out.push_back(std::log(x));
  return out;
}

}  // namespace

int main() {
  // 1. Haar moment identity.
  run(1, [](std::string& d) {
    double worst = 0.0;
    int n = 0;
    for (int dim : {2, 3, 4}) {
      for (int k = 0; k < 20; ++k) {
        Rng rng = make_rng(kSeed, Stream::Oracle, 1000 * dim + k);
        const DensityMatrix rho = random_density_matrix(dim, rng, 1 + k % dim);
        const Observable x = random_observable(dim, rng);
        const HaarMomentReport r = mc_haar_T1(rho, x, 100000, rng());
        worst = std::max(worst, r.z_score());
        ++n;
      }
    }
    d = fmt("%.0f inputs x 1e5 Haar samples, worst |z| = %.2f (limit %.0f)", n, worst, kSigma);
    return worst <= kSigma;
  });

  // 2. Permutation-average reduction.
  run(2, [](std::string& d) {
    double drift = 0.0, noise = 0.0;
    for (int dim : {2, 3, 4}) {
      const GeneratorReport r = permutation_averaged_generator(dim, 1.0, kSeed, 10);
      drift = std::max(drift, r.drift_max_diff);
      noise = std::max(noise, r.noise_max_diff);
    }
    d = fmt("D=2,3,4: drift max diff %.2e, noise max diff %.2e (limit %.0e)", drift, noise, kIdentityTol);
    return drift <= kIdentityTol && noise <= kIdentityTol;
  });

  // 3. No-control asymptotics.
  run(3, [](std::string& d) {
    const EnsembleStats l = run_ensemble(spec(4, Strategy::NoControl, 0.0, 1e-3, 20.0, kTrajectories,
                                              Sampling::Tilted, InfidelityMode::Eigenvalue));
    const double slope_l = fitted_slope(l.times, log_of(l.mean_impurity), 10.0, 20.0);
    const EnsembleStats p = run_ensemble(spec(4, Strategy::NoControl, 0.0, 1e-3, 24.0, kTrajectories,
                                              Sampling::Physical, InfidelityMode::Eigenvalue));
    const double slope_d = fitted_slope(p.times, p.mean_log_infidelity, 12.0, 24.0);
    const bool ok_l = std::abs(slope_l / -1.0 - 1.0) <= kSlopeTol;
    const bool ok_d = std::abs(slope_d / -4.0 - 1.0) <= kSlopeTol;
    d = fmt("slope ln<L> on [10,20] = %.4f (target -1), slope <ln Delta> on [12,24] = %.4f (target -4), tol %.0f%%",
            slope_l, slope_d, 100 * kSlopeTol);
    return ok_l && ok_d;
  });

  // 4 and 5 share the purification ensembles.
  EnsembleStats base, fast, slow;
  bool have_purify = false;
  std::string purify_error;
  try {
    base = run_ensemble(spec(4, Strategy::NoControl, 0.0, 1e-3, 14.0, kTrajectories, Sampling::Tilted,
                             InfidelityMode::Eigenvalue));
    fast = run_ensemble(spec(4, Strategy::HaarRandom, 0.01, 1e-3, 6.0, kTrajectories, Sampling::Physical,
                             InfidelityMode::Eigenvalue));
    slow = run_ensemble(spec(4, Strategy::HaarRandom, 1.0, 1e-3, 10.0, kTrajectories, Sampling::Physical,
                             InfidelityMode::Eigenvalue));
    have_purify = true;
  } catch (const std::exception& e) {
    purify_error = e.what();
  }

  run(4, [&](std::string& d) {
    if (!have_purify) throw std::runtime_error(purify_error);
    const std::vector<double> targets{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    SpeedupEstimate sf{}, ss{};
    for (double t : targets) {
      try {
        sf = speedup(base, fast, t, Metric::Impurity);
      } catch (const NoCrossing&) {
      }
      try {
        ss = speedup(base, slow, t, Metric::Impurity);
      } catch (const NoCrossing&) {
      }
    }
    d = fmt("delta_t=0.01: S(L=%.0e) = %.3f +- %.3f in [2.3, 3.0]; ", sf.target_level, sf.speedup, sf.stderr);
    d += fmt("delta_t=1: S(L=%.0e) = %.3f +- %.3f > 1.3", ss.target_level, ss.speedup, ss.stderr);
    return sf.speedup >= kHaarBandLo && sf.speedup <= kHaarBandHi && ss.speedup > kSlowPulseMin;
  });

  run(5, [&](std::string& d) {
    if (!have_purify) throw std::runtime_error(purify_error);
    const double l0 = fast.mean_impurity.front();
    double worst = -1e300;
    int violations = 0;
    for (std::size_t k = 0; k < fast.times.size(); ++k) {
      const double excess = fast.mean_impurity[k] - purification_upper_bound(l0, 4, 1.0, fast.times[k]);
      const double z = fast.se_impurity[k] > 0.0 ? excess / fast.se_impurity[k] : (excess > 0.0 ? 1e300 : -1e300);
      worst = std::max(worst, z);
      if (excess > kBoundSigma * fast.se_impurity[k]) ++violations;
    }
    d = fmt("%.0f saved times, max (<L> - bound)/se = %.2f, violations beyond %.0f se: %.0f",
            static_cast<double>(fast.times.size()), worst, kBoundSigma, violations);
    return violations == 0;
  });

  // 6. Measurement speed-up.
  run(6, [](std::string& d) {
    const EnsembleStats b = run_ensemble(spec(4, Strategy::NoControl, 0.0, 1e-3, 10.0, kTrajectories,
                                              Sampling::Physical, InfidelityMode::Population));
    const EnsembleStats r1 = run_ensemble(spec(4, Strategy::RandomPermutation, 6.25e-4, 6.25e-4, 4.0, kTrajectories,
                                               Sampling::Physical, InfidelityMode::Population));
    EnsembleSpec alt_spec = spec(4, Strategy::DeterministicAlternation, 6.25e-4, 6.25e-4, 4.0, kTrajectories,
                                 Sampling::Physical, InfidelityMode::Population);
    alt_spec.schedule.alternation = {Permutation::from_digits("2143"), Permutation::from_digits("3124")};
    const EnsembleStats alt = run_ensemble(alt_spec);
    const EnsembleStats r2 = run_ensemble(spec(4, Strategy::RandomPermutation, 1.25e-3, 6.25e-4, 4.0, kTrajectories,
                                               Sampling::Physical, InfidelityMode::Population));
    const double target = -30.0;
    const SpeedupEstimate s1 = speedup(b, r1, target, Metric::LogInfidelity);
    const SpeedupEstimate sa = speedup(b, alt, target, Metric::LogInfidelity);
    const SpeedupEstimate s2 = speedup(b, r2, target, Metric::LogInfidelity);
    const RateBounds bounds = measurement_speedup_bounds(4);
    const bool a = s1.speedup >= bounds.lower - kSpeedupSigma * s1.stderr &&
                   s1.speedup <= bounds.upper + kSpeedupSigma * s1.stderr;
    const bool bcheck = std::abs(sa.speedup / s1.speedup - 1.0) <= kAlternationRel;
    const bool c = s2.speedup + kSpeedupSigma * std::hypot(s1.stderr, s2.stderr) < s1.speedup;
    d = fmt("ln Delta=-30: random(6.25e-4) S = %.3f +- %.3f ", s1.speedup, s1.stderr);
    d += a ? "[in bounds]; " : "[outside bounds]; ";
    d += fmt("alternation S = %.3f (ratio %.3f) ", sa.speedup, sa.speedup / s1.speedup);
    d += bcheck ? "[within 15%]; " : "[not within 15%]; ";
    d += fmt("random(1.25e-3) S = %.3f +- %.3f ", s2.speedup, s2.stderr);
    d += c ? "[below at 2 sigma]" : "[not below at 2 sigma]";
    return a && bcheck && c;
  });

  // 7. Filtering equality and lambda-shift invariance.
  run(7, [](std::string& d) {
    const Strategy all[] = {Strategy::NoControl, Strategy::HaarRandom, Strategy::TwoDesign,
                            Strategy::RandomPermutation, Strategy::DeterministicAlternation};
    int exact = 0, total = 0;
    double worst_shift = 0.0, worst_record = 0.0;
    for (int i = 0; i < 100; ++i) {
      Rng rng = make_rng(kSeed, Stream::Sampling, 7000 + i);
      const Strategy s = all[i % 5];
      const int dim = s == Strategy::TwoDesign ? (i % 2 ? 2 : 4) : 2 + static_cast<int>(rng() % 3);
      ControlSchedule sch;
      sch.strategy = s;
      sch.delta_t = 1e-3 * static_cast<double>(1 + rng() % 20);
      sch.seed = rng();
      if (s == Strategy::DeterministicAlternation) {
        sch.alternation = {Permutation::unrank(dim, rng() % factorial(dim)),
                           Permutation::unrank(dim, rng() % factorial(dim))};
      }
      const SimParams p{1.0, 1e-3, 1.0, dim, false};
      const DensityMatrix rho0 = random_density_matrix(dim, rng, 1 + static_cast<int>(rng() % dim));
      const Observable x = jz_operator(dim);
      TrajectoryOptions opt;
      opt.keep_record = true;
      const std::uint64_t seed = rng();
      const TrajectoryResult r = simulate_trajectory(rho0, x, sch, p, seed, opt);
      std::stringstream io;
      write_record(io, r.record);
      const MeasurementRecord back = read_record(io);
      const DensityMatrix off = filter_record(rho0, x, back);
      ++total;
      if ((off.matrix() - r.final_state.matrix()).cwiseAbs().maxCoeff() == 0.0) ++exact;
      std::uniform_real_distribution<double> lam(-5.0, 5.0);
      const LambdaShiftReport ls = lambda_shift_check(rho0, x, lam(rng), seed, p, sch);
      worst_shift = std::max(worst_shift, ls.max_state_diff);
      worst_record = std::max(worst_record, ls.max_record_error);
    }
    d = fmt("bit-exact replays %.0f/%.0f; lambda-shift max state diff %.2e, max dR error %.2e", exact, total,
            worst_shift, worst_record);
    return exact == total && worst_shift < kIdentityTol && worst_record < kIdentityTol;
  });

  // 8. Drift oracle.
  run(8, [](std::string& d) {
    double z_step = 0.0, z_haar = 0.0;
    for (int k = 0; k < 20; ++k) {
      Rng rng = make_rng(kSeed, Stream::Oracle, 8000 + k);
      const DensityMatrix rho = random_density_matrix(4, rng, 2 + k % 3);
      const Observable x = random_observable(4, rng);
      z_step = std::max(z_step, mc_impurity_drift(rho, x, 1.0, 1e-5, 20000, rng()).z_score());
      z_haar = std::max(z_haar, mc_haar_impurity_drift(rho, x, 1.0, 1e-5, 40000, rng()).z_score());
    }
    d = fmt("D=4, 20 inputs: worst |z| noise-averaged dL %.2f, Haar-averaged dL %.2f (limit %.0f)", z_step, z_haar,
            kSigma);
    return z_step <= kSigma && z_haar <= kSigma;
  });

  // 9. 2-design balance.
  run(9, [](std::string& d) {
    const auto& set = two_design_set(2);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      Rng rng = make_rng(kSeed, Stream::Oracle, 9000 + k);
      const DensityMatrix rho = random_density_matrix(2, rng, 1 + k % 2);
      const Observable x = random_observable(2, rng);
      worst = std::max(worst, std::abs(design_average_T1(set, rho, x) - haar_integral_T1(rho, x)));
    }
    d = fmt("|S| = %.0f, worst |design - Haar| = %.2e (limit %.0e)", static_cast<double>(set.size()), worst,
            kDesignTol);
    return set.size() == 24 && worst <= kDesignTol;
  });

  std::printf("acceptance run complete: %d criteria failed\n", failures);
  return failures;
}
