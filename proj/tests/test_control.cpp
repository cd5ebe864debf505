#include <doctest.h>

#include <set>

#include "strobe/analytics.hpp"
#include "strobe/control.hpp"
#include "strobe/oracles.hpp"
#include "strobe/stats.hpp"

using namespace strobe;

TEST_CASE("strategy names round-trip") {
  for (Strategy s : {Strategy::NoControl, Strategy::HaarRandom, Strategy::TwoDesign, Strategy::RandomPermutation,
                     Strategy::DeterministicAlternation}) {
    CHECK(parse_strategy(to_string(s)) == s);
  }
  CHECK_THROWS_AS(parse_strategy("Bogus"), ConfigError);
}

TEST_CASE("Permutation basics") {
  const Permutation p = Permutation::from_digits("2143");
  CHECK(p.image() == std::vector<int>{1, 0, 3, 2});
  CHECK(p.digits() == "2143");
  const Permutation q = Permutation::from_digits("3124");
  CHECK(q(0) == 2);
  CHECK((q * q.inverse()) == Permutation::identity(4));
  CHECK((p * q)(0) == p(q(0)));
  CHECK(Permutation::from_digits("3124", PermutationConvention::Preimage) == q.inverse());
  CHECK_THROWS_AS(Permutation({0, 0, 1}), InvariantViolation);
  CHECK_THROWS_AS(Permutation::from_digits("1135"), ConfigError);

  const UnitaryMatrix m = q.matrix();
  for (int i = 0; i < 4; ++i) CHECK(m.matrix()(q(i), i) == Complex(1.0));

  std::set<std::string> seen;
  for (std::uint64_t r = 0; r < factorial(4); ++r) {
    const Permutation u = Permutation::unrank(4, r);
    CHECK(u.rank() == r);
    seen.insert(u.digits());
  }
  CHECK(seen.size() == 24);
  CHECK(Permutation::unrank(4, 0) == Permutation::identity(4));
}

TEST_CASE("schedule validation") {
  ControlSchedule s;
  s.strategy = Strategy::DeterministicAlternation;
  s.delta_t = 0.01;
  CHECK_THROWS_AS(s.validate(4), ConfigError);
  s.alternation = {Permutation::from_digits("2143")};
  CHECK_NOTHROW(s.validate(4));
  CHECK_THROWS_AS(s.validate(3), ConfigError);
  s.strategy = Strategy::HaarRandom;
  CHECK_THROWS_AS(s.validate(4), ConfigError);
  s.alternation.clear();
  s.delta_t = 0.0;
  CHECK_THROWS_AS(s.validate(4), ConfigError);
  ControlSchedule none;
  CHECK_NOTHROW(none.validate(4));
}

TEST_CASE("next_unitary examples") {
  ControlSchedule none;
  CHECK((next_unitary(none, 3, 5).matrix() - Matrix::Identity(3, 3)).norm() == 0.0);

  ControlSchedule alt;
  alt.strategy = Strategy::DeterministicAlternation;
  alt.delta_t = 1e-3;
  alt.alternation = {Permutation::from_digits("2143"), Permutation::from_digits("3124")};
  CHECK(next_unitary(alt, 4, 3).matrix() == Permutation::from_digits("2143").matrix().matrix());
  CHECK(next_unitary(alt, 4, 2).matrix() == Permutation::from_digits("3124").matrix().matrix());
  CHECK(next_control(alt, 4, 2).id == 1);
}

TEST_CASE("random strategies replay from (seed, q)") {
  for (Strategy s : {Strategy::HaarRandom, Strategy::TwoDesign, Strategy::RandomPermutation}) {
    ControlSchedule sch;
    sch.strategy = s;
    sch.delta_t = 0.1;
    sch.seed = 99;
    for (std::uint64_t q = 1; q < 20; ++q) {
      const ControlAction a = next_control(sch, 4, q);
      const ControlAction b = next_control(sch, 4, q);
      CHECK(a.unitary.matrix() == b.unitary.matrix());
      CHECK(resolve_control(sch, 4, q, a.id).unitary.matrix() == a.unitary.matrix());
      const Matrix u = a.unitary.matrix();
      CHECK((u.adjoint() * u - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
    }
    CHECK(next_unitary(sch, 4, 1).matrix() != next_unitary(sch, 4, 2).matrix());
  }
  ControlSchedule perm;
  perm.strategy = Strategy::RandomPermutation;
  perm.delta_t = 0.1;
  CHECK_THROWS_AS(resolve_control(perm, 4, 1, 24), RecordCorrupt);
  ControlSchedule haar;
  haar.strategy = Strategy::HaarRandom;
  haar.delta_t = 0.1;
  CHECK_THROWS_AS(resolve_control(haar, 4, 3, 4), RecordCorrupt);
}

TEST_CASE("Haar moments") {
  for (int d : {2, 3, 4}) {
    Rng rng = make_rng(11, Stream::Sampling, static_cast<std::uint64_t>(d));
    RunningStats u00sq, re_u, im_u;
    for (int k = 0; k < 100000; ++k) {
      const Matrix u = haar_sample(d, rng).matrix();
      u00sq.add(std::norm(u(0, 0)));
      re_u.add(u(d - 1, 0).real());
      im_u.add(u(0, d - 1).imag());
    }
    CHECK(std::abs(u00sq.mean - 1.0 / d) <= 4 * u00sq.stderr_mean());
    CHECK(std::abs(re_u.mean) <= 4 * re_u.stderr_mean());
    CHECK(std::abs(im_u.mean) <= 4 * im_u.stderr_mean());
  }
}

TEST_CASE("Haar samples are left-invariant") {
  Rng rng = make_rng(12, Stream::Sampling);
  const Matrix v = haar_sample(3, rng).matrix();
  RunningStats plain, shifted;
  for (int k = 0; k < 50000; ++k) {
    const Matrix u = haar_sample(3, rng).matrix();
    plain.add(std::pow(std::norm(u(0, 0)), 2));
    const Matrix w = haar_sample(3, rng).matrix();
    shifted.add(std::pow(std::norm((v * w)(0, 0)), 2));
  }
  const double se = std::hypot(plain.stderr_mean(), shifted.stderr_mean());
  CHECK(std::abs(plain.mean - shifted.mean) <= 4 * se);
  // E|U00|^4 = 2 / (D (D + 1))
  CHECK(std::abs(shifted.mean - 2.0 / 12.0) <= 4 * shifted.stderr_mean());
}

TEST_CASE("two-design sets") {
  CHECK(two_design_set(2).size() == 24);
  CHECK(two_design_set(4).size() == 11520);
  CHECK(has_two_design(2));
  CHECK_FALSE(has_two_design(3));
  CHECK_THROWS_AS(two_design_set(3), UnsupportedDesign);

  Rng rng = make_rng(13, Stream::Sampling);
  const std::vector<UnitaryMatrix> only_identity{UnitaryMatrix::identity(2)};
  for (int k = 0; k < 20; ++k) {
    const DensityMatrix rho = random_density_matrix(2, rng);
    const Observable x = random_observable(2, rng);
    CHECK(std::abs(design_average_T1(two_design_set(2), rho, x) - haar_integral_T1(rho, x)) < 1e-10);
    CHECK(std::abs(design_average_T1(only_identity, rho, x) - haar_integral_T1(rho, x)) > 1e-10);
  }
  for (int k = 0; k < 3; ++k) {
    const DensityMatrix rho = random_density_matrix(4, rng);
    const Observable x = random_observable(4, rng);
    CHECK(std::abs(design_average_T1(two_design_set(4), rho, x) - haar_integral_T1(rho, x)) < 1e-10);
  }
}

TEST_CASE("two-design strategy rejects unsupported dimensions") {
  ControlSchedule s;
  s.strategy = Strategy::TwoDesign;
  s.delta_t = 0.1;
  CHECK_THROWS_AS(next_unitary(s, 3, 1), UnsupportedDesign);
}

TEST_CASE("final_preparation_unitary") {
  Vector e1 = Vector::Zero(2);
  e1(1) = 1.0;
  auto fidelity = [](const UnitaryMatrix& v, const DensityMatrix& rho, const Vector& t) {
    return (t.adjoint() * v.matrix() * rho.matrix() * v.matrix().adjoint() * t)(0, 0).real();
  };
  const DensityMatrix pure1 = DensityMatrix::pure(e1);
  CHECK(fidelity(final_preparation_unitary(pure1, e1), pure1, e1) == doctest::Approx(1.0));
  const DensityMatrix r = DensityMatrix::diagonal({0.95, 0.05});
  CHECK(fidelity(final_preparation_unitary(r, e1), r, e1) == doctest::Approx(0.95));

  Rng rng = make_rng(14, Stream::Sampling);
  for (int k = 0; k < 50; ++k) {
    const int d = 2 + k % 5;
    const DensityMatrix rho = random_density_matrix(d, rng);
    const Vector t = random_pure_state(d, rng);
    const UnitaryMatrix v = final_preparation_unitary(rho, t);
    CHECK(std::abs(fidelity(v, rho, t) - rho.eigenvalues().maxCoeff()) < 1e-10);
  }
}

TEST_CASE("polish_unitary restores unitarity") {
  Rng rng = make_rng(15, Stream::Sampling);
  Matrix u = haar_sample(4, rng).matrix();
  u += 1e-8 * complex_gaussian(4, 4, rng);
  const Matrix p = polish_unitary(u);
  CHECK((p.adjoint() * p - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((p - u).cwiseAbs().maxCoeff() < 1e-7);
}
