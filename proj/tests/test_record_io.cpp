#include <doctest.h>

#include <sstream>

#include "strobe/record_io.hpp"

using namespace strobe;

namespace {

MeasurementRecord sample_record(Strategy s = Strategy::DeterministicAlternation) {
  ControlSchedule c;
  c.strategy = s;
  c.delta_t = 0.01;
  c.seed = 4;
  if (s == Strategy::DeterministicAlternation) {
    c.alternation = {Permutation::from_digits("2143"), Permutation::from_digits("3124")};
  }
  TrajectoryOptions opt;
  opt.keep_record = true;
  return simulate_trajectory(DensityMatrix::maximally_mixed(4), jz_operator(4), c, {1.0, 1e-3, 0.2, 4, false}, 9, opt)
      .record;
}

std::string to_text(const MeasurementRecord& r) {
  std::ostringstream os;
  write_record(os, r);
  return os.str();
}

MeasurementRecord from_text(const std::string& s) {
  std::istringstream is(s);
  return read_record(is);
}

}  // namespace

TEST_CASE("records round-trip bit-exactly") {
  for (Strategy s : {Strategy::NoControl, Strategy::HaarRandom, Strategy::TwoDesign, Strategy::RandomPermutation,
                     Strategy::DeterministicAlternation}) {
    const MeasurementRecord r = sample_record(s);
    const MeasurementRecord back = from_text(to_text(r));
    CHECK(back.increments == r.increments);
    CHECK(back.control_log == r.control_log);
    CHECK(back.seed == r.seed);
    CHECK(back.schedule.strategy == r.schedule.strategy);
    CHECK(back.schedule.alternation == r.schedule.alternation);
    CHECK(back.params.dt == r.params.dt);
    CHECK(back.final_state_hash == r.final_state_hash);
    CHECK(*back.final_state == *r.final_state);
    CHECK(to_text(back) == to_text(r));
  }
}

TEST_CASE("preimage convention is preserved") {
  MeasurementRecord r = sample_record();
  r.convention = PermutationConvention::Preimage;
  const std::string text = to_text(r);
  CHECK(text.find("# alternation=2143,2314") != std::string::npos);
  CHECK(from_text(text).schedule.alternation == r.schedule.alternation);
}

TEST_CASE("format_double keeps 17 significant digits") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  const double x = 1.0 / 3.0;
  CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
}

TEST_CASE("corrupt records are rejected") {
  const std::string good = to_text(sample_record());
  CHECK_NOTHROW(from_text(good));

  SUBCASE("truncated") {
    const auto cut = good.rfind('\n', good.size() - 2);
    CHECK_THROWS_AS(from_text(good.substr(0, cut + 1)), RecordCorrupt);
    CHECK_THROWS_AS(from_text(good.substr(0, good.size() / 2)), RecordCorrupt);
  }
  SUBCASE("missing header key") {
    std::string s = good;
    const auto pos = s.find("# gamma=");
    s.erase(pos, s.find('\n', pos) - pos + 1);
    CHECK_THROWS_AS(from_text(s), RecordCorrupt);
  }
  SUBCASE("bad number") {
    std::string s = good;
    const auto pos = s.find("\n5,");
    s.replace(pos + 3, 3, "x.y");
    CHECK_THROWS_AS(from_text(s), RecordCorrupt);
  }
  SUBCASE("out of sequence") {
    std::string s = good;
    const auto pos = s.find("\n7,");
    s.replace(pos + 1, 1, "8");
    CHECK_THROWS_AS(from_text(s), RecordCorrupt);
  }
  SUBCASE("no column header") {
    CHECK_THROWS_AS(from_text("# dim=2\n"), RecordCorrupt);
    CHECK_THROWS_AS(from_text(""), RecordCorrupt);
  }
  SUBCASE("unknown strategy") {
    std::string s = good;
    const auto pos = s.find("DeterministicAlternation");
    s.replace(pos, 24, "Nonsense");
    CHECK_THROWS_AS(from_text(s), RecordCorrupt);
  }
  CHECK_THROWS_AS(read_record(std::string("/nonexistent/record.csv")), RecordCorrupt);
}

TEST_CASE("shifted records filter to the same state") {
  const MeasurementRecord r = sample_record(Strategy::HaarRandom);
  const MeasurementRecord s = shift_record(from_text(to_text(r)), 3.0);
  CHECK(s.lambda_shift == 3.0);
  CHECK(s.increments[0] - r.increments[0] == doctest::Approx(2.0 * 3.0 * 1e-3));
  // Filtering the shifted record with X + 3 I.
  const MeasurementBasis basis = MeasurementBasis(jz_operator(4).matrix()).shifted(3.0);
  FilterKernel k(DensityMatrix::maximally_mixed(4).matrix(), basis, 1.0, 1e-3, Integrator::MeasurementOperator);
  FilterKernel plain(DensityMatrix::maximally_mixed(4).matrix(), MeasurementBasis(jz_operator(4).matrix()), 1.0, 1e-3,
                     Integrator::MeasurementOperator);
  double worst = 0.0;
  for (std::size_t n = 0; n < 50; ++n) {
    k.update_from_record(s.increments[n]);
    plain.update_from_record(r.increments[n]);
    worst = std::max(worst, (k.lab_state() - plain.lab_state()).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-12);
}
