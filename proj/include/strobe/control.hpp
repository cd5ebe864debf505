#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/QR>

#include "strobe/quantum_core.hpp"
#include "strobe/random.hpp"

namespace strobe {

enum class Strategy { NoControl, HaarRandom, TwoDesign, RandomPermutation, DeterministicAlternation };

std::string to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

/// How a digit string such as "2143" is read. Image: the k-th digit is the
/// image of basis state k (1-based one-line notation). Preimage: the inverse.
enum class PermutationConvention { Image, Preimage };

std::string to_string(PermutationConvention c);
PermutationConvention parse_permutation_convention(std::string_view name);

/// Bijection on {0, ..., D-1}; basis state i is mapped to image(i).
class Permutation {
 public:
  explicit Permutation(std::vector<int> image);

  static Permutation identity(int dim);
  /// 1-based one-line digit string, e.g. "2143". Only defined for D <= 9.
  static Permutation from_digits(std::string_view digits,
                                 PermutationConvention convention = PermutationConvention::Image);
  /// Inverse of rank(): the r-th permutation in lexicographic order of images.
  static Permutation unrank(int dim, std::uint64_t r);

  int dim() const { return static_cast<int>(image_.size()); }
  int operator()(int i) const { return image_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& image() const { return image_; }

  Permutation inverse() const;
  /// (this * other)(i) = this(other(i))
  Permutation operator*(const Permutation& other) const;
  bool operator==(const Permutation&) const = default;

  std::uint64_t rank() const;
  std::string digits() const;

  /// Permutation matrix with P|i> = |image(i)>.
  UnitaryMatrix matrix() const;

 private:
  std::vector<int> image_;
};

std::uint64_t factorial(int n);

struct ControlSchedule {
  Strategy strategy = Strategy::NoControl;
  double delta_t = 0.0;
  std::uint64_t seed = 0;
  std::vector<Permutation> alternation;

  /// Throws ConfigError when the schedule is inconsistent for dimension `dim`.
  void validate(int dim) const;
};

/// One pulse: its unitary and an identifier that resolves back to the same
/// unitary given the schedule (see resolve_control).
struct ControlAction {
  std::uint64_t id = 0;
  UnitaryMatrix unitary;
  std::optional<Permutation> permutation;
};

/// Pulse q >= 1 of the schedule. For random strategies the result is a pure
/// function of (schedule.seed, q).
///
/// Identifiers: HaarRandom -> q; TwoDesign -> index into two_design_set(D);
/// RandomPermutation -> lexicographic rank; DeterministicAlternation -> list position.
ControlAction next_control(const ControlSchedule& schedule, int dim, std::uint64_t q);

UnitaryMatrix next_unitary(const ControlSchedule& schedule, int dim, std::uint64_t q);

/// Rebuild the action logged as `id` at pulse q. Throws RecordCorrupt when the
/// identifier cannot have been produced by the schedule.
ControlAction resolve_control(const ControlSchedule& schedule, int dim, std::uint64_t q,
                              std::uint64_t id);

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases of
/// R's diagonal absorbed into Q.
template <class Urbg>
UnitaryMatrix haar_sample(int dim, Urbg& rng) {
  if (dim < 2) throw InvalidDimension("haar_sample: dimension must be at least 2");
  const Matrix z = complex_gaussian(dim, dim, rng);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (int j = 0; j < dim; ++j) {
    const Complex d = r(j, j);
    const double a = std::abs(d);
    q.col(j) *= (a > 0.0 ? d / a : Complex(1.0, 0.0));
  }
  return UnitaryMatrix(std::move(q));
}

bool has_two_design(int dim);

/// Bundled unitary 2-designs: the Clifford group modulo phase (24 elements
/// for D = 2, 11520 for D = 4). Throws UnsupportedDesign for other D.
const std::vector<UnitaryMatrix>& two_design_set(int dim);

/// Closure of `generators` under multiplication, modulo global phase.
std::vector<UnitaryMatrix> generate_group_mod_phase(const std::vector<Matrix>& generators,
                                                    std::size_t limit = 100000);

/// Conditional unitary V taking the dominant eigenvector of rho to `target`,
/// so that <target| V rho V^+ |target> equals the largest eigenvalue of rho.
UnitaryMatrix final_preparation_unitary(const DensityMatrix& rho, const Vector& target);

/// Re-orthonormalize a nearly unitary matrix (QR with phase fix).
Matrix polish_unitary(const Matrix& m);

}  // namespace strobe
