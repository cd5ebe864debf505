#include "strobe/control.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <map>
#include <mutex>
#include <numeric>
#include <set>

namespace strobe {

namespace {

std::string normalize_name(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == '-' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

// Phase-canonical hash key for a matrix known up to a global phase.
std::vector<long long> phase_key(const Matrix& m, Matrix* canonical) {
  Complex phase(1.0, 0.0);
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    const Complex z = m.data()[k];
    if (std::abs(z) > 1e-3) {
      phase = std::conj(z) / std::abs(z);
      break;
    }
  }
  const Matrix c = m * phase;
  std::vector<long long> key;
  key.reserve(static_cast<std::size_t>(2 * c.size()));
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    key.push_back(std::llround(c.data()[k].real() * 1e6));
    key.push_back(std::llround(c.data()[k].imag() * 1e6));
  }
  if (canonical != nullptr) *canonical = c;
  return key;
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::NoControl: return "NoControl";
    case Strategy::HaarRandom: return "HaarRandom";
    case Strategy::TwoDesign: return "TwoDesign";
    case Strategy::RandomPermutation: return "RandomPermutation";
    case Strategy::DeterministicAlternation: return "DeterministicAlternation";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  const std::string n = normalize_name(name);
  if (n == "nocontrol" || n == "none") return Strategy::NoControl;
  if (n == "haarrandom" || n == "haar") return Strategy::HaarRandom;
  if (n == "twodesign" || n == "clifford") return Strategy::TwoDesign;
  if (n == "randompermutation" || n == "permutation") return Strategy::RandomPermutation;
  if (n == "deterministicalternation" || n == "alternation") return Strategy::DeterministicAlternation;
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

std::string to_string(PermutationConvention c) {
  return c == PermutationConvention::Image ? "image" : "preimage";
}

PermutationConvention parse_permutation_convention(std::string_view name) {
  const std::string n = normalize_name(name);
  if (n == "image") return PermutationConvention::Image;
  if (n == "preimage" || n == "inverse") return PermutationConvention::Preimage;
  throw ConfigError("unknown permutation convention '" + std::string(name) + "'");
}

Permutation::Permutation(std::vector<int> image) : image_(std::move(image)) {
  const int d = dim();
  if (d < 1) throw InvalidDimension("Permutation: empty image");
  std::vector<char> seen(static_cast<std::size_t>(d), 0);
  for (int v : image_) {
    if (v < 0 || v >= d || seen[static_cast<std::size_t>(v)]) {
      throw InvariantViolation("Permutation: image is not a bijection on {0..D-1}");
    }
    seen[static_cast<std::size_t>(v)] = 1;
  }
}

Permutation Permutation::identity(int dim) {
  std::vector<int> im(static_cast<std::size_t>(dim));
  std::iota(im.begin(), im.end(), 0);
  return Permutation(std::move(im));
}

Permutation Permutation::from_digits(std::string_view digits, PermutationConvention convention) {
  std::vector<int> im;
  for (char c : digits) {
    if (c < '1' || c > '9') {
      throw ConfigError("permutation digits must be 1-9, got '" + std::string(digits) + "'");
    }
    im.push_back(c - '1');
  }
  try {
    Permutation p(std::move(im));
    return convention == PermutationConvention::Image ? p : p.inverse();
  } catch (const InvariantViolation&) {
    throw ConfigError("'" + std::string(digits) + "' is not a permutation");
  }
}

std::uint64_t factorial(int n) {
  std::uint64_t f = 1;
  for (int k = 2; k <= n; ++k) f *= static_cast<std::uint64_t>(k);
  return f;
}

Permutation Permutation::unrank(int dim, std::uint64_t r) {
  if (dim > 20) throw Refused("Permutation::unrank: D > 20 overflows the rank");
  if (r >= factorial(dim)) throw InvariantViolation("Permutation::unrank: rank out of range");
  std::vector<int> pool(static_cast<std::size_t>(dim));
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<int> im;
  im.reserve(pool.size());
  for (int k = dim; k >= 1; --k) {
    const std::uint64_t f = factorial(k - 1);
    const auto idx = static_cast<std::size_t>(r / f);
    r %= f;
    im.push_back(pool[idx]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
  }
  return Permutation(std::move(im));
}

Permutation Permutation::inverse() const {
  std::vector<int> inv(image_.size());
  for (std::size_t i = 0; i < image_.size(); ++i) inv[static_cast<std::size_t>(image_[i])] = static_cast<int>(i);
  return Permutation(std::move(inv));
}

Permutation Permutation::operator*(const Permutation& other) const {
  if (other.dim() != dim()) throw InvalidDimension("Permutation product: dimension mismatch");
  std::vector<int> im(image_.size());
  for (std::size_t i = 0; i < im.size(); ++i) im[i] = image_[static_cast<std::size_t>(other.image_[i])];
  return Permutation(std::move(im));
}

std::uint64_t Permutation::rank() const {
  const int d = dim();
  std::uint64_t r = 0;
  for (int i = 0; i < d; ++i) {
    int smaller = 0;
    for (int j = i + 1; j < d; ++j) {
      if (image_[static_cast<std::size_t>(j)] < image_[static_cast<std::size_t>(i)]) ++smaller;
    }
    r += static_cast<std::uint64_t>(smaller) * factorial(d - 1 - i);
  }
  return r;
}

std::string Permutation::digits() const {
  std::string s;
  for (int v : image_) s.push_back(static_cast<char>('1' + v));
  return s;
}

UnitaryMatrix Permutation::matrix() const {
  const int d = dim();
  Matrix m = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) m(image_[static_cast<std::size_t>(i)], i) = 1.0;
  return UnitaryMatrix(std::move(m));
}

void ControlSchedule::validate(int dim) const {
  if (strategy != Strategy::NoControl && !(delta_t > 0.0)) {
    throw ConfigError("control interval delta_t must be positive for " + to_string(strategy));
  }
  const bool want_list = strategy == Strategy::DeterministicAlternation;
  if (want_list && alternation.empty()) {
    throw ConfigError("DeterministicAlternation requires a non-empty permutation list");
  }
  if (!want_list && !alternation.empty()) {
    throw ConfigError("a permutation list is only meaningful for DeterministicAlternation");
  }
  for (const auto& p : alternation) {
    if (p.dim() != dim) throw ConfigError("alternation permutation has the wrong dimension");
  }
  if (strategy == Strategy::TwoDesign && !has_two_design(dim)) {
    throw UnsupportedDesign("no bundled 2-design for D = " + std::to_string(dim));
  }
  if (strategy == Strategy::RandomPermutation && dim > 20) {
    throw ConfigError("RandomPermutation supports D <= 20");
  }
}

ControlAction next_control(const ControlSchedule& schedule, int dim, std::uint64_t q) {
  if (q < 1) throw InvariantViolation("next_control: pulse index starts at 1");
  SplitMix64 rng(derive_seed(schedule.seed, Stream::Control, q));
  switch (schedule.strategy) {
    case Strategy::NoControl:
      return {0, UnitaryMatrix::identity(dim), Permutation::identity(dim)};
    case Strategy::HaarRandom:
      return {q, haar_sample(dim, rng), std::nullopt};
    case Strategy::TwoDesign: {
      const auto& set = two_design_set(dim);
      std::uniform_int_distribution<std::size_t> pick(0, set.size() - 1);
      const std::size_t idx = pick(rng);
      return {idx, set[idx], std::nullopt};
    }
    case Strategy::RandomPermutation: {
      std::uniform_int_distribution<std::uint64_t> pick(0, factorial(dim) - 1);
      const std::uint64_t r = pick(rng);
      Permutation p = Permutation::unrank(dim, r);
      return {r, p.matrix(), std::move(p)};
    }
    case Strategy::DeterministicAlternation: {
      if (schedule.alternation.empty()) {
        throw ConfigError("DeterministicAlternation requires a non-empty permutation list");
      }
      const std::uint64_t idx = (q - 1) % schedule.alternation.size();
      const Permutation& p = schedule.alternation[idx];
      return {idx, p.matrix(), p};
    }
  }
  throw ConfigError("unhandled strategy");
}

UnitaryMatrix next_unitary(const ControlSchedule& schedule, int dim, std::uint64_t q) {
  return next_control(schedule, dim, q).unitary;
}

ControlAction resolve_control(const ControlSchedule& schedule, int dim, std::uint64_t q,
                              std::uint64_t id) {
  auto corrupt = [&](const std::string& why) {
    return RecordCorrupt("control id " + std::to_string(id) + " at pulse " + std::to_string(q) + ": " + why);
  };
  switch (schedule.strategy) {
    case Strategy::NoControl:
      throw corrupt("NoControl schedules apply no pulses");
    case Strategy::HaarRandom:
      if (id != q) throw corrupt("Haar pulses are identified by their pulse index");
      return next_control(schedule, dim, q);
    case Strategy::TwoDesign: {
      const auto& set = two_design_set(dim);
      if (id >= set.size()) throw corrupt("outside the design");
      return {id, set[id], std::nullopt};
    }
    case Strategy::RandomPermutation: {
      if (id >= factorial(dim)) throw corrupt("rank exceeds D!");
      Permutation p = Permutation::unrank(dim, id);
      return {id, p.matrix(), std::move(p)};
    }
    case Strategy::DeterministicAlternation: {
      if (schedule.alternation.empty() || id != (q - 1) % schedule.alternation.size()) {
        throw corrupt("does not match the alternation order");
      }
      const Permutation& p = schedule.alternation[id];
      return {id, p.matrix(), p};
    }
  }
  throw corrupt("unhandled strategy");
}

std::vector<UnitaryMatrix> generate_group_mod_phase(const std::vector<Matrix>& generators,
                                                    std::size_t limit) {
  if (generators.empty()) throw InvariantViolation("generate_group_mod_phase: no generators");
  const auto d = generators.front().rows();
  std::set<std::vector<long long>> seen;
  std::vector<Matrix> elements;
  std::deque<std::size_t> frontier;

  Matrix canon;
  seen.insert(phase_key(Matrix::Identity(d, d), &canon));
  elements.push_back(canon);
  frontier.push_back(0);
  while (!frontier.empty()) {
    const std::size_t k = frontier.front();
    frontier.pop_front();
    for (const Matrix& g : generators) {
      const Matrix prod = g * elements[k];
      auto key = phase_key(prod, &canon);
      if (seen.insert(std::move(key)).second) {
        if (elements.size() >= limit) throw Refused("group closure exceeded the element limit");
        elements.push_back(canon);
        frontier.push_back(elements.size() - 1);
      }
    }
  }
  std::vector<UnitaryMatrix> out;
  out.reserve(elements.size());
  for (auto& m : elements) out.emplace_back(std::move(m));
  return out;
}

bool has_two_design(int dim) { return dim == 2 || dim == 4; }

const std::vector<UnitaryMatrix>& two_design_set(int dim) {
  static std::mutex mu;
  static std::map<int, std::vector<UnitaryMatrix>> cache;
  if (!has_two_design(dim)) {
    throw UnsupportedDesign("no bundled 2-design for D = " + std::to_string(dim));
  }
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(dim);
  if (it != cache.end()) return it->second;

  const double s = 1.0 / std::sqrt(2.0);
  Matrix h(2, 2);
  h << s, s, s, -s;
  Matrix ph(2, 2);
  ph << 1.0, 0.0, 0.0, Complex(0.0, 1.0);
  std::vector<Matrix> gens;
  if (dim == 2) {
    gens = {h, ph};
  } else {
    const Matrix i2 = Matrix::Identity(2, 2);
    Matrix cnot = Matrix::Zero(4, 4);
    cnot(0, 0) = cnot(1, 1) = cnot(2, 3) = cnot(3, 2) = 1.0;
    gens = {kron(h, i2), kron(i2, h), kron(ph, i2), kron(i2, ph), cnot};
  }
  return cache.emplace(dim, generate_group_mod_phase(gens)).first->second;
}

Matrix polish_unitary(const Matrix& m) {
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const Complex d = r(j, j);
    const double a = std::abs(d);
    q.col(j) *= (a > 0.0 ? d / a : Complex(1.0, 0.0));
  }
  return q;
}

UnitaryMatrix final_preparation_unitary(const DensityMatrix& rho, const Vector& target) {
  const int d = rho.dim();
  if (target.size() != d) throw InvalidDimension("final_preparation_unitary: dimension mismatch");
  if (std::abs(target.norm() - 1.0) > 1e-10) {
    throw InvariantViolation("final_preparation_unitary: target state must be normalized");
  }
  Vector top;
  if (is_exactly_diagonal(rho.matrix())) {
    top = Vector::Zero(d);
    top(infidelity(rho, InfidelityMode::Population).index) = 1.0;
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix());
    top = es.eigenvectors().col(d - 1);
  }
  const Complex overlap = target.dot(top);  // <target|top>
  const double mag = std::abs(overlap);
  const Complex phase = mag > 0.0 ? std::conj(overlap) / mag : Complex(1.0, 0.0);
  const Vector aligned = phase * top;  // <target|aligned> is real and >= 0
  const Vector w = aligned - target;
  Matrix v = Matrix::Identity(d, d);
  const double wn = w.squaredNorm();
  if (wn > 1e-28) v -= (2.0 / wn) * (w * w.adjoint());
  v *= phase;
  return UnitaryMatrix(std::move(v));
}

}  // namespace strobe
