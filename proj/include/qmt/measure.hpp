#pragma once

// Finite sample spaces, events, classical measures and decoherence
// functionals, plus the interference functionals I_k that define the
// level of a measure theory.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "qmt/error.hpp"

namespace qmt {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

class SampleSpace {
 public:
  explicit SampleSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) throw InvalidArgument("sample space needs at least one atom");
    std::unordered_set<std::string> seen;
    for (const auto& l : labels_) {
      if (!seen.insert(l).second) throw InvalidArgument("duplicate atom label '" + l + "'");
    }
  }

  static std::shared_ptr<const SampleSpace> make(std::vector<std::string> labels) {
    return std::make_shared<const SampleSpace>(std::move(labels));
  }

  // Atoms labelled "0", "1", ..., "n-1".
  static std::shared_ptr<const SampleSpace> indexed(std::size_t n) {
    std::vector<std::string> labels;
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
    return make(std::move(labels));
  }

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(std::size_t i) const { return labels_.at(i); }

  std::optional<std::size_t> index_of(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
  }

  friend bool operator==(const SampleSpace&, const SampleSpace&) = default;

 private:
  std::vector<std::string> labels_;
};

using SpacePtr = std::shared_ptr<const SampleSpace>;

inline bool same_space(const SpacePtr& a, const SpacePtr& b) {
  return a == b || (a && b && *a == *b);
}

inline void require_same_space(const SpacePtr& a, const SpacePtr& b, const char* what) {
  if (!same_space(a, b)) throw SpaceMismatch(std::string(what) + ": sample spaces differ");
}

// A subset of a sample space. Bits beyond the space size never exist.
class Event {
 public:
  explicit Event(SpacePtr space) : space_(std::move(space)), bits_(space_->size(), false) {}

  Event(SpacePtr space, std::span<const std::size_t> atoms) : Event(std::move(space)) {
    for (auto a : atoms) insert(a);
  }

  Event(SpacePtr space, std::initializer_list<std::size_t> atoms)
      : Event(std::move(space), std::span<const std::size_t>(atoms.begin(), atoms.size())) {}

  // Bit t of `mask` selects atom t; only valid for spaces of at most 64 atoms.
  static Event from_mask(SpacePtr space, std::uint64_t mask) {
    if (space->size() < 64 && (mask >> space->size()) != 0)
      throw InvalidArgument("mask has bits beyond the sample space");
    Event e(std::move(space));
    for (std::size_t t = 0; t < e.bits_.size() && t < 64; ++t) e.bits_[t] = (mask >> t) & 1U;
    return e;
  }

  static Event full(SpacePtr space) {
    Event e(std::move(space));
    std::fill(e.bits_.begin(), e.bits_.end(), true);
    return e;
  }

  const SpacePtr& space() const noexcept { return space_; }
  std::size_t universe_size() const noexcept { return bits_.size(); }

  bool contains(std::size_t atom) const { return bits_.at(atom); }
  void insert(std::size_t atom) {
    if (atom >= bits_.size()) throw InvalidArgument("atom index out of range");
    bits_[atom] = true;
  }

  bool empty() const { return std::none_of(bits_.begin(), bits_.end(), [](bool b) { return b; }); }
  std::size_t count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true)); }

  std::vector<std::size_t> atoms() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i]) out.push_back(i);
    return out;
  }

  std::uint64_t mask() const {
    if (bits_.size() > 64) throw SpaceTooLarge("event mask needs more than 64 bits");
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i]) m |= std::uint64_t{1} << i;
    return m;
  }

  bool disjoint_from(const Event& other) const {
    require_same_space(space_, other.space_, "disjoint_from");
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i] && other.bits_[i]) return false;
    return true;
  }

  Event operator|(const Event& other) const {
    require_same_space(space_, other.space_, "union");
    Event e(space_);
    for (std::size_t i = 0; i < bits_.size(); ++i) e.bits_[i] = bits_[i] || other.bits_[i];
    return e;
  }

  Event operator&(const Event& other) const {
    require_same_space(space_, other.space_, "intersection");
    Event e(space_);
    for (std::size_t i = 0; i < bits_.size(); ++i) e.bits_[i] = bits_[i] && other.bits_[i];
    return e;
  }

  friend bool operator==(const Event& a, const Event& b) {
    return same_space(a.space_, b.space_) && a.bits_ == b.bits_;
  }

 private:
  SpacePtr space_;
  std::vector<bool> bits_;
};

// Level-1 measure: non-negative weights on atoms.
class ClassicalMeasure {
 public:
  ClassicalMeasure(SpacePtr space, std::vector<double> weights)
      : space_(std::move(space)), weights_(std::move(weights)) {
    if (weights_.size() != space_->size())
      throw InvalidArgument("classical measure needs one weight per atom");
    for (double w : weights_) {
      if (!std::isfinite(w) || w < 0.0) throw AxiomViolation("classical weights must be finite and >= 0");
    }
  }

  const SpacePtr& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return weights_.size(); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double weight(std::size_t atom) const { return weights_.at(atom); }

  double total() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
  }

  bool is_normalized(double tolerance = tol::kNormalization) const {
    return std::abs(total() - 1.0) <= tolerance;
  }

 private:
  SpacePtr space_;
  std::vector<double> weights_;
};

// Hermitian matrix D(x;y) over atoms; row = bra atom, column = ket atom.
// Values on events come from biadditive extension, so additivity holds by
// construction.
class DecoherenceFunctional {
 public:
  DecoherenceFunctional(SpacePtr space, ComplexMatrix matrix, double tolerance = tol::kHermitian)
      : space_(std::move(space)), matrix_(std::move(matrix)) {
    const auto n = static_cast<Eigen::Index>(space_->size());
    if (matrix_.rows() != n || matrix_.cols() != n)
      throw InvalidArgument("decoherence matrix must be n x n for an n-atom space");
    if (!matrix_.allFinite()) throw AxiomViolation("decoherence matrix has non-finite entries");
    const double herm = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
    if (herm > tolerance)
      throw AxiomViolation("decoherence matrix is not Hermitian (max |D - D^dagger| = " +
                           std::to_string(herm) + ")");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (matrix_(i, i).real() < -tolerance)
        throw AxiomViolation("negative diagonal entry at atom " + space_->label(static_cast<std::size_t>(i)));
    }
  }

  const SpacePtr& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return space_->size(); }
  const ComplexMatrix& matrix() const noexcept { return matrix_; }
  Complex operator()(std::size_t bra, std::size_t ket) const {
    return matrix_(static_cast<Eigen::Index>(bra), static_cast<Eigen::Index>(ket));
  }

  // D(Omega; Omega).
  double total() const { return matrix_.sum().real(); }

  bool is_normalized(double tolerance = tol::kNormalization) const {
    return std::abs(total() - 1.0) <= tolerance;
  }

  // Embeds a classical measure as a diagonal functional.
  static DecoherenceFunctional diagonal(const ClassicalMeasure& m) {
    const auto n = static_cast<Eigen::Index>(m.size());
    ComplexMatrix d = ComplexMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) d(i, i) = m.weight(static_cast<std::size_t>(i));
    return DecoherenceFunctional(m.space(), std::move(d));
  }

 private:
  SpacePtr space_;
  ComplexMatrix matrix_;
};

inline double mu(const ClassicalMeasure& m, const Event& x) {
  require_same_space(m.space(), x.space(), "mu");
  double s = 0.0;
  for (auto a : x.atoms()) s += m.weight(a);
  return s;
}

// D(X;Y) = sum over x in X, y in Y of D(x;y).
inline Complex df_pair(const DecoherenceFunctional& df, const Event& x, const Event& y) {
  require_same_space(df.space(), x.space(), "df_pair");
  require_same_space(df.space(), y.space(), "df_pair");
  Complex s{0.0, 0.0};
  const auto xs = x.atoms();
  const auto ys = y.atoms();
  for (auto a : xs)
    for (auto b : ys) s += df(a, b);
  return s;
}

// Quantal measure mu(X) = D(X;X); the imaginary part cancels by Hermiticity.
inline double mu(const DecoherenceFunctional& df, const Event& x) { return df_pair(df, x, x).real(); }

template <class M>
concept MeasureEvaluator = requires(const M& m, const Event& e) {
  { mu(m, e) } -> std::convertible_to<double>;
  { m.space() } -> std::convertible_to<SpacePtr>;
  { m.size() } -> std::convertible_to<std::size_t>;
};

// I_k(X_1..X_k) = sum over nonempty S of (-1)^(k-|S|) mu(union of X_i, i in S).
template <MeasureEvaluator M>
double interference(const M& m, std::span<const Event> events) {
  const std::size_t k = events.size();
  if (k == 0) throw InvalidArgument("interference needs at least one event");
  if (k > 20) throw InvalidArgument("interference order too large");
  for (std::size_t i = 0; i < k; ++i) {
    require_same_space(m.space(), events[i].space(), "interference");
    for (std::size_t j = i + 1; j < k; ++j)
      if (!events[i].disjoint_from(events[j])) throw NotDisjoint("interference: events must be pairwise disjoint");
  }
  double total = 0.0;
  for (std::uint32_t s = 1; s < (1U << k); ++s) {
    Event u(m.space());
    int size = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if ((s >> i) & 1U) {
        u = u | events[i];
        ++size;
      }
    }
    const double sign = ((static_cast<int>(k) - size) % 2 == 0) ? 1.0 : -1.0;
    total += sign * mu(m, u);
  }
  return total;
}

namespace detail {

// mu of every subset of an n-atom space, indexed by bit mask.
inline std::vector<double> subset_table(const ClassicalMeasure& m) {
  const std::size_t n = m.size();
  std::vector<double> t(std::size_t{1} << n, 0.0);
  for (std::size_t s = 1; s < t.size(); ++s) {
    const auto low = static_cast<std::size_t>(std::countr_zero(s));
    t[s] = t[s & (s - 1)] + m.weight(low);
  }
  return t;
}

inline std::vector<double> subset_table(const DecoherenceFunctional& df) {
  const std::size_t n = df.size();
  std::vector<double> t(std::size_t{1} << n, 0.0);
  for (std::size_t s = 1; s < t.size(); ++s) {
    const auto low = static_cast<std::size_t>(std::countr_zero(s));
    const std::size_t rest = s & (s - 1);
    double cross = 0.0;
    for (std::size_t y = 0; y < n; ++y)
      if ((rest >> y) & 1U) cross += df(low, y).real();
    t[s] = t[rest] + df(low, low).real() + 2.0 * cross;
  }
  return t;
}

// Largest |I_k| over all unordered k-tuples of disjoint nonempty events,
// read from a subset table. Tuples are enumerated once each by labelling
// atoms with restricted-growth strings (label 0 = unused).
inline double max_interference(const std::vector<double>& table, std::size_t n, std::size_t k) {
  if (k == 0 || k > n) return 0.0;
  std::vector<std::uint64_t> parts(k, 0);
  double worst = 0.0;
  const std::uint32_t subsets = 1U << k;

  auto evaluate = [&] {
    double total = 0.0;
    for (std::uint32_t s = 1; s < subsets; ++s) {
      std::uint64_t mask = 0;
      for (std::size_t i = 0; i < k; ++i)
        if ((s >> i) & 1U) mask |= parts[i];
      const int size = std::popcount(s);
      total += (((static_cast<int>(k) - size) % 2) == 0 ? 1.0 : -1.0) * table[mask];
    }
    worst = std::max(worst, std::abs(total));
  };

  auto recurse = [&](auto&& self, std::size_t atom, std::size_t used) -> void {
    if (k - used > n - atom) return;  // not enough atoms left to open the remaining parts
    if (atom == n) {
      evaluate();
      return;
    }
    const std::uint64_t bit = std::uint64_t{1} << atom;
    self(self, atom + 1, used);
    for (std::size_t p = 0; p < used; ++p) {
      parts[p] |= bit;
      self(self, atom + 1, used);
      parts[p] &= ~bit;
    }
    if (used < k) {
      parts[used] |= bit;
      self(self, atom + 1, used + 1);
      parts[used] &= ~bit;
    }
  };
  recurse(recurse, 0, 0);
  return worst;
}

}  // namespace detail

inline constexpr std::size_t kMaxLevelAtoms = 12;

struct MeasureLevel {
  // Smallest k <= kmax with I_{k+1} identically zero; empty when above kmax.
  std::optional<int> level;
  // max |I_{k+1}| at each tested k = 1..; index 0 holds I_2.
  std::vector<double> residuals;
  // I_{k+2} also vanished at the reported level (hierarchy property).
  bool higher_vanishes = false;
  double higher_residual = 0.0;
};

template <MeasureEvaluator M>
MeasureLevel measure_level(const M& m, int kmax, double tolerance = 1e-12) {
  if (kmax < 1) throw InvalidArgument("measure_level: kmax must be >= 1");
  const std::size_t n = m.size();
  if (n > kMaxLevelAtoms) throw SpaceTooLarge("measure_level supports at most 12 atoms");
  const auto table = detail::subset_table(m);
  MeasureLevel out;
  for (int k = 1; k <= kmax; ++k) {
    const double r = detail::max_interference(table, n, static_cast<std::size_t>(k) + 1);
    out.residuals.push_back(r);
    if (r <= tolerance) {
      out.level = k;
      out.higher_residual = detail::max_interference(table, n, static_cast<std::size_t>(k) + 2);
      out.higher_vanishes = out.higher_residual <= tolerance;
      return out;
    }
  }
  return out;
}

// mu(x|y) = mu(x & y) / mu(y); undefined when mu(y) vanishes.
inline double conditional_mu(const ClassicalMeasure& m, const Event& x, const Event& y,
                             double tolerance = tol::kNormalization) {
  const double my = mu(m, y);
  if (my <= tolerance) throw ConditionUndefined("conditional measure undefined: mu(y) = 0");
  return mu(m, x & y) / my;
}

}  // namespace qmt
