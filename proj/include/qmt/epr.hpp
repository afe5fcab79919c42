#pragma once

// The two-setting, two-outcome Bell scenario on the 16-atom joint space.
// Atom index = 8 b(i) + 4 b(i') + 2 b(j) + b(j') with b(+1) = 0, b(-1) = 1,
// where i, i', j, j' are the outcomes for settings a, a', b, b'.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "qmt/error.hpp"
#include "qmt/measure.hpp"

namespace qmt {

enum class Setting { a = 0, a_prime = 1, b = 2, b_prime = 3 };

inline constexpr std::array<Setting, 4> kSettings{Setting::a, Setting::a_prime, Setting::b, Setting::b_prime};

inline std::string_view setting_name(Setting s) {
  switch (s) {
    case Setting::a: return "a";
    case Setting::a_prime: return "a'";
    case Setting::b: return "b";
    case Setting::b_prime: return "b'";
  }
  return "?";
}

inline std::optional<Setting> parse_setting(std::string_view s) {
  for (auto st : kSettings)
    if (setting_name(st) == s) return st;
  if (s == "ap") return Setting::a_prime;
  if (s == "bp") return Setting::b_prime;
  return std::nullopt;
}

inline constexpr bool is_a_side(Setting s) { return s == Setting::a || s == Setting::a_prime; }

// Bit position of a setting's outcome inside the atom index.
inline constexpr int setting_bit(Setting s) { return 3 - static_cast<int>(s); }

inline constexpr int outcome_bit(std::size_t atom, Setting s) {
  return static_cast<int>((atom >> setting_bit(s)) & 1U);
}
inline constexpr int outcome_sign(std::size_t atom, Setting s) { return 1 - 2 * outcome_bit(atom, s); }

inline constexpr int sign_bit(int outcome) { return outcome > 0 ? 0 : 1; }
inline constexpr int bit_sign(int bit) { return bit == 0 ? 1 : -1; }

struct SettingPair {
  Setting alpha;
  Setting beta;
  friend bool operator==(const SettingPair&, const SettingPair&) = default;
};

// Fixed order: (a,b), (a',b), (a,b'), (a',b').
inline constexpr std::array<SettingPair, 4> kSettingPairs{
    SettingPair{Setting::a, Setting::b}, SettingPair{Setting::a_prime, Setting::b},
    SettingPair{Setting::a, Setting::b_prime}, SettingPair{Setting::a_prime, Setting::b_prime}};

inline std::size_t pair_index(SettingPair p) {
  for (std::size_t k = 0; k < kSettingPairs.size(); ++k)
    if (kSettingPairs[k] == p) return k;
  throw InvalidArgument("setting pair must combine one A setting with one B setting");
}

inline std::string pair_name(std::size_t pair) {
  const auto& p = kSettingPairs.at(pair);
  return "(" + std::string(setting_name(p.alpha)) + "," + std::string(setting_name(p.beta)) + ")";
}

// Outcome cell of an atom within a pair: 2 b(i) + b(j).
inline constexpr std::size_t pair_cell(std::size_t atom, std::size_t pair) {
  const auto& p = kSettingPairs[pair];
  return static_cast<std::size_t>(2 * outcome_bit(atom, p.alpha) + outcome_bit(atom, p.beta));
}

class EprScenario {
 public:
  static constexpr std::size_t kAtoms = 16;

  static std::size_t index(int i, int ip, int j, int jp) {
    for (int s : {i, ip, j, jp})
      if (s != 1 && s != -1) throw InvalidArgument("outcomes must be +1 or -1");
    return static_cast<std::size_t>(8 * sign_bit(i) + 4 * sign_bit(ip) + 2 * sign_bit(j) + sign_bit(jp));
  }

  static std::string label(std::size_t atom) {
    std::string s(4, '+');
    for (int k = 0; k < 4; ++k)
      if ((atom >> (3 - k)) & 1U) s[static_cast<std::size_t>(k)] = '-';
    return s;
  }

  static const SpacePtr& space() {
    static const SpacePtr s = [] {
      std::vector<std::string> labels;
      for (std::size_t x = 0; x < kAtoms; ++x) labels.push_back(label(x));
      return SampleSpace::make(std::move(labels));
    }();
    return s;
  }

  static void require(const SpacePtr& sp, const char* what) {
    if (!same_space(sp, space()))
      throw SpaceMismatch(std::string(what) + ": expected the canonical 16-atom joint space");
  }

  // Event "setting s shows outcome v".
  static Event outcome_event(Setting s, int v) {
    Event e(space());
    for (std::size_t x = 0; x < kAtoms; ++x)
      if (outcome_sign(x, s) == v) e.insert(x);
    return e;
  }
};

using MarginalMatrix = Eigen::Matrix4cd;

struct MarginalBlock {
  std::size_t pair = 0;
  // Rows and columns indexed by the cell 2 b(i) + b(j).
  MarginalMatrix block = MarginalMatrix::Zero();

  double max_off_diagonal() const {
    double m = 0.0;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        if (r != c) m = std::max(m, std::abs(block(r, c)));
    return m;
  }
};

// p[pair][cell]; cell = 2 b(i) + b(j).
struct ExperimentalProbabilities {
  std::array<std::array<double, 4>, 4> p{};

  double operator()(std::size_t pair, int i, int j) const {
    return p.at(pair).at(static_cast<std::size_t>(2 * sign_bit(i) + sign_bit(j)));
  }
  double& at(std::size_t pair, int i, int j) {
    return p.at(pair).at(static_cast<std::size_t>(2 * sign_bit(i) + sign_bit(j)));
  }
  double block_total(std::size_t pair) const {
    double s = 0.0;
    for (double v : p.at(pair)) s += v;
    return s;
  }
  bool is_valid(double tolerance = 1e-9) const {
    for (std::size_t k = 0; k < 4; ++k) {
      if (std::abs(block_total(k) - 1.0) > tolerance) return false;
      for (double v : p[k])
        if (!(v >= -tolerance)) return false;
    }
    return true;
  }
};

inline MarginalBlock marginal(const DecoherenceFunctional& df, std::size_t pair) {
  EprScenario::require(df.space(), "marginal");
  if (pair >= 4) throw InvalidArgument("setting pair index out of range");
  MarginalBlock m;
  m.pair = pair;
  for (std::size_t x = 0; x < EprScenario::kAtoms; ++x)
    for (std::size_t y = 0; y < EprScenario::kAtoms; ++y)
      m.block(static_cast<int>(pair_cell(x, pair)), static_cast<int>(pair_cell(y, pair))) += df(x, y);
  return m;
}

inline std::array<MarginalBlock, 4> marginals(const DecoherenceFunctional& df) {
  return {marginal(df, 0), marginal(df, 1), marginal(df, 2), marginal(df, 3)};
}

inline ExperimentalProbabilities experimental_probabilities(const DecoherenceFunctional& df,
                                                            double tolerance = tol::kMarginal) {
  ExperimentalProbabilities out;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto m = marginal(df, k);
    const double off = m.max_off_diagonal();
    if (off > tolerance) throw MarginalsNotDiagonal(pair_name(k), off);
    for (int c = 0; c < 4; ++c) out.p[k][static_cast<std::size_t>(c)] = m.block(c, c).real();
  }
  return out;
}

// X(alpha,beta) = sum_{ij} i j p(alpha_i, beta_j).
inline double correlator(const ExperimentalProbabilities& p, std::size_t pair) {
  const auto& b = p.p.at(pair);
  return b[0] - b[1] - b[2] + b[3];
}

class SignPattern {
 public:
  // Signs for (a,b), (a',b), (a,b'), (a',b'); their product must be -1.
  explicit SignPattern(std::array<int, 4> signs) : signs_(signs) {
    int prod = 1;
    for (int s : signs_) {
      if (s != 1 && s != -1) throw InvalidArgument("sign pattern entries must be +1 or -1");
      prod *= s;
    }
    if (prod != -1) throw InvalidArgument("sign pattern needs one or three minus signs");
  }

  // Enumeration index = 2 * position + (overall sign negative).
  static SignPattern from_index(std::size_t index) {
    if (index >= 8) throw InvalidArgument("sign pattern index out of range");
    const std::size_t pos = index / 2;
    const int overall = (index % 2 == 0) ? 1 : -1;
    std::array<int, 4> s{overall, overall, overall, overall};
    s[pos] = -overall;
    return SignPattern(s);
  }

  static std::array<SignPattern, 8> all() {
    return {from_index(0), from_index(1), from_index(2), from_index(3),
            from_index(4), from_index(5), from_index(6), from_index(7)};
  }

  // Accepts "ab-", "a'b+", "apbp-" style names or four signs such as "+-++".
  static SignPattern parse(std::string_view text) {
    if (text.size() == 4 && text.find_first_not_of("+-") == std::string_view::npos) {
      std::array<int, 4> s{};
      for (std::size_t k = 0; k < 4; ++k) s[k] = text[k] == '+' ? 1 : -1;
      return SignPattern(s);
    }
    if (text.size() >= 3 && (text.back() == '+' || text.back() == '-')) {
      const std::string_view head = text.substr(0, text.size() - 1);
      for (std::size_t pos = 0; pos < 4; ++pos) {
        if (head == position_name(pos) || head == position_alias(pos))
          return from_index(2 * pos + (text.back() == '+' ? 1 : 0));
      }
    }
    throw InvalidArgument("unrecognised sign pattern '" + std::string(text) + "'");
  }

  const std::array<int, 4>& signs() const noexcept { return signs_; }
  int operator[](std::size_t pair) const { return signs_.at(pair); }

  std::size_t index() const {
    int minus = 0;
    for (int s : signs_) minus += s < 0 ? 1 : 0;
    const int odd = minus == 1 ? -1 : 1;  // the sign that appears once
    std::size_t pos = 0;
    while (signs_[pos] != odd) ++pos;
    return 2 * pos + (minus == 1 ? 0 : 1);
  }

  // "+-++" form.
  std::string str() const {
    std::string s;
    for (int v : signs_) s.push_back(v > 0 ? '+' : '-');
    return s;
  }

  // "a'b-" form: position of the odd sign and that sign.
  std::string name() const {
    const std::size_t i = index();
    return std::string(position_name(i / 2)) + (i % 2 == 0 ? "-" : "+");
  }

  friend bool operator==(const SignPattern&, const SignPattern&) = default;

 private:
  static std::string_view position_name(std::size_t pos) {
    static constexpr std::array<std::string_view, 4> names{"ab", "a'b", "ab'", "a'b'"};
    return names.at(pos);
  }
  static std::string_view position_alias(std::size_t pos) {
    static constexpr std::array<std::string_view, 4> names{"ab", "apb", "abp", "apbp"};
    return names.at(pos);
  }

  std::array<int, 4> signs_;
};

inline double chsh_q(const ExperimentalProbabilities& p, const SignPattern& pattern) {
  double q = 0.0;
  for (std::size_t k = 0; k < 4; ++k) q += pattern[k] * correlator(p, k);
  return q;
}

struct MaxChsh {
  SignPattern pattern = SignPattern::from_index(0);
  double value = 0.0;   // |Q|
  double signed_q = 0.0;
};

// Largest |Q| over the eight patterns; ties go to the earlier pattern.
inline MaxChsh max_chsh_q(const ExperimentalProbabilities& p) {
  MaxChsh best;
  bool first = true;
  for (const auto& s : SignPattern::all()) {
    const double q = chsh_q(p, s);
    if (first || std::abs(q) > best.value) {
      best.pattern = s;
      best.value = std::abs(q);
      best.signed_q = q;
      first = false;
    }
  }
  return best;
}

inline ExperimentalProbabilities classical_joint_marginals(const ClassicalMeasure& m,
                                                           double tolerance = tol::kNormalization) {
  EprScenario::require(m.space(), "classical_joint_marginals");
  if (!m.is_normalized(tolerance)) throw InvalidArgument("classical joint measure must be normalized");
  ExperimentalProbabilities out;
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t x = 0; x < EprScenario::kAtoms; ++x) out.p[k][pair_cell(x, k)] += m.weight(x);
  return out;
}

struct BoundCheck {
  MaxChsh q_max;
  bool chshb_satisfied = true;
  bool tsirelson_satisfied = true;
};

inline BoundCheck check_bounds(const ExperimentalProbabilities& p, double tolerance = 1e-9) {
  BoundCheck b;
  b.q_max = max_chsh_q(p);
  b.chshb_satisfied = b.q_max.value <= 2.0 + tolerance;
  b.tsirelson_satisfied = b.q_max.value <= 2.0 * std::sqrt(2.0) + tolerance;
  return b;
}

// value[setting][partner][outcome bit]: probability that `setting` shows the
// outcome when measured together with the partner's first (0) or second (1)
// setting on the other side.
struct OneSidedMarginals {
  std::array<std::array<std::array<double, 2>, 2>, 4> value{};

  double max_partner_gap() const {
    double g = 0.0;
    for (const auto& s : value)
      for (std::size_t o = 0; o < 2; ++o) g = std::max(g, std::abs(s[0][o] - s[1][o]));
    return g;
  }
};

inline OneSidedMarginals one_sided_marginals(const ExperimentalProbabilities& p) {
  OneSidedMarginals m;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& pr = kSettingPairs[k];
    const auto& blk = p.p[k];
    // A side: sum over j; B side: sum over i.
    const std::size_t a_partner = pr.beta == Setting::b ? 0 : 1;
    const std::size_t b_partner = pr.alpha == Setting::a ? 0 : 1;
    auto& av = m.value[static_cast<std::size_t>(pr.alpha)][a_partner];
    av[0] = blk[0] + blk[1];
    av[1] = blk[2] + blk[3];
    auto& bv = m.value[static_cast<std::size_t>(pr.beta)][b_partner];
    bv[0] = blk[0] + blk[2];
    bv[1] = blk[1] + blk[3];
  }
  return m;
}

inline bool check_nonsignaling(const ExperimentalProbabilities& p, double tolerance = tol::kMarginal) {
  return one_sided_marginals(p).max_partner_gap() <= tolerance;
}

}  // namespace qmt
