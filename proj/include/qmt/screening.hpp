#pragma once

// Models with explicit settings and a mutual past: atoms (alpha, i, beta, j, c)
// with alpha in {a, a'}, beta in {b, b'}, outcomes i, j = +-1 and c a past
// cell. Checks screening off (classical and quantal forms), builds the joint
// measure from a screening-off model, and builds screening-off models from a
// joint measure by fabricating a past that carries the four outcomes.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "qmt/epr.hpp"
#include "qmt/error.hpp"
#include "qmt/measure.hpp"
#include "qmt/positivity.hpp"
#include "qmt/random.hpp"

namespace qmt {

// mu(alpha & beta) for the four setting pairs, in kSettingPairs order.
struct SettingWeights {
  std::array<double, 4> w{0.25, 0.25, 0.25, 0.25};

  static SettingWeights uniform() { return {}; }

  // mu(a) = pa, mu(b) = pb with independent settings.
  static SettingWeights product(double pa, double pb) {
    return {{pa * pb, (1 - pa) * pb, pa * (1 - pb), (1 - pa) * (1 - pb)}};
  }

  void validate(double tolerance = tol::kNormalization) const {
    double s = 0.0;
    for (double v : w) {
      if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("setting weights must be positive");
      s += v;
    }
    if (std::abs(s - 1.0) > tolerance) throw InvalidArgument("setting weights must sum to 1");
  }

  double setting(Setting s) const {
    double t = 0.0;
    for (std::size_t k = 0; k < 4; ++k)
      if (kSettingPairs[k].alpha == s || kSettingPairs[k].beta == s) t += w[k];
    return t;
  }

  // mu(alpha & beta) = mu(alpha) mu(beta) for all four pairs.
  double product_residual() const {
    double r = 0.0;
    for (std::size_t k = 0; k < 4; ++k)
      r = std::max(r, std::abs(w[k] - setting(kSettingPairs[k].alpha) * setting(kSettingPairs[k].beta)));
    return r;
  }
};

class StructuredModel {
 public:
  using Measure = std::variant<ClassicalMeasure, DecoherenceFunctional>;

  StructuredModel(std::vector<std::string> past, Measure measure)
      : past_(std::move(past)), space_(make_space(past_)), measure_(std::move(measure)) {
    const SpacePtr& ms = std::visit([](const auto& m) -> const SpacePtr& { return m.space(); }, measure_);
    require_same_space(ms, space_, "StructuredModel");
  }

  static SpacePtr make_space(const std::vector<std::string>& past) {
    if (past.empty()) throw InvalidArgument("structured model needs at least one past cell");
    std::vector<std::string> labels;
    labels.reserve(16 * past.size());
    for (std::size_t pair = 0; pair < 4; ++pair)
      for (std::size_t cell = 0; cell < 4; ++cell)
        for (const auto& c : past) labels.push_back(atom_label(pair, cell, c));
    return SampleSpace::make(std::move(labels));
  }

  // e.g. "a'+b-|c0".
  static std::string atom_label(std::size_t pair, std::size_t cell, const std::string& past) {
    const auto& p = kSettingPairs.at(pair);
    std::string s(setting_name(p.alpha));
    s += (cell & 2U) ? '-' : '+';
    s += setting_name(p.beta);
    s += (cell & 1U) ? '-' : '+';
    return s + "|" + past;
  }

  std::size_t past_count() const noexcept { return past_.size(); }
  const std::vector<std::string>& past_labels() const noexcept { return past_; }
  const SpacePtr& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return space_->size(); }

  std::size_t atom(std::size_t pair, std::size_t cell, std::size_t c) const {
    if (pair >= 4 || cell >= 4 || c >= past_.size()) throw InvalidArgument("structured atom out of range");
    return (pair * 4 + cell) * past_.size() + c;
  }

  std::size_t atom(Setting alpha, int i, Setting beta, int j, std::size_t c) const {
    return atom(pair_index({alpha, beta}), static_cast<std::size_t>(2 * sign_bit(i) + sign_bit(j)), c);
  }

  bool is_classical() const noexcept { return std::holds_alternative<ClassicalMeasure>(measure_); }
  const Measure& measure() const noexcept { return measure_; }
  const ClassicalMeasure& classical() const {
    if (!is_classical()) throw InvalidArgument("model carries a decoherence functional, not a classical measure");
    return std::get<ClassicalMeasure>(measure_);
  }
  // The decoherence functional, or the diagonal embedding of a classical measure.
  DecoherenceFunctional functional() const {
    if (is_classical()) return DecoherenceFunctional::diagonal(classical());
    return std::get<DecoherenceFunctional>(measure_);
  }

  StructuredModel as_quantal() const { return StructuredModel(past_, functional()); }

  double mu(const Event& x) const {
    return std::visit([&](const auto& m) { return qmt::mu(m, x); }, measure_);
  }

  Event pair_event(std::size_t pair) const { return select([&](std::size_t p, std::size_t, std::size_t) { return p == pair; }); }
  Event past_event(std::size_t c) const { return select([&](std::size_t, std::size_t, std::size_t cc) { return cc == c; }); }
  Event setting_event(Setting s) const {
    return select([&](std::size_t p, std::size_t, std::size_t) { return uses(p, s); });
  }
  Event outcome_event(Setting s, int v) const {
    return select([&](std::size_t p, std::size_t cell, std::size_t) { return uses(p, s) && cell_sign(cell, s) == v; });
  }

  static bool uses(std::size_t pair, Setting s) { return kSettingPairs[pair].alpha == s || kSettingPairs[pair].beta == s; }
  static int cell_sign(std::size_t cell, Setting s) { return bit_sign(is_a_side(s) ? static_cast<int>(cell >> 1) : static_cast<int>(cell & 1U)); }

 private:
  template <class Pred>
  Event select(Pred pred) const {
    Event e(space_);
    for (std::size_t p = 0; p < 4; ++p)
      for (std::size_t cell = 0; cell < 4; ++cell)
        for (std::size_t c = 0; c < past_.size(); ++c)
          if (pred(p, cell, c)) e.insert(atom(p, cell, c));
    return e;
  }

  std::vector<std::string> past_;
  SpacePtr space_;
  Measure measure_;
};

struct ConditionResidual {
  std::string name;
  double residual = 0.0;
  bool checked = false;
  bool holds = true;
};

struct ClassicalScreeningReport {
  ConditionResidual outcome_screening{"outcome-screening"};
  ConditionResidual setting_screening{"setting-screening"};
  ConditionResidual setting_independence{"setting-independence"};
  ConditionResidual joint_setting_independence{"joint-setting-independence"};
  ConditionResidual staged_conditioning{"staged-conditioning"};
  bool minimalist = false;
  bool holds = false;

  std::vector<ConditionResidual> conditions() const {
    return {outcome_screening, setting_screening, setting_independence, joint_setting_independence,
            staged_conditioning};
  }
};

struct ScreeningOptions {
  double tolerance = tol::kScreening;
  // Treat the four setting pairs as separately conditioned tables and skip
  // every check that needs probabilities of the settings themselves.
  bool minimalist = false;
};

namespace detail {

// table[pair][cell][c] of atom weights.
using WeightTable = std::vector<std::array<std::array<double, 4>, 4>>;

inline WeightTable weight_table(const StructuredModel& m) {
  const auto& cm = m.classical();
  WeightTable t(m.past_count());
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t cell = 0; cell < 4; ++cell)
      for (std::size_t c = 0; c < m.past_count(); ++c) t[c][p][cell] = cm.weight(m.atom(p, cell, c));
  return t;
}

inline void note(ConditionResidual& r, double v) {
  r.checked = true;
  r.residual = std::max(r.residual, v);
}

}  // namespace detail

inline ClassicalScreeningReport check_classical_screening(const StructuredModel& m, const ScreeningOptions& opts = {}) {
  const auto t = detail::weight_table(m);
  const std::size_t nc = m.past_count();
  const double eps = opts.tolerance;
  ClassicalScreeningReport r;
  r.minimalist = opts.minimalist;

  std::vector<double> mc(nc, 0.0);
  for (std::size_t c = 0; c < nc; ++c) {
    for (const auto& blk : t[c])
      for (double v : blk) mc[c] += v;
    if (!(mc[c] > eps))
      throw ConditionUndefined("past cell '" + m.past_labels()[c] + "' has zero measure; omit it from the model");
  }

  if (opts.minimalist) {
    // Within each pair-conditioned table nu(i, j, c): nu(i,j|c) = nu(i|c) nu(j|c).
    for (std::size_t p = 0; p < 4; ++p)
      for (std::size_t c = 0; c < nc; ++c) {
        const auto& b = t[c][p];
        const double tot = b[0] + b[1] + b[2] + b[3];
        if (tot <= eps) continue;
        for (std::size_t cell = 0; cell < 4; ++cell) {
          const double pa = (cell & 2U) ? b[2] + b[3] : b[0] + b[1];
          const double pb = (cell & 1U) ? b[1] + b[3] : b[0] + b[2];
          detail::note(r.outcome_screening, std::abs(b[cell] / tot - (pa / tot) * (pb / tot)));
        }
      }
    r.outcome_screening.holds = r.outcome_screening.residual <= eps;
    r.holds = r.outcome_screening.holds;
    return r;
  }

  // Marginal pieces per past cell.
  auto setting_c = [&](Setting s, std::size_t c) {
    double v = 0.0;
    for (std::size_t p = 0; p < 4; ++p)
      if (StructuredModel::uses(p, s))
        for (double w : t[c][p]) v += w;
    return v;
  };
  auto outcome_c = [&](Setting s, int o, std::size_t c) {
    double v = 0.0;
    for (std::size_t p = 0; p < 4; ++p)
      if (StructuredModel::uses(p, s))
        for (std::size_t cell = 0; cell < 4; ++cell)
          if (StructuredModel::cell_sign(cell, s) == o) v += t[c][p][cell];
    return v;
  };
  double total = 0.0;
  for (double v : mc) total += v;
  std::array<double, 4> setting_total{};
  std::array<double, 4> pair_total{};
  for (std::size_t c = 0; c < nc; ++c) {
    for (auto s : kSettings) setting_total[static_cast<std::size_t>(s)] += setting_c(s, c);
    for (std::size_t p = 0; p < 4; ++p)
      for (double w : t[c][p]) pair_total[p] += w;
  }

  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t p = 0; p < 4; ++p) {
      const Setting al = kSettingPairs[p].alpha, be = kSettingPairs[p].beta;
      const double pair_c = t[c][p][0] + t[c][p][1] + t[c][p][2] + t[c][p][3];
      for (std::size_t cell = 0; cell < 4; ++cell) {
        const int i = bit_sign(static_cast<int>(cell >> 1)), j = bit_sign(static_cast<int>(cell & 1U));
        const double joint = t[c][p][cell] / mc[c];
        detail::note(r.outcome_screening, std::abs(joint - outcome_c(al, i, c) / mc[c] * outcome_c(be, j, c) / mc[c]));
        const double a_c = setting_c(al, c), b_c = setting_c(be, c);
        if (pair_c > eps && a_c > eps && b_c > eps)
          detail::note(r.staged_conditioning,
                       std::abs(t[c][p][cell] / pair_c - (outcome_c(al, i, c) / a_c) * (outcome_c(be, j, c) / b_c)));
      }
      detail::note(r.setting_screening, std::abs(pair_c / mc[c] - setting_c(al, c) / mc[c] * setting_c(be, c) / mc[c]));
      detail::note(r.joint_setting_independence, std::abs(pair_c - pair_total[p] / total * mc[c]));
    }
    for (auto s : kSettings)
      detail::note(r.setting_independence,
                   std::abs(setting_c(s, c) / mc[c] - setting_total[static_cast<std::size_t>(s)] / total));
  }
  for (auto* cond : {&r.outcome_screening, &r.setting_screening, &r.setting_independence,
                     &r.joint_setting_independence, &r.staged_conditioning})
    cond->holds = cond->residual <= eps;
  r.holds = r.outcome_screening.holds && r.setting_screening.holds && r.setting_independence.holds &&
            r.joint_setting_independence.holds && r.staged_conditioning.holds;
  return r;
}

// mu(alpha_i & beta_j) / mu(alpha & beta), reading mu off the diagonal.
inline ExperimentalProbabilities conditional_experimental_probabilities(const StructuredModel& m,
                                                                        double tolerance = tol::kNormalization) {
  ExperimentalProbabilities out;
  for (std::size_t p = 0; p < 4; ++p) {
    const double w = m.mu(m.pair_event(p));
    if (!(w > tolerance))
      throw ConditionUndefined("setting pair " + pair_name(p) + " has zero weight; probabilities undefined");
    for (std::size_t cell = 0; cell < 4; ++cell) {
      Event x(m.space());
      for (std::size_t c = 0; c < m.past_count(); ++c) x.insert(m.atom(p, cell, c));
      out.p[p][cell] = m.mu(x) / w;
    }
  }
  return out;
}

inline SettingWeights setting_weights(const StructuredModel& m) {
  SettingWeights w;
  for (std::size_t p = 0; p < 4; ++p) w.w[p] = m.mu(m.pair_event(p));
  return w;
}

// Joint measure on the 16-atom space from a screening-off model:
// sum_c mu(a_i|a&c) mu(a'_i'|a'&c) mu(b_j|b&c) mu(b'_j'|b'&c) mu(c).
inline ClassicalMeasure joint_from_screening(const StructuredModel& m, const ScreeningOptions& opts = {}) {
  const auto report = check_classical_screening(m, opts);
  if (!report.holds) throw ScreeningViolation("model does not satisfy screening off");
  const auto t = detail::weight_table(m);
  std::vector<double> w(16, 0.0);
  for (std::size_t c = 0; c < m.past_count(); ++c) {
    double mc = 0.0;
    for (const auto& b : t[c])
      for (double v : b) mc += v;
    // cond[setting][outcome bit] = mu(s_o | s & c)
    std::array<std::array<double, 2>, 4> cond{};
    for (auto s : kSettings) {
      double tot = 0.0;
      std::array<double, 2> part{};
      for (std::size_t p = 0; p < 4; ++p) {
        if (!StructuredModel::uses(p, s)) continue;
        for (std::size_t cell = 0; cell < 4; ++cell) {
          part[static_cast<std::size_t>(sign_bit(StructuredModel::cell_sign(cell, s)))] += t[c][p][cell];
          tot += t[c][p][cell];
        }
      }
      if (!(tot > opts.tolerance))
        throw ConditionUndefined("mu(" + std::string(setting_name(s)) + " & " + m.past_labels()[c] + ") vanishes");
      cond[static_cast<std::size_t>(s)] = {part[0] / tot, part[1] / tot};
    }
    for (std::size_t x = 0; x < 16; ++x) {
      double v = mc;
      for (auto s : kSettings) v *= cond[static_cast<std::size_t>(s)][static_cast<std::size_t>(outcome_bit(x, s))];
      w[x] += v;
    }
  }
  return ClassicalMeasure(EprScenario::space(), std::move(w));
}

// Quadruples with zero weight are left out of the fabricated past.
inline std::vector<std::size_t> fabricated_past(const std::vector<double>& weight) {
  std::vector<std::size_t> keep;
  for (std::size_t x = 0; x < 16; ++x)
    if (weight[x] > 0.0) keep.push_back(x);
  return keep;
}

inline std::vector<std::string> past_labels_for(const std::vector<std::size_t>& keep) {
  std::vector<std::string> labels;
  for (auto x : keep) labels.push_back(EprScenario::label(x));
  return labels;
}

namespace detail {

inline void require_product_weights(const SettingWeights& w) {
  w.validate();
  if (w.product_residual() > tol::kNormalization)
    throw InvalidArgument("setting weights must factorise as mu(alpha) mu(beta) for the augmented model to screen off");
}

}  // namespace detail

// Past cell K carries a full outcome quadruple; the pair (alpha, beta) shows
// the outcomes K assigns to alpha and beta, with weight w(pair) mu_hat(K).
inline StructuredModel augment_classical(const ClassicalMeasure& joint, const SettingWeights& w) {
  EprScenario::require(joint.space(), "augment_classical");
  if (!joint.is_normalized()) throw InvalidArgument("joint measure must be normalized");
  detail::require_product_weights(w);
  const auto keep = fabricated_past(joint.weights());
  const auto past = past_labels_for(keep);
  const auto space = StructuredModel::make_space(past);
  const std::size_t nc = keep.size();
  std::vector<double> weights(space->size(), 0.0);
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t c = 0; c < nc; ++c)
      weights[(p * 4 + pair_cell(keep[c], p)) * nc + c] = w.w[p] * joint.weight(keep[c]);
  return StructuredModel(past, ClassicalMeasure(space, std::move(weights)));
}

// D~[(pair, cell, K)][(pair', cell', P)] = [pair = pair'] [cell = K's cell]
// [cell' = P's cell] w(pair) D_hat(K; P).
inline StructuredModel augment_quantal(const DecoherenceFunctional& joint, const SettingWeights& w) {
  EprScenario::require(joint.space(), "augment_quantal");
  detail::require_product_weights(w);
  for (std::size_t k = 0; k < 4; ++k) {
    const double off = marginal(joint, k).max_off_diagonal();
    if (off > tol::kMarginal) throw MarginalsNotDiagonal(pair_name(k), off);
  }
  if (!check_strong_positivity(joint).holds) throw NotStronglyPositive("joint functional is not strongly positive");
  std::vector<double> diag(16);
  for (std::size_t x = 0; x < 16; ++x) diag[x] = joint(x, x).real() > tol::kWeakViolation ? 1.0 : 0.0;
  const auto keep = fabricated_past(diag);
  const auto past = past_labels_for(keep);
  const auto space = StructuredModel::make_space(past);
  const std::size_t nc = keep.size();
  const auto n = static_cast<Eigen::Index>(space->size());
  ComplexMatrix d = ComplexMatrix::Zero(n, n);
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t k = 0; k < nc; ++k)
      for (std::size_t q = 0; q < nc; ++q) {
        const auto r = static_cast<Eigen::Index>((p * 4 + pair_cell(keep[k], p)) * nc + k);
        const auto c = static_cast<Eigen::Index>((p * 4 + pair_cell(keep[q], p)) * nc + q);
        d(r, c) = w.w[p] * joint(keep[k], keep[q]);
      }
  return StructuredModel(past, DecoherenceFunctional(space, std::move(d)));
}

struct QuantalScreeningReport {
  ConditionResidual screening{"quantal-screening"};
  ConditionResidual product_form{"product-form"};
  ConditionResidual factorization{"rank-one-factorization"};
  ConditionResidual setting_independence{"quantal-setting-independence"};
  // Past-cell pairs with D(c; c') = 0, where only the product form constrains D.
  std::size_t vanishing_past_blocks = 0;
  bool minimalist = false;
  bool holds = false;

  std::vector<ConditionResidual> conditions() const {
    return {screening, product_form, factorization, setting_independence};
  }
};

// For every pair of past cells (c, c'), S[(pair, cell)][(pair', cell')] is
// the 16x16 block of D between c and c'. Its A- and B-marginals sum out the
// other side's setting and outcome. The screening condition compares
// S * D(c;c') with A (x) B entrywise; the product form asks that S, reshaped
// with rows (A event, A event') and columns (B event, B event'), has rank 1.
inline QuantalScreeningReport check_quantal_screening(const StructuredModel& m, const ScreeningOptions& opts = {}) {
  const auto df = m.functional();
  const std::size_t nc = m.past_count();
  const double eps = opts.tolerance;
  QuantalScreeningReport r;
  r.minimalist = opts.minimalist;

  // A event index u = 2 * (alpha is a') + b(i); B event index v likewise.
  auto a_index = [](std::size_t pair, std::size_t cell) {
    return 2 * static_cast<std::size_t>(kSettingPairs[pair].alpha == Setting::a_prime) + (cell >> 1);
  };
  auto b_index = [](std::size_t pair, std::size_t cell) {
    return 2 * static_cast<std::size_t>(kSettingPairs[pair].beta == Setting::b_prime) + (cell & 1U);
  };
  auto same_settings = [](std::size_t p, std::size_t q) { return p == q; };

  std::array<double, 4> setting_mu{};
  for (auto s : kSettings) setting_mu[static_cast<std::size_t>(s)] = m.mu(m.setting_event(s));

  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t cb = 0; cb < nc; ++cb) {
      Eigen::Matrix<Complex, 16, 16> s;
      for (std::size_t p = 0; p < 4; ++p)
        for (std::size_t cell = 0; cell < 4; ++cell)
          for (std::size_t q = 0; q < 4; ++q)
            for (std::size_t cell2 = 0; cell2 < 4; ++cell2)
              s(static_cast<int>(p * 4 + cell), static_cast<int>(q * 4 + cell2)) =
                  df(m.atom(p, cell, c), m.atom(q, cell2, cb));
      const Complex total = s.sum();
      if (std::abs(total) <= eps) ++r.vanishing_past_blocks;
      Eigen::Matrix4cd am = Eigen::Matrix4cd::Zero(), bm = Eigen::Matrix4cd::Zero();
      // t[(u, u')][(v, v')]
      Eigen::Matrix<Complex, 16, 16> t = Eigen::Matrix<Complex, 16, 16>::Zero();
      for (std::size_t p = 0; p < 4; ++p)
        for (std::size_t cell = 0; cell < 4; ++cell)
          for (std::size_t q = 0; q < 4; ++q)
            for (std::size_t cell2 = 0; cell2 < 4; ++cell2) {
              const Complex v = s(static_cast<int>(p * 4 + cell), static_cast<int>(q * 4 + cell2));
              const auto u = a_index(p, cell), ub = a_index(q, cell2);
              const auto w = b_index(p, cell), wb = b_index(q, cell2);
              am(static_cast<int>(u), static_cast<int>(ub)) += v;
              bm(static_cast<int>(w), static_cast<int>(wb)) += v;
              t(static_cast<int>(u * 4 + ub), static_cast<int>(w * 4 + wb)) = v;
            }
      for (std::size_t p = 0; p < 4; ++p)
        for (std::size_t cell = 0; cell < 4; ++cell)
          for (std::size_t q = 0; q < 4; ++q) {
            if (opts.minimalist && !same_settings(p, q)) continue;
            for (std::size_t cell2 = 0; cell2 < 4; ++cell2) {
              const Complex lhs = s(static_cast<int>(p * 4 + cell), static_cast<int>(q * 4 + cell2)) * total;
              const Complex rhs = am(static_cast<int>(a_index(p, cell)), static_cast<int>(a_index(q, cell2))) *
                                  bm(static_cast<int>(b_index(p, cell)), static_cast<int>(b_index(q, cell2)));
              detail::note(r.screening, std::abs(lhs - rhs));
            }
          }
      // Product form: every 2x2 minor of t vanishes.
      for (int u1 = 0; u1 < 16; ++u1)
        for (int u2 = u1 + 1; u2 < 16; ++u2)
          for (int v1 = 0; v1 < 16; ++v1)
            for (int v2 = v1 + 1; v2 < 16; ++v2)
              detail::note(r.product_form, std::abs(t(u1, v1) * t(u2, v2) - t(u2, v1) * t(u1, v2)));
      // Rank-one factorisation residual: everything beyond the top singular value.
      Eigen::JacobiSVD<Eigen::Matrix<Complex, 16, 16>> svd(t);
      const auto sv = svd.singularValues();
      double tail = 0.0;
      for (int k = 1; k < sv.size(); ++k) tail += sv(k) * sv(k);
      detail::note(r.factorization, std::sqrt(tail));
      if (!opts.minimalist) {
        for (std::size_t p = 0; p < 4; ++p) {
          Complex blk = 0.0;
          for (std::size_t cell = 0; cell < 4; ++cell)
            for (std::size_t cell2 = 0; cell2 < 4; ++cell2)
              blk += s(static_cast<int>(p * 4 + cell), static_cast<int>(p * 4 + cell2));
          const double ma = setting_mu[static_cast<std::size_t>(kSettingPairs[p].alpha)];
          const double mb = setting_mu[static_cast<std::size_t>(kSettingPairs[p].beta)];
          detail::note(r.setting_independence, std::abs(blk - ma * mb * total));
        }
      }
    }
  }
  for (auto* cond : {&r.screening, &r.product_form, &r.factorization, &r.setting_independence})
    cond->holds = cond->residual <= eps;
  r.holds = r.screening.holds && r.setting_independence.holds;
  return r;
}

// Screening-off model with independent settings, mu(alpha, i, beta, j, c) =
// mu(c) mu(alpha) mu(beta) q_A(i | alpha, c) q_B(j | beta, c).
inline StructuredModel random_screening_model(Rng& rng, std::size_t past_cells) {
  std::vector<std::string> past;
  for (std::size_t c = 0; c < past_cells; ++c) past.push_back("c" + std::to_string(c));
  const auto space = StructuredModel::make_space(past);
  const double pa = uniform(rng, 0.1, 0.9), pb = uniform(rng, 0.1, 0.9);
  const auto w = SettingWeights::product(pa, pb);
  auto pc = random_probability_vector(rng, past_cells);
  for (auto& v : pc) v = 0.5 * v + 0.5 / static_cast<double>(past_cells);  // keep every cell positive
  std::vector<double> weights(space->size(), 0.0);
  for (std::size_t c = 0; c < past_cells; ++c) {
    std::array<double, 4> up{};  // q(+ | setting, c)
    for (auto& u : up) u = uniform01(rng) < 0.2 ? std::round(uniform01(rng)) : uniform01(rng);
    for (std::size_t p = 0; p < 4; ++p)
      for (std::size_t cell = 0; cell < 4; ++cell) {
        const auto al = static_cast<std::size_t>(kSettingPairs[p].alpha);
        const auto be = static_cast<std::size_t>(kSettingPairs[p].beta);
        const double qa = (cell & 2U) ? 1 - up[al] : up[al];
        const double qb = (cell & 1U) ? 1 - up[be] : up[be];
        weights[(p * 4 + cell) * past_cells + c] = pc[c] * w.w[p] * qa * qb;
      }
  }
  return StructuredModel(past, ClassicalMeasure(space, std::move(weights)));
}

}  // namespace qmt
