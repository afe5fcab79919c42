#pragma once

// The largest CHSH value over Hermitian, normalised 16x16 functionals with
// diagonal setting-pair marginals and mu(X) >= 0 for every nonempty X. The
// weak-positivity family (65535 rows) is generated lazily from the subset
// scanner; an optional diagnostic adds v^dagger D v >= 0 cuts from negative
// eigenvectors, which pushes the optimum down toward the strongly positive
// bound.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmt/epr.hpp"
#include "qmt/positivity.hpp"
#include "qmt/simplex.hpp"
#include "qmt/subset_scan.hpp"

namespace qmt {

enum class LpMode { real, complex };

inline constexpr std::uint64_t kWeakFamilySize = (std::uint64_t{1} << EprScenario::kAtoms) - 1;

namespace detail {

struct EntryIndex {
  std::array<std::array<int, 16>, 16> re{};
  std::array<std::array<int, 16>, 16> im{};
};

inline EntryIndex entry_index(const LpProblem& p) {
  EntryIndex ix;
  for (auto& r : ix.re) r.fill(-1);
  for (auto& r : ix.im) r.fill(-1);
  for (std::size_t k = 0; k < p.entries.size(); ++k) {
    const auto& e = p.entries[k];
    (e.imaginary ? ix.im : ix.re)[e.bra][e.ket] = static_cast<int>(k);
  }
  return ix;
}

inline void require_matrix_lp(const LpProblem& p) {
  if (p.entries.empty()) throw InvalidArgument("LP does not parametrise a 16x16 matrix");
  for (const auto& e : p.entries)
    if (e.bra >= 16 || e.ket >= 16) throw InvalidArgument("LP entry metadata out of range");
}

// Coefficients of sum_{x,y} conj(v_x) v_y D(x;y) as a function of the variables.
inline Eigen::VectorXd quadratic_row(const LpProblem& p, const Eigen::VectorXcd& v) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size()));
  for (std::size_t k = 0; k < p.entries.size(); ++k) {
    const auto& e = p.entries[k];
    const Complex w = std::conj(v(static_cast<Eigen::Index>(e.bra))) * v(static_cast<Eigen::Index>(e.ket));
    if (e.bra == e.ket)
      row(static_cast<Eigen::Index>(k)) = w.real();
    else
      row(static_cast<Eigen::Index>(k)) = e.imaginary ? -2.0 * w.imag() : 2.0 * w.real();
  }
  return row;
}

}  // namespace detail

// Coefficients of mu(X) for the subset X given as a bit mask over atoms.
inline Eigen::VectorXd event_row(const LpProblem& p, std::uint64_t mask) {
  detail::require_matrix_lp(p);
  Eigen::VectorXcd v(16);
  for (int x = 0; x < 16; ++x) v(x) = ((mask >> x) & 1U) ? 1.0 : 0.0;
  return detail::quadratic_row(p, v);
}

inline ComplexMatrix candidate_matrix(const LpProblem& p, const Eigen::VectorXd& x) {
  detail::require_matrix_lp(p);
  ComplexMatrix d = ComplexMatrix::Zero(16, 16);
  for (std::size_t k = 0; k < p.entries.size(); ++k) {
    const auto& e = p.entries[k];
    const auto r = static_cast<Eigen::Index>(e.bra), c = static_cast<Eigen::Index>(e.ket);
    const double v = x(static_cast<Eigen::Index>(k));
    if (e.imaginary) {
      d(r, c) += Complex(0.0, v);
      d(c, r) -= Complex(0.0, v);
    } else {
      d(r, c) += v;
      if (r != c) d(c, r) += v;
    }
  }
  return d;
}

inline std::string mask_label(std::uint64_t mask) {
  std::string s = "{";
  for (std::size_t x = 0; x < 16; ++x)
    if ((mask >> x) & 1U) {
      if (s.size() > 1) s += ',';
      s += EprScenario::label(x);
    }
  return s + "}";
}

// Variables: D(x;x), Re D(x;y) for x < y, and in complex mode Im D(x;y).
// Equalities: total 1 and vanishing off-diagonal marginal entries. Seed
// inequalities: singletons, pairs and the sixteen setting-pair cells; the
// cells keep every correlator in [-1, 1] so the first relaxation is bounded.
//
// With entry_bound > 0 every variable is also boxed to [-bound, bound].
// Weak positivity alone leaves the entries unbounded (mu{x} = mu{y} = 100,
// mu{x,y} = 1 is allowed); the box keeps a tilted objective bounded. Since
// Q <= 4 already follows from the cell rows and the maximal example
// attains 4 with entries of size at most 1/2, a box of 1 leaves the optimum
// unchanged.
inline LpProblem build_max_q_lp(const SignPattern& pattern, LpMode mode = LpMode::real, double entry_bound = 0.0) {
  LpProblem p;
  for (std::size_t x = 0; x < 16; ++x)
    for (std::size_t y = x; y < 16; ++y) {
      p.entries.push_back({x, y, false});
      p.variables.push_back((x == y ? "D(" : "Re D(") + EprScenario::label(x) + ";" + EprScenario::label(y) + ")");
    }
  if (mode == LpMode::complex)
    for (std::size_t x = 0; x < 16; ++x)
      for (std::size_t y = x + 1; y < 16; ++y) {
        p.entries.push_back({x, y, true});
        p.variables.push_back("Im D(" + EprScenario::label(x) + ";" + EprScenario::label(y) + ")");
      }
  const auto n = static_cast<Eigen::Index>(p.size());
  const auto ix = detail::entry_index(p);
  auto cell_mask = [](std::size_t pair, std::size_t cell) {
    std::uint64_t m = 0;
    for (std::size_t x = 0; x < 16; ++x)
      if (pair_cell(x, pair) == cell) m |= std::uint64_t{1} << x;
    return m;
  };

  p.objective = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t c = 0; c < 4; ++c) {
      const double sgn = (c == 0 || c == 3) ? 1.0 : -1.0;
      p.objective += pattern[k] * sgn * event_row(p, cell_mask(k, c));
    }

  p.equalities.push_back({event_row(p, kWeakFamilySize), 1.0, "normalization"});
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t c1 = 0; c1 < 4; ++c1)
      for (std::size_t c2 = c1 + 1; c2 < 4; ++c2) {
        Eigen::VectorXd re = Eigen::VectorXd::Zero(n), im = Eigen::VectorXd::Zero(n);
        for (std::size_t x = 0; x < 16; ++x)
          for (std::size_t y = 0; y < 16; ++y) {
            if (pair_cell(x, k) != c1 || pair_cell(y, k) != c2) continue;
            const auto lo = std::min(x, y), hi = std::max(x, y);
            re(ix.re[lo][hi]) += 1.0;
            if (mode == LpMode::complex) im(ix.im[lo][hi]) += x < y ? 1.0 : -1.0;
          }
        const std::string where = pair_name(k) + "[" + std::to_string(c1) + "," + std::to_string(c2) + "]";
        p.equalities.push_back({re, 0.0, "Re marginal " + where});
        if (mode == LpMode::complex) p.equalities.push_back({im, 0.0, "Im marginal " + where});
      }

  for (std::size_t x = 0; x < 16; ++x)
    for (std::size_t y = x; y < 16; ++y) {
      const std::uint64_t m = (std::uint64_t{1} << x) | (std::uint64_t{1} << y);
      p.inequalities.push_back({event_row(p, m), 0.0, "mu" + mask_label(m)});
    }
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t c = 0; c < 4; ++c)
      p.inequalities.push_back({event_row(p, cell_mask(k, c)), 0.0, "mu" + mask_label(cell_mask(k, c))});
  if (entry_bound > 0.0)
    for (Eigen::Index k = 0; k < n; ++k) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e(k) = 1.0;
      const auto& name = p.variables[static_cast<std::size_t>(k)];
      p.inequalities.push_back({e, -entry_bound, name + " >= -bound"});
      p.inequalities.push_back({-e, -entry_bound, name + " <= bound"});
    }
  return p;
}

// Most violated weak-positivity row (ties: least mask), or nothing.
inline SeparationOracle weak_positivity_oracle(const LpProblem& p, double tolerance = 1e-9) {
  return [&p, tolerance](const Eigen::VectorXd& x) {
    std::vector<LinearConstraint> cuts;
    ScanOptions so;
    so.violation_tolerance = tolerance;
    const auto scan = scan_subsets(candidate_matrix(p, x).real(), so);
    if (scan.minimum < -tolerance)
      cuts.push_back({event_row(p, scan.minimizer), 0.0, "mu" + mask_label(scan.minimizer)});
    return cuts;
  };
}

// Weak-positivity cut plus v^dagger D v >= 0 for every eigenvector whose
// eigenvalue is below -tolerance.
inline SeparationOracle eigenvector_oracle(const LpProblem& p, double tolerance = 1e-9) {
  auto weak = weak_positivity_oracle(p, tolerance);
  return [&p, tolerance, weak](const Eigen::VectorXd& x) {
    auto cuts = weak(x);
    const auto eig = hermitian_eigen(candidate_matrix(p, x));
    for (Eigen::Index k = 0; k < eig.values.size(); ++k)
      if (eig.values(k) < -tolerance)
        cuts.push_back({detail::quadratic_row(p, eig.vectors.col(k)), 0.0, "eigenvector cut"});
    return cuts;
  };
}

struct CandidateAudit {
  double hermitian_residual = 0.0;
  double normalization_residual = 0.0;
  double marginal_off_diagonal = 0.0;
  PositivityReport weak;
  PositivityReport strong;
  ExperimentalProbabilities probabilities;
  std::array<double, 8> q_by_pattern{};
  SignPattern pattern = SignPattern::from_index(0);
  double q = 0.0;
  MaxChsh best;
  OneSidedMarginals one_sided;
  double nonsignaling_gap = 0.0;

  bool hermitian() const { return hermitian_residual <= tol::kHermitian; }
  bool normalized() const { return normalization_residual <= tol::kNormalization; }
  bool marginals_diagonal() const { return marginal_off_diagonal <= tol::kMarginal; }
  bool nonsignaling() const { return nonsignaling_gap <= tol::kMarginal; }
  // Every hypothesis of the strongly positive bound except strong positivity.
  bool admissible() const { return hermitian() && normalized() && marginals_diagonal() && weak.holds; }
};

inline CandidateAudit verify_candidate(const ComplexMatrix& m, const SignPattern& pattern,
                                       double weak_tolerance = 1e-9) {
  if (m.rows() != 16 || m.cols() != 16) throw InvalidArgument("candidate must be 16x16");
  CandidateAudit a;
  a.hermitian_residual = (m - m.adjoint()).cwiseAbs().maxCoeff();
  const ComplexMatrix h = 0.5 * (m + m.adjoint());
  const DecoherenceFunctional df(EprScenario::space(), h, std::numeric_limits<double>::infinity());
  a.normalization_residual = std::abs(df.matrix().sum() - Complex(1.0, 0.0));
  for (std::size_t k = 0; k < 4; ++k) {
    const auto blk = marginal(df, k);
    a.marginal_off_diagonal = std::max(a.marginal_off_diagonal, blk.max_off_diagonal());
    for (std::size_t c = 0; c < 4; ++c) a.probabilities.p[k][c] = blk.block(static_cast<int>(c), static_cast<int>(c)).real();
  }
  a.weak = check_weak_positivity(df, weak_tolerance);
  a.strong = check_strong_positivity(df);
  for (const auto& s : SignPattern::all()) a.q_by_pattern[s.index()] = chsh_q(a.probabilities, s);
  a.pattern = pattern;
  a.q = chsh_q(a.probabilities, pattern);
  a.best = max_chsh_q(a.probabilities);
  a.one_sided = one_sided_marginals(a.probabilities);
  a.nonsignaling_gap = a.one_sided.max_partner_gap();
  return a;
}

// The explicit weakly but not strongly positive functional with Q = 4 under (+,-,+,+).
inline DecoherenceFunctional section5_example() {
  const auto& s = EprScenario::space();
  auto at = [&](const char* label) { return static_cast<Eigen::Index>(*s->index_of(label)); };
  ComplexMatrix d = ComplexMatrix::Zero(16, 16);
  for (const char* x : {"----", "+-+-", "+--+", "-+-+"}) d(at(x), at(x)) = 0.5;
  const struct {
    const char* bra;
    const char* ket;
    double value;
  } off[] = {{"----", "---+", -0.25}, {"+---", "+-+-", -0.25}, {"-+--", "-+-+", 0.25}, {"++--", "---+", 0.25},
             {"++--", "+--+", -0.25}, {"++--", "-+-+", -0.25}, {"+-+-", "+--+", 0.25}, {"---+", "+--+", -0.25},
             {"---+", "-+-+", -0.25}, {"+--+", "-+-+", 0.25}};
  for (const auto& e : off) d(at(e.bra), at(e.ket)) = d(at(e.ket), at(e.bra)) = e.value;
  return DecoherenceFunctional(s, std::move(d));
}

struct MaxQOptions {
  LpMode mode = LpMode::real;
  bool eigenvector_cuts = false;  // diagnostic: approach strong positivity
  PricingRule pricing = PricingRule::hybrid;
  std::size_t max_rounds = 5000;
  double tolerance = 1e-9;
  double entry_bound = 1.0;
  double perturbation = 1e-7;
};

struct MaxQResult {
  SignPattern pattern = SignPattern::from_index(0);
  LpMode mode = LpMode::real;
  LpSolution solution;
  ComplexMatrix candidate;
  CandidateAudit audit;
  bool objective_monotone = true;
  // Every relaxation candidate above 2 sqrt 2 was checked for strong positivity.
  std::size_t candidates_above_tsirelson = 0;
  bool contrapositive_holds = true;
  // Final candidate passes every constraint of the full family.
  bool verified = false;
  double seconds = 0.0;
};

inline MaxQResult solve_max_q(const SignPattern& pattern, const MaxQOptions& opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  MaxQResult r;
  r.pattern = pattern;
  r.mode = opts.mode;
  const LpProblem problem = build_max_q_lp(pattern, opts.mode, opts.entry_bound);
  LpOptions lo;
  lo.pricing = opts.pricing;
  lo.max_rounds = opts.max_rounds;
  lo.feasibility_tolerance = opts.tolerance;
  lo.perturbation = opts.perturbation;
  lo.oracle = opts.eigenvector_cuts ? eigenvector_oracle(problem, opts.tolerance)
                                    : weak_positivity_oracle(problem, opts.tolerance);
  const double tsirelson = 2.0 * std::sqrt(2.0);
  double previous = std::numeric_limits<double>::infinity();
  lo.on_round = [&](const Eigen::VectorXd& x, const LpRound& round) {
    if (round.objective > previous + opts.tolerance) r.objective_monotone = false;
    previous = round.objective;
    if (round.objective > tsirelson + opts.tolerance) {
      ++r.candidates_above_tsirelson;
      const ComplexMatrix m = candidate_matrix(problem, x);
      if (atom_spectrum(0.5 * (m + m.adjoint()))(0) >= -eigen_zero_tolerance(m)) r.contrapositive_holds = false;
    }
  };
  r.solution = solve_lp(problem, lo);
  if (r.solution.status == LpStatus::optimal) {
    r.candidate = candidate_matrix(problem, r.solution.x);
    r.audit = verify_candidate(r.candidate, pattern, opts.tolerance);
    r.verified = r.solution.converged && r.audit.admissible() && r.solution.equality_residual <= 1e-8 &&
                 r.solution.inequality_violation <= 1e-8;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace qmt
