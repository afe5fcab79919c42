#pragma once

// Small dense linear programs:
//
//   maximize c.x  subject to  A x = b,  G x >= h,  x free.
//
// The solver works on the dual, min b.y - h.z s.t. A^T y - G^T z = c, z >= 0,
// with a revised primal simplex (explicit basis inverse, refactorised
// periodically). Every primal inequality is a dual column, so constraints
// found by a separation oracle are appended as columns and the current basis
// stays feasible. The primal point is read off the simplex multipliers.

#include <cmath>
#include <functional>
#include <cstdint>
#include <limits>
#include <random>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmt/error.hpp"

namespace qmt {

struct LinearConstraint {
  Eigen::VectorXd coefficients;
  double bound = 0.0;
  std::string label;
};

// Which matrix entry a variable stands for, when the LP parametrises a matrix.
struct VariableEntry {
  std::size_t bra = 0;
  std::size_t ket = 0;
  bool imaginary = false;
};

struct LpProblem {
  std::vector<std::string> variables;
  std::vector<VariableEntry> entries;  // empty or one per variable
  Eigen::VectorXd objective;                 // maximised
  std::vector<LinearConstraint> equalities;  // a.x == bound
  std::vector<LinearConstraint> inequalities;  // a.x >= bound

  std::size_t size() const noexcept { return variables.size(); }

  void validate() const {
    const auto n = static_cast<Eigen::Index>(variables.size());
    if (n == 0) throw InvalidArgument("LP has no variables");
    if (objective.size() != n) throw InvalidArgument("LP objective has the wrong length");
    if (!objective.allFinite()) throw InvalidArgument("LP objective is not finite");
    if (!entries.empty() && entries.size() != variables.size())
      throw InvalidArgument("LP entry metadata must cover every variable");
    for (const auto* family : {&equalities, &inequalities})
      for (const auto& c : *family) {
        if (c.coefficients.size() != n) throw InvalidArgument("LP constraint '" + c.label + "' has the wrong length");
        if (!c.coefficients.allFinite() || !std::isfinite(c.bound))
          throw InvalidArgument("LP constraint '" + c.label + "' is not finite");
      }
  }
};

enum class LpStatus { optimal, infeasible, unbounded };

inline const char* status_name(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
  }
  return "?";
}

// hybrid: most negative reduced cost, falling back to Bland's smallest-index
// rule while a run of degenerate pivots lasts.
enum class PricingRule { bland, dantzig, hybrid };

// One relaxation solve inside the cutting-plane loop.
struct LpRound {
  double objective = 0.0;
  std::size_t cuts_added = 0;
  double worst_violation = 0.0;  // most negative slack reported by the oracle, as a positive number
  std::size_t pivots = 0;
};

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  double objective = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd x;
  std::size_t iterations = 0;  // simplex pivots over all rounds
  std::vector<LpRound> rounds;
  std::vector<LinearConstraint> generated;  // cuts added by the oracle, in order
  double equality_residual = 0.0;
  double inequality_violation = 0.0;  // over the explicit and generated rows
  // False when the round cap stopped constraint generation early; x then
  // solves the last relaxation only.
  bool converged = true;
};

// Returns the constraints violated by x (empty when none).
using SeparationOracle = std::function<std::vector<LinearConstraint>(const Eigen::VectorXd& x)>;

struct LpOptions {
  PricingRule pricing = PricingRule::bland;
  double feasibility_tolerance = 1e-9;
  double pivot_tolerance = 1e-7;  // relative to the largest entry of the pivot column
  std::size_t max_pivots = 200000;  // per relaxation solve
  std::size_t stall_limit = 50;     // degenerate pivots before hybrid pricing turns to Bland
  std::size_t max_rounds = 5000;
  std::size_t refactor_every = 64;
  // Relative size of a seeded random tilt of the objective. The constraint
  // rows stay exact, so the returned point is feasible for the original
  // problem; the tilt breaks the heavy degeneracy of cutting-plane LPs.
  // The reported objective is the untilted one.
  double perturbation = 0.0;
  std::uint64_t perturbation_seed = 0x9E3779B97F4A7C15ULL;
  SeparationOracle oracle;
  // Called after every relaxation solve with the candidate point.
  std::function<void(const Eigen::VectorXd& x, const LpRound& round)> on_round;
};

namespace detail {

// min cost.w  s.t.  M w = rhs (rhs >= 0),  w >= 0, with columns appended over time.
class RevisedSimplex {
 public:
  RevisedSimplex(Eigen::VectorXd rhs, const LpOptions& opts) : rhs_(std::move(rhs)), opts_(opts) {
    const auto m = rhs_.size();
    sign_ = Eigen::VectorXd::Ones(m);
    for (Eigen::Index i = 0; i < m; ++i)
      if (rhs_(i) < 0) {
        sign_(i) = -1.0;
        rhs_(i) = -rhs_(i);
      }
    for (Eigen::Index i = 0; i < m; ++i) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
      e(i) = 1.0;
      push(std::move(e), 0.0, true);
    }
    basis_.resize(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) basis_[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i);
  }

  Eigen::Index rows() const noexcept { return rhs_.size(); }

  void add_column(const Eigen::VectorXd& col, double cost) { push(sign_.cwiseProduct(col), cost, false); }

  // A free variable as the twin columns (col, cost) and (-col, -cost). The
  // twin of a basic column has reduced cost exactly zero and is never priced.
  void add_free_column(const Eigen::VectorXd& col, double cost) {
    const std::size_t first = cols_.size();
    add_column(col, cost);
    add_column(-col, -cost);
    twin_[first] = first + 1;
    twin_[first + 1] = first;
  }

  LpStatus solve() {
    if (!phase_two_) {
      const auto s = run(true);
      if (s != LpStatus::optimal) throw LpError("phase one did not terminate at an optimum");
      if (objective(true) > opts_.feasibility_tolerance) return LpStatus::infeasible;
      phase_two_ = true;
    }
    return run(false);
  }

  // Multipliers of the original (unflipped) rows.
  Eigen::VectorXd multipliers() const { return sign_.cwiseProduct(duals(false)); }

  double objective(bool phase_one) const {
    double v = 0.0;
    for (std::size_t i = 0; i < basis_.size(); ++i) v += cost(basis_[i], phase_one) * xb_(static_cast<Eigen::Index>(i));
    return v;
  }

  std::size_t pivots() const noexcept { return pivots_; }

 private:
  void push(Eigen::VectorXd col, double cost, bool artificial) {
    cols_.push_back(std::move(col));
    cost_.push_back(cost);
    artificial_.push_back(artificial);
    in_basis_.push_back(artificial);
    twin_.push_back(std::nullopt);
  }

  double cost(std::size_t j, bool phase_one) const {
    if (phase_one) return artificial_[j] ? 1.0 : 0.0;
    return artificial_[j] ? 0.0 : cost_[j];
  }

  Eigen::VectorXd duals(bool phase_one) const {
    Eigen::VectorXd cb(rows());
    for (std::size_t i = 0; i < basis_.size(); ++i) cb(static_cast<Eigen::Index>(i)) = cost(basis_[i], phase_one);
    return binv_.transpose() * cb;
  }

  void refactor() {
    const auto m = rows();
    Eigen::MatrixXd b(m, m);
    for (Eigen::Index i = 0; i < m; ++i) b.col(i) = cols_[basis_[static_cast<std::size_t>(i)]];
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
    binv_ = lu.inverse();
    if (!binv_.allFinite()) throw LpError("basis matrix is singular");
    xb_ = binv_ * rhs_;
    const double residual = (b * xb_ - rhs_).cwiseAbs().maxCoeff();
    if (residual > 1e-6) {
      const double cond = b.cwiseAbs().rowwise().sum().maxCoeff() * binv_.cwiseAbs().rowwise().sum().maxCoeff();
      throw LpError("numerical failure: basis residual " + std::to_string(residual) + ", condition estimate " +
                    std::to_string(cond));
    }
    for (Eigen::Index i = 0; i < m; ++i)
      if (xb_(i) < 0 && xb_(i) > -opts_.feasibility_tolerance) xb_(i) = 0.0;
    since_refactor_ = 0;
  }

  LpStatus run(bool phase_one) {
    refactor();
    const double dtol = opts_.feasibility_tolerance;
    std::size_t local = 0, stalled = 0;
    for (;;) {
      const bool bland = opts_.pricing == PricingRule::bland ||
                         (opts_.pricing == PricingRule::hybrid && stalled >= opts_.stall_limit);
      if (since_refactor_ >= opts_.refactor_every) refactor();
      const Eigen::VectorXd pi = duals(phase_one);
      std::optional<std::size_t> entering;
      double best = -dtol;
      for (std::size_t j = 0; j < cols_.size(); ++j) {
        if (in_basis_[j] || (!phase_one && artificial_[j])) continue;
        if (twin_[j] && in_basis_[*twin_[j]]) continue;
        const double d = cost(j, phase_one) - pi.dot(cols_[j]);
        if (d < best) {
          entering = j;
          best = d;
          if (bland) break;
        }
      }
      if (!entering) return LpStatus::optimal;
      const Eigen::VectorXd u = binv_ * cols_[*entering];
      const double ptol = opts_.pivot_tolerance * std::max(1.0, u.cwiseAbs().maxCoeff());
      std::optional<Eigen::Index> leave;
      double ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < rows(); ++i) {
        const std::size_t bj = basis_[static_cast<std::size_t>(i)];
        double r;
        // A leftover artificial sits at zero and must stay there.
        if (!phase_one && artificial_[bj] && std::abs(u(i)) > ptol)
          r = 0.0;
        else if (u(i) > ptol)
          r = std::max(0.0, xb_(i)) / u(i);
        else
          continue;
        if (r < ratio - 1e-12 || (r <= ratio + 1e-12 && leave && bj < basis_[static_cast<std::size_t>(*leave)])) {
          ratio = std::min(ratio, r);
          leave = i;
        }
      }
      if (!leave) {
        // Recheck on a fresh factorisation before trusting an unbounded ray.
        if (since_refactor_ > 0) {
          refactor();
          continue;
        }
        return LpStatus::unbounded;
      }
      stalled = ratio * -best <= 1e-14 ? stalled + 1 : 0;
      pivot(*leave, *entering, u, ratio);
      ++pivots_;
      if (++local > opts_.max_pivots) throw LpError("pivot cap exceeded; the simplex may be cycling");
    }
  }

  void pivot(Eigen::Index r, std::size_t q, const Eigen::VectorXd& u, double theta) {
    xb_ -= theta * u;
    xb_(r) = theta;
    const double ur = u(r);
    binv_.row(r) /= ur;
    for (Eigen::Index i = 0; i < rows(); ++i)
      if (i != r && u(i) != 0.0) binv_.row(i) -= u(i) * binv_.row(r);
    in_basis_[basis_[static_cast<std::size_t>(r)]] = false;
    basis_[static_cast<std::size_t>(r)] = q;
    in_basis_[q] = true;
    ++since_refactor_;
  }

  Eigen::VectorXd rhs_;
  Eigen::VectorXd sign_;
  const LpOptions& opts_;
  std::vector<Eigen::VectorXd> cols_;
  std::vector<double> cost_;
  std::vector<bool> artificial_;
  std::vector<bool> in_basis_;
  std::vector<std::optional<std::size_t>> twin_;
  std::vector<std::size_t> basis_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd xb_;
  bool phase_two_ = false;
  std::size_t pivots_ = 0;
  std::size_t since_refactor_ = 0;
};

inline void measure_residuals(const LpProblem& p, LpSolution& s) {
  s.equality_residual = 0.0;
  s.inequality_violation = 0.0;
  for (const auto& c : p.equalities)
    s.equality_residual = std::max(s.equality_residual, std::abs(c.coefficients.dot(s.x) - c.bound));
  const std::vector<LinearConstraint>* families[] = {&p.inequalities, &s.generated};
  for (const auto* family : families)
    for (const auto& c : *family)
      s.inequality_violation = std::max(s.inequality_violation, c.bound - c.coefficients.dot(s.x));
}

}  // namespace detail

inline LpSolution solve_lp(const LpProblem& problem, const LpOptions& opts = {}) {
  problem.validate();
  Eigen::VectorXd tilted = problem.objective;
  if (opts.perturbation > 0.0) {
    std::mt19937_64 rng(opts.perturbation_seed);
    const double scale = opts.perturbation * std::max(1.0, problem.objective.cwiseAbs().maxCoeff());
    for (Eigen::Index k = 0; k < tilted.size(); ++k)
      tilted(k) += scale * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  }
  detail::RevisedSimplex simplex(tilted, opts);
  for (const auto& c : problem.equalities) simplex.add_free_column(c.coefficients, c.bound);
  for (const auto& c : problem.inequalities) simplex.add_column(-c.coefficients, -c.bound);

  LpSolution out;
  for (std::size_t round = 0;; ++round) {
    const std::size_t before = simplex.pivots();
    out.status = simplex.solve();
    out.iterations = simplex.pivots();
    if (out.status != LpStatus::optimal) {
      // Dual infeasible means the primal is unbounded and vice versa.
      out.status = out.status == LpStatus::infeasible ? LpStatus::unbounded : LpStatus::infeasible;
      return out;
    }
    out.x = simplex.multipliers();
    out.objective = problem.objective.dot(out.x);
    LpRound info{out.objective, 0, 0.0, simplex.pivots() - before};
    std::vector<LinearConstraint> cuts;
    if (opts.oracle) cuts = opts.oracle(out.x);
    for (const auto& c : cuts) {
      info.worst_violation = std::max(info.worst_violation, c.bound - c.coefficients.dot(out.x));
      simplex.add_column(-c.coefficients, -c.bound);
      out.generated.push_back(c);
    }
    info.cuts_added = cuts.size();
    out.rounds.push_back(info);
    if (opts.on_round) opts.on_round(out.x, info);
    if (cuts.empty()) break;
    if (round + 1 >= opts.max_rounds) {
      out.converged = false;
      break;
    }
  }
  detail::measure_residuals(problem, out);
  return out;
}

}  // namespace qmt
