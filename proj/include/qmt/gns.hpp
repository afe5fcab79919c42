#pragma once

// Inner-product space of a strongly positive decoherence functional: atom
// vectors |x> with <x|y> = D(x;y), obtained by spectral truncation of the
// atom matrix (the null space is dropped, which realises the quotient).

#include <array>
#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "qmt/eigen.hpp"
#include "qmt/epr.hpp"
#include "qmt/error.hpp"
#include "qmt/measure.hpp"

namespace qmt {

struct GnsVector {
  Eigen::VectorXcd coords;
};

inline Complex inner(const GnsVector& u, const GnsVector& v) {
  if (u.coords.size() != v.coords.size()) throw InvalidArgument("inner: dimension mismatch");
  return u.coords.dot(v.coords);  // conjugates the first argument
}

inline double norm(const GnsVector& u) { return u.coords.norm(); }

inline GnsVector operator+(const GnsVector& u, const GnsVector& v) { return {u.coords + v.coords}; }
inline GnsVector operator-(const GnsVector& u, const GnsVector& v) { return {u.coords - v.coords}; }

class GnsSpace {
 public:
  GnsSpace(DecoherenceFunctional df, Eigen::MatrixXcd embedding, Eigen::VectorXd kept, Eigen::VectorXd spectrum,
           double zero_tolerance)
      : df_(std::move(df)),
        embedding_(std::move(embedding)),
        kept_(std::move(kept)),
        spectrum_(std::move(spectrum)),
        zero_tolerance_(zero_tolerance) {}

  const DecoherenceFunctional& source() const noexcept { return df_; }
  Eigen::Index rank() const noexcept { return embedding_.rows(); }
  // r x n; column x is the atom vector |x>.
  const Eigen::MatrixXcd& embedding() const noexcept { return embedding_; }
  const Eigen::VectorXd& kept_eigenvalues() const noexcept { return kept_; }
  const Eigen::VectorXd& spectrum() const noexcept { return spectrum_; }
  double zero_tolerance() const noexcept { return zero_tolerance_; }

  GnsVector atom(std::size_t x) const {
    if (x >= df_.size()) throw InvalidArgument("atom index out of range");
    return {embedding_.col(static_cast<Eigen::Index>(x))};
  }

  // max |<x|y> - D(x;y)|.
  double reconstruction_error() const {
    if (embedding_.cols() == 0) return 0.0;
    return (embedding_.adjoint() * embedding_ - df_.matrix()).cwiseAbs().maxCoeff();
  }

 private:
  DecoherenceFunctional df_;
  Eigen::MatrixXcd embedding_;
  Eigen::VectorXd kept_;
  Eigen::VectorXd spectrum_;
  double zero_tolerance_;
};

// `zero_tolerance` <= 0 selects 1e-10 * max(1, max |D|).
inline GnsSpace gns_construct(const DecoherenceFunctional& df, double zero_tolerance = 0.0) {
  const double t = zero_tolerance > 0.0 ? zero_tolerance : eigen_zero_tolerance(df.matrix());
  const HermitianEigen eig = hermitian_eigen(df.matrix());
  const Eigen::Index n = eig.values.size();
  if (n > 0 && eig.values(0) < -t)
    throw NotStronglyPositive("decoherence functional is not strongly positive (eigenvalue " +
                              std::to_string(eig.values(0)) + ")");
  Eigen::Index first = 0;
  while (first < n && eig.values(first) <= t) ++first;
  const Eigen::Index r = n - first;
  Eigen::VectorXd kept = eig.values.tail(r);
  Eigen::MatrixXcd e(r, n);
  for (Eigen::Index k = 0; k < r; ++k)
    e.row(k) = std::sqrt(kept(k)) * eig.vectors.col(first + k).adjoint();
  Eigen::VectorXd spectrum = eig.values.unaryExpr([t](double v) { return (v < 0.0 && v >= -t) ? 0.0 : v; });
  return GnsSpace(df, std::move(e), std::move(kept), std::move(spectrum), t);
}

// sum_x s(x) |x>, where s(x) is the outcome sign of `setting` at atom x.
inline GnsVector setting_vector(const GnsSpace& space, Setting setting, double tolerance = tol::kMarginal) {
  const auto& df = space.source();
  EprScenario::require(df.space(), "setting_vector");
  for (std::size_t k = 0; k < 4; ++k) {
    const double off = marginal(df, k).max_off_diagonal();
    if (off > tolerance) throw MarginalsNotDiagonal(pair_name(k), off);
  }
  GnsVector v{Eigen::VectorXcd::Zero(space.rank())};
  for (std::size_t x = 0; x < EprScenario::kAtoms; ++x)
    v.coords += static_cast<double>(outcome_sign(x, setting)) * space.embedding().col(static_cast<Eigen::Index>(x));
  return v;
}

// ||u + v|| + ||u - v||, at most 2 sqrt2 for unit vectors.
inline double parallelogram_bound(const GnsVector& u, const GnsVector& v) { return norm(u + v) + norm(u - v); }

struct TsirelsonCertificate {
  std::array<double, 4> setting_norms{};             // a, a', b, b'
  std::array<Complex, 4> pair_inner{};               // <alpha|beta> per setting pair
  std::array<double, 4> correlators{};               // from probabilities
  Complex a_ap_inner{};                              // <a|a'>, unconstrained
  std::array<double, 8> q_by_pattern{};              // from inner products
  std::array<double, 8> q_from_probabilities{};
  double agreement_residual = 0.0;                   // max over patterns and correlators
  double parallelogram = 0.0;                        // ||a+a'|| + ||a-a'||
  double max_abs_q = 0.0;
  SignPattern best = SignPattern::from_index(0);
  double bound_margin = 0.0;                         // 2 sqrt2 - max |Q|
  bool holds = false;
};

inline TsirelsonCertificate tsirelson_certificate(const GnsSpace& space, double tolerance = 1e-9) {
  TsirelsonCertificate c;
  std::array<GnsVector, 4> vec;
  for (auto s : kSettings) {
    vec[static_cast<std::size_t>(s)] = setting_vector(space, s);
    c.setting_norms[static_cast<std::size_t>(s)] = norm(vec[static_cast<std::size_t>(s)]);
  }
  const auto p = experimental_probabilities(space.source());
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& pr = kSettingPairs[k];
    c.pair_inner[k] = inner(vec[static_cast<std::size_t>(pr.alpha)], vec[static_cast<std::size_t>(pr.beta)]);
    c.correlators[k] = correlator(p, k);
    c.agreement_residual = std::max(c.agreement_residual, std::abs(c.pair_inner[k] - c.correlators[k]));
  }
  c.a_ap_inner = inner(vec[0], vec[1]);
  const auto patterns = SignPattern::all();
  for (std::size_t n = 0; n < patterns.size(); ++n) {
    double q = 0.0;
    for (std::size_t k = 0; k < 4; ++k) q += patterns[n][k] * c.pair_inner[k].real();
    c.q_by_pattern[n] = q;
    c.q_from_probabilities[n] = chsh_q(p, patterns[n]);
    c.agreement_residual = std::max(c.agreement_residual, std::abs(q - c.q_from_probabilities[n]));
    if (n == 0 || std::abs(q) > c.max_abs_q) {
      c.max_abs_q = std::abs(q);
      c.best = patterns[n];
    }
  }
  c.parallelogram = parallelogram_bound(vec[0], vec[1]);
  c.bound_margin = 2.0 * std::sqrt(2.0) - c.max_abs_q;
  c.holds = c.agreement_residual <= tolerance && c.parallelogram <= 2.0 * std::sqrt(2.0) + tolerance &&
            c.max_abs_q <= c.parallelogram + tolerance;
  return c;
}

}  // namespace qmt
