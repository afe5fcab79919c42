#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "qmt/error.hpp"

namespace qmt {

struct HermitianEigen {
  Eigen::VectorXd values;          // ascending
  Eigen::MatrixXcd vectors;        // column k pairs with values(k)
  int sweeps = 0;
};

struct JacobiOptions {
  int max_sweeps = 100;
  double hermitian_tolerance = 1e-10;
};

// Cyclic Jacobi diagonalisation of a Hermitian matrix. Each rotation first
// removes the phase of the (p,q) element, then applies a real Givens
// rotation; the accumulated unitary is returned in `vectors`.
inline HermitianEigen hermitian_eigen(const Eigen::MatrixXcd& m, const JacobiOptions& opts = {}) {
  using C = std::complex<double>;
  const Eigen::Index n = m.rows();
  if (m.cols() != n) throw InvalidArgument("hermitian_eigen: matrix must be square");
  if (!m.allFinite()) throw InvalidArgument("hermitian_eigen: non-finite entries");
  const double scale = std::max(1.0, n == 0 ? 0.0 : m.cwiseAbs().maxCoeff());
  if (n > 0 && (m - m.adjoint()).cwiseAbs().maxCoeff() > opts.hermitian_tolerance * scale)
    throw NotHermitian("hermitian_eigen: input is not Hermitian");

  Eigen::MatrixXcd a = (m + m.adjoint()) * 0.5;
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Identity(n, n);
  HermitianEigen out;

  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) s += std::norm(a(p, q));
    return std::sqrt(s);
  };
  const double frob = a.norm();
  const double target = std::numeric_limits<double>::epsilon() * std::max(frob, 1e-300);

  int sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    if (off_norm() <= target) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const C apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag == 0.0) continue;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        // Skip elements that are negligible against both diagonal entries.
        if (sweep > 3 && std::abs(app) + 100.0 * mag == std::abs(app) &&
            std::abs(aqq) + 100.0 * mag == std::abs(aqq)) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const C phase = apq / mag;  // e^{i arg a_pq}
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // U = diag(1, conj(phase)) * [[c, s], [-s, c]] on span{p,q}.
        const C upp = c;
        const C upq = s;
        const C uqp = -s * std::conj(phase);
        const C uqq = c * std::conj(phase);
        for (Eigen::Index k = 0; k < n; ++k) {
          const C akp = a(k, p);
          const C akq = a(k, q);
          a(k, p) = akp * upp + akq * uqp;
          a(k, q) = akp * upq + akq * uqq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const C apk = a(p, k);
          const C aqk = a(q, k);
          a(p, k) = std::conj(upp) * apk + std::conj(uqp) * aqk;
          a(q, k) = std::conj(upq) * apk + std::conj(uqq) * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (Eigen::Index k = 0; k < n; ++k) {
          const C vkp = v(k, p);
          const C vkq = v(k, q);
          v(k, p) = vkp * upp + vkq * uqp;
          v(k, q) = vkp * upq + vkq * uqq;
        }
      }
    }
  }
  if (off_norm() > target * 10.0 && off_norm() > 1e-14 * std::max(frob, 1.0))
    throw NonConvergence("hermitian_eigen: Jacobi sweep cap exceeded");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x).real() < a(y, y).real(); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]).real();
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  out.sweeps = sweep;
  return out;
}

struct Signature {
  int negative = 0;
  int zero = 0;
  int positive = 0;
  friend bool operator==(const Signature&, const Signature&) = default;
};

inline Signature signature_of(const Eigen::VectorXd& values, double tolerance) {
  Signature s;
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (values(k) < -tolerance)
      ++s.negative;
    else if (values(k) > tolerance)
      ++s.positive;
    else
      ++s.zero;
  }
  return s;
}

// Zero-classification tolerance scaled by the largest entry.
inline double eigen_zero_tolerance(const Eigen::MatrixXcd& m, double relative = tol::kEigenRelative) {
  const double mx = m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
  return relative * std::max(1.0, mx);
}

}  // namespace qmt
