#pragma once

// Weak positivity (mu(X) >= 0 on every event) and strong positivity (the
// atom matrix is positive semidefinite). For strong positivity the atom
// matrix suffices: the matrix D(X_i;X_j) over any collection of events is
// A M A^dagger with A the 0/1 incidence matrix, so it is PSD whenever M is.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qmt/eigen.hpp"
#include "qmt/measure.hpp"
#include "qmt/subset_scan.hpp"

namespace qmt {

enum class PositivityKind { weak, strong };

struct PositivityReport {
  PositivityKind kind = PositivityKind::weak;
  bool holds = true;
  bool boundary = false;
  double tolerance = 0.0;
  // weak: least mu over nonempty subsets; strong: least eigenvalue.
  double minimum = 0.0;
  // weak only: the lexicographically least violating event and its measure.
  std::optional<Event> witness;
  std::optional<double> witness_value;
  std::optional<Event> minimizer;
  std::uint64_t violations = 0;
  // weak: subsets with |mu| <= tol; strong: eigenvalues with |lambda| <= tol.
  std::uint64_t zero_count = 0;
  // strong only.
  Eigen::VectorXd spectrum;
  Signature signature;
};

inline Eigen::MatrixXd real_part(const ComplexMatrix& m) { return m.real(); }

inline PositivityReport check_weak_positivity(const DecoherenceFunctional& df,
                                              double tolerance = tol::kWeakViolation,
                                              unsigned threads = 0) {
  if (df.size() > kMaxScanAtoms) throw SpaceTooLarge("weak positivity scan supports at most 24 atoms");
  ScanOptions opts;
  opts.violation_tolerance = tolerance;
  opts.zero_tolerance = tolerance;
  opts.threads = threads;
  const SubsetScan scan = scan_subsets(real_part(df.matrix()), opts);

  PositivityReport r;
  r.kind = PositivityKind::weak;
  r.tolerance = tolerance;
  r.minimum = scan.minimum;
  r.minimizer = Event::from_mask(df.space(), scan.minimizer);
  r.violations = scan.violations;
  r.zero_count = scan.zero_count;
  r.holds = !scan.first_violation.has_value();
  if (!r.holds) {
    r.witness = Event::from_mask(df.space(), *scan.first_violation);
    r.witness_value = scan.first_violation_value;
  }
  r.boundary = r.holds && scan.zero_count > 0;
  return r;
}

namespace detail {

// Indices of atoms whose row (equivalently column) is not identically zero.
inline std::vector<Eigen::Index> support_atoms(const ComplexMatrix& m) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    if (m.row(i).cwiseAbs().maxCoeff() != 0.0) keep.push_back(i);
  return keep;
}

}  // namespace detail

// Spectrum of the atom matrix. Exactly-zero rows contribute exact zero
// eigenvalues, so they are dropped before the Jacobi sweep.
inline Eigen::VectorXd atom_spectrum(const ComplexMatrix& m) {
  const auto keep = detail::support_atoms(m);
  const auto k = static_cast<Eigen::Index>(keep.size());
  ComplexMatrix sub(k, k);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < k; ++c) sub(r, c) = m(keep[static_cast<std::size_t>(r)], keep[static_cast<std::size_t>(c)]);
  const Eigen::VectorXd nonzero = k > 0 ? hermitian_eigen(sub).values : Eigen::VectorXd();
  Eigen::VectorXd all = Eigen::VectorXd::Zero(m.rows());
  all.head(k) = nonzero;
  std::sort(all.begin(), all.end());
  return all;
}

// `tolerance` <= 0 selects the default relative zero tolerance.
inline PositivityReport check_strong_positivity(const DecoherenceFunctional& df, double tolerance = 0.0) {
  const double t = tolerance > 0.0 ? tolerance : eigen_zero_tolerance(df.matrix());
  PositivityReport r;
  r.kind = PositivityKind::strong;
  r.tolerance = t;
  r.spectrum = atom_spectrum(df.matrix());
  r.signature = signature_of(r.spectrum, t);
  r.minimum = r.spectrum.size() > 0 ? r.spectrum(0) : 0.0;
  r.zero_count = static_cast<std::uint64_t>(r.signature.zero);
  r.violations = static_cast<std::uint64_t>(r.signature.negative);
  r.holds = r.signature.negative == 0;
  if (!r.holds) r.witness_value = r.minimum;
  r.boundary = r.holds && r.signature.zero > 0;
  return r;
}

inline Signature eigensignature(const DecoherenceFunctional& df, double tolerance = 0.0) {
  const double t = tolerance > 0.0 ? tolerance : eigen_zero_tolerance(df.matrix());
  return signature_of(atom_spectrum(df.matrix()), t);
}

}  // namespace qmt
