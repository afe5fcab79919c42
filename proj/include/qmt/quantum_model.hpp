#pragma once

// Joint decoherence functionals on the 16-atom space built from two spin-1/2
// particles. Basis |uu>, |ud>, |du>, |dd> with particle A as the left factor.
// For history operators C_x the functional is D(x;y) = Tr(C_x rho C_y^dagger).

#include <array>
#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "qmt/eigen.hpp"
#include "qmt/epr.hpp"
#include "qmt/error.hpp"
#include "qmt/measure.hpp"

namespace qmt {

using Vec3 = Eigen::Vector3d;

struct SpinDirections {
  Vec3 a, a_prime, b, b_prime;

  const Vec3& operator[](Setting s) const {
    switch (s) {
      case Setting::a: return a;
      case Setting::a_prime: return a_prime;
      case Setting::b: return b;
      case Setting::b_prime: return b_prime;
    }
    throw InvalidArgument("unknown setting");
  }

  void validate(double tolerance = 1e-12) const {
    for (auto s : kSettings)
      if (std::abs((*this)[s].norm() - 1.0) > tolerance)
        throw InvalidArgument("direction for setting " + std::string(setting_name(s)) + " is not a unit vector");
  }
};

// a.b = a.b' = a'.b = -a'.b' = 1/sqrt2 and a.a' = b.b' = 0.
inline SpinDirections standard_directions() {
  const double h = 1.0 / std::sqrt(2.0);
  return {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(h, h, 0), Vec3(h, -h, 0)};
}

namespace pauli {
inline Eigen::Matrix2cd x() { return (Eigen::Matrix2cd() << 0, 1, 1, 0).finished(); }
inline Eigen::Matrix2cd y() {
  const Complex i{0.0, 1.0};
  return (Eigen::Matrix2cd() << 0, -i, i, 0).finished();
}
inline Eigen::Matrix2cd z() { return (Eigen::Matrix2cd() << 1, 0, 0, -1).finished(); }

inline Eigen::Matrix2cd dot(const Vec3& n) { return n.x() * x() + n.y() * y() + n.z() * z(); }
}  // namespace pauli

inline Eigen::Matrix4cd kron(const Eigen::Matrix2cd& left, const Eigen::Matrix2cd& right) {
  Eigen::Matrix4cd out;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) out.block<2, 2>(2 * r, 2 * c) = left(r, c) * right;
  return out;
}

// (|ud> - |du>)/sqrt2.
inline Eigen::VectorXcd singlet_state() {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(4);
  psi(1) = 1.0 / std::sqrt(2.0);
  psi(2) = -1.0 / std::sqrt(2.0);
  return psi;
}

enum class Side { A, B };

inline Side side_of(Setting s) { return is_a_side(s) ? Side::A : Side::B; }

// (1 + v n.sigma)/2 on one particle, identity on the other.
inline Eigen::Matrix4cd spin_projector(const Vec3& n, int outcome, Side side) {
  if (std::abs(n.norm() - 1.0) > 1e-12) throw InvalidArgument("spin_projector: direction must be a unit vector");
  if (outcome != 1 && outcome != -1) throw InvalidArgument("spin_projector: outcome must be +1 or -1");
  const Eigen::Matrix2cd p = 0.5 * (Eigen::Matrix2cd::Identity() + static_cast<double>(outcome) * pauli::dot(n));
  return side == Side::A ? kron(p, Eigen::Matrix2cd::Identity()) : kron(Eigen::Matrix2cd::Identity(), p);
}

// proj[setting][outcome bit] on a common d-dimensional space.
struct ProjectorFamily {
  std::array<std::array<ComplexMatrix, 2>, 4> proj;

  const ComplexMatrix& operator()(Setting s, int outcome) const {
    return proj[static_cast<std::size_t>(s)][static_cast<std::size_t>(sign_bit(outcome))];
  }

  Eigen::Index dimension() const { return proj[0][0].rows(); }

  static ProjectorFamily from_directions(const SpinDirections& dirs) {
    dirs.validate(1e-12);
    ProjectorFamily f;
    for (auto s : kSettings)
      for (int bit = 0; bit < 2; ++bit)
        f.proj[static_cast<std::size_t>(s)][static_cast<std::size_t>(bit)] =
            spin_projector(dirs[s], bit_sign(bit), side_of(s));
    return f;
  }

  // Projector axioms, completeness, and [P^alpha_i, P^beta_j] = 0.
  void validate(double tolerance = 1e-10) const {
    const Eigen::Index d = dimension();
    for (auto s : kSettings) {
      const auto& p0 = proj[static_cast<std::size_t>(s)][0];
      const auto& p1 = proj[static_cast<std::size_t>(s)][1];
      for (const auto* p : {&p0, &p1}) {
        if (p->rows() != d || p->cols() != d) throw InvalidArgument("projector family: inconsistent dimensions");
        if (((*p) * (*p) - *p).cwiseAbs().maxCoeff() > tolerance ||
            ((*p) - p->adjoint()).cwiseAbs().maxCoeff() > tolerance)
          throw InvalidArgument("projector family: setting " + std::string(setting_name(s)) + " is not a projector");
      }
      if ((p0 + p1 - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff() > tolerance)
        throw InvalidArgument("projector family: outcomes of " + std::string(setting_name(s)) + " do not sum to 1");
    }
    for (auto sa : {Setting::a, Setting::a_prime})
      for (auto sb : {Setting::b, Setting::b_prime})
        for (int i : {1, -1})
          for (int j : {1, -1}) {
            const auto& pa = (*this)(sa, i);
            const auto& pb = (*this)(sb, j);
            if ((pa * pb - pb * pa).cwiseAbs().maxCoeff() > tolerance)
              throw InvalidArgument("projector family: A and B projectors do not commute");
          }
  }
};

namespace detail {

// D(x;y) = Tr(C_x rho C_y^dagger) for the 16 history operators.
inline DecoherenceFunctional df_from_histories(const ComplexMatrix& rho,
                                               const std::array<ComplexMatrix, 16>& chain) {
  std::array<ComplexMatrix, 16> left;
  for (std::size_t x = 0; x < 16; ++x) left[x] = chain[x] * rho;
  ComplexMatrix d(16, 16);
  for (std::size_t x = 0; x < 16; ++x)
    for (std::size_t y = 0; y < 16; ++y)
      d(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = (left[x] * chain[y].adjoint()).trace();
  // Rounding leaves ~1e-17 asymmetry; store the Hermitian part.
  ComplexMatrix h = (d + d.adjoint()) * 0.5;
  return DecoherenceFunctional(EprScenario::space(), std::move(h));
}

inline ComplexMatrix pure_density(const Eigen::VectorXcd& psi) {
  if (std::abs(psi.norm() - 1.0) > 1e-10) throw InvalidArgument("state vector must have unit norm");
  return psi * psi.adjoint();
}

// One side's operator for outcomes (first, second) of its two settings:
// w * P2 P1 + (1 - w) * P1 P2.
inline ComplexMatrix side_operator(const ProjectorFamily& f, Setting s1, int o1, Setting s2, int o2, double w) {
  const auto& p1 = f(s1, o1);
  const auto& p2 = f(s2, o2);
  return w * (p2 * p1) + (1.0 - w) * (p1 * p2);
}

inline DecoherenceFunctional build_weighted(const ComplexMatrix& rho, const ProjectorFamily& f, double wa, double wb) {
  std::array<ComplexMatrix, 16> chain;
  for (std::size_t x = 0; x < 16; ++x) {
    const int i = outcome_sign(x, Setting::a);
    const int ip = outcome_sign(x, Setting::a_prime);
    const int j = outcome_sign(x, Setting::b);
    const int jp = outcome_sign(x, Setting::b_prime);
    chain[x] = side_operator(f, Setting::b, j, Setting::b_prime, jp, wb) *
               side_operator(f, Setting::a, i, Setting::a_prime, ip, wa);
  }
  return df_from_histories(rho, chain);
}

}  // namespace detail

inline void validate_density(const ComplexMatrix& rho, double tolerance = 1e-10) {
  if (rho.rows() != rho.cols()) throw InvalidArgument("density matrix must be square");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tolerance) throw InvalidArgument("density matrix is not Hermitian");
  if (std::abs(rho.trace() - Complex(1.0, 0.0)) > tolerance) throw InvalidArgument("density matrix must have unit trace");
  if (hermitian_eigen(rho).values.minCoeff() < -tolerance)
    throw InvalidArgument("density matrix is not positive semidefinite");
}

// Projectors applied in the order a, a', b, b' on the ket side.
inline DecoherenceFunctional build_df_ordered(const Eigen::VectorXcd& state, const SpinDirections& dirs) {
  return detail::build_weighted(detail::pure_density(state), ProjectorFamily::from_directions(dirs), 1.0, 1.0);
}

// Each side symmetrised over the two orderings of its projectors.
inline DecoherenceFunctional build_df_sym(const Eigen::VectorXcd& state, const SpinDirections& dirs) {
  return detail::build_weighted(detail::pure_density(state), ProjectorFamily::from_directions(dirs), 0.5, 0.5);
}

// weight_a = 1 puts a before a' (the ordered form); 1/2 gives the symmetric form.
inline DecoherenceFunctional build_df_convex(const Eigen::VectorXcd& state, const SpinDirections& dirs,
                                             double weight_a, double weight_b) {
  for (double w : {weight_a, weight_b})
    if (!(w >= 0.0 && w <= 1.0)) throw InvalidArgument("ordering weights must lie in [0, 1]");
  return detail::build_weighted(detail::pure_density(state), ProjectorFamily::from_directions(dirs), weight_a,
                                weight_b);
}

inline DecoherenceFunctional build_df_commuting(const ComplexMatrix& rho, const ProjectorFamily& families) {
  families.validate();
  if (rho.rows() != families.dimension()) throw InvalidArgument("density matrix and projectors differ in dimension");
  validate_density(rho);
  return detail::build_weighted(rho, families, 1.0, 1.0);
}

// Which way the a' outcome labels are read in the closed form. `standard`
// agrees with standard_directions(); `reversed` is the same functional with
// the a' outcomes relabelled (equivalently a' -> -a').
enum class APrimeConvention { standard, reversed };

// Closed form of the symmetric functional for the singlet and the standard
// geometry, indexed by atoms x = (i,i',j,j') and y = (k,k',l,l').
inline double df_sym_closed_form(std::size_t x, std::size_t y,
                                 APrimeConvention convention = APrimeConvention::standard) {
  if (x >= 16 || y >= 16) throw InvalidArgument("atom index out of range");
  const double i = outcome_sign(x, Setting::a), ip = outcome_sign(x, Setting::a_prime);
  const double j = outcome_sign(x, Setting::b), jp = outcome_sign(x, Setting::b_prime);
  const double k = outcome_sign(y, Setting::a), kp = outcome_sign(y, Setting::a_prime);
  const double l = outcome_sign(y, Setting::b), lp = outcome_sign(y, Setting::b_prime);
  const double sigma = convention == APrimeConvention::standard ? -1.0 : 1.0;
  const double h = 1.0 / std::sqrt(2.0);
  const double v = (1 + i * k + ip * kp) * (1 + j * l + jp * lp) + sigma * (i * kp - ip * k) * (j * lp - jp * l) -
                   h * (i + k) * (j + l + jp + lp) + sigma * h * (ip + kp) * (j + l - jp - lp);
  return v / 256.0;
}

inline DecoherenceFunctional df_sym_closed_form_matrix(APrimeConvention convention = APrimeConvention::standard) {
  ComplexMatrix d(16, 16);
  for (std::size_t x = 0; x < 16; ++x)
    for (std::size_t y = 0; y < 16; ++y)
      d(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = df_sym_closed_form(x, y, convention);
  return DecoherenceFunctional(EprScenario::space(), std::move(d));
}

// The symmetric functional for the singlet in the standard geometry.
inline DecoherenceFunctional df_sym_standard() { return build_df_sym(singlet_state(), standard_directions()); }

}  // namespace qmt
