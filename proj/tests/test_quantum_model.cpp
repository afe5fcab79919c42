#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qmt/epr.hpp"
#include "qmt/gns.hpp"
#include "qmt/positivity.hpp"
#include "qmt/quantum_model.hpp"
#include "qmt/random.hpp"

using namespace qmt;

namespace {

const double kRoot2 = std::sqrt(2.0);

double max_diff(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

SpinDirections random_directions(Rng& rng) {
  return {random_unit_vector(rng), random_unit_vector(rng), random_unit_vector(rng), random_unit_vector(rng)};
}

void expect_valid_joint(const DecoherenceFunctional& d) {
  EXPECT_LT(max_diff(d.matrix(), d.matrix().adjoint()), 1e-14);
  EXPECT_NEAR(d.total(), 1.0, 1e-10);
  EXPECT_TRUE(check_strong_positivity(d).holds);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_LT(marginal(d, k).max_off_diagonal(), 1e-9);
}

}  // namespace

TEST(StandardDirections, DotProducts) {
  const auto d = standard_directions();
  EXPECT_NEAR(d.a.dot(d.a_prime), 0.0, 1e-15);
  EXPECT_NEAR(d.b.dot(d.b_prime), 0.0, 1e-15);
  EXPECT_NEAR(d.a.dot(d.b), 1 / kRoot2, 1e-15);
  EXPECT_NEAR(d.a.dot(d.b_prime), 1 / kRoot2, 1e-15);
  EXPECT_NEAR(d.a_prime.dot(d.b), 1 / kRoot2, 1e-15);
  EXPECT_NEAR(d.a_prime.dot(d.b_prime), -1 / kRoot2, 1e-15);
  EXPECT_NO_THROW(d.validate());
}

TEST(Singlet, NormAndTotalSpin) {
  const auto psi = singlet_state();
  EXPECT_NEAR(psi.norm(), 1.0, 1e-15);
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  EXPECT_NEAR(std::abs(psi.dot(kron(pauli::z(), id) * psi)), 0.0, 1e-15);
  for (const auto& s : {pauli::x(), pauli::y(), pauli::z()}) {
    const Eigen::VectorXcd r = (kron(s, id) + kron(id, s)) * psi;
    EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SpinProjector, BasicProperties) {
  const Vec3 z(0, 0, 1);
  const auto up = spin_projector(z, 1, Side::A);
  Eigen::Matrix4cd expect = Eigen::Matrix4cd::Zero();
  expect(0, 0) = expect(1, 1) = 1.0;
  EXPECT_LT(max_diff(up, expect), 1e-15);
  const auto d = standard_directions();
  for (Side side : {Side::A, Side::B}) {
    const auto p = spin_projector(d.b, 1, side);
    const auto q = spin_projector(d.b, -1, side);
    EXPECT_LT(max_diff(p + q, Eigen::Matrix4cd::Identity()), 1e-15);
    EXPECT_LT(max_diff(p * p, p), 1e-15);
    EXPECT_LT(max_diff(p, p.adjoint()), 1e-15);
  }
  const auto pa = spin_projector(d.a, 1, Side::A);
  const auto pb = spin_projector(d.b_prime, -1, Side::B);
  EXPECT_EQ((pa * pb - pb * pa).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(spin_projector(Vec3(1, 1, 0), 1, Side::A), InvalidArgument);
}

TEST(BuildSym, MatchesClosedFormEverywhere) {
  const auto d = df_sym_standard();
  double worst = 0.0;
  for (std::size_t x = 0; x < 16; ++x)
    for (std::size_t y = 0; y < 16; ++y)
      worst = std::max(worst, std::abs(d(x, y) - df_sym_closed_form(x, y)));
  EXPECT_LT(worst, 1e-12);
}

TEST(BuildSym, MatchesKroneckerOracle) {
  const auto dirs = standard_directions();
  const auto ref = oracle::sym_singlet_kron(dirs.a, dirs.a_prime, dirs.b, dirs.b_prime);
  EXPECT_LT(max_diff(df_sym_standard().matrix(), ref), 1e-14);
  Rng rng(59);
  for (int t = 0; t < 10; ++t) {
    const auto r = random_directions(rng);
    EXPECT_LT(max_diff(build_df_sym(singlet_state(), r).matrix(),
                       oracle::sym_singlet_kron(r.a, r.a_prime, r.b, r.b_prime)),
              1e-14);
  }
}

TEST(ClosedForm, ReversedConventionIsFlippedAPrime) {
  auto dirs = standard_directions();
  dirs.a_prime = -dirs.a_prime;
  const auto flipped = build_df_sym(singlet_state(), dirs);
  double worst = 0.0;
  for (std::size_t x = 0; x < 16; ++x)
    for (std::size_t y = 0; y < 16; ++y)
      worst = std::max(worst, std::abs(flipped(x, y) - df_sym_closed_form(x, y, APrimeConvention::reversed)));
  EXPECT_LT(worst, 1e-12);
}

TEST(ClosedForm, CornerValuesAndSymmetry) {
  const double corner = (9.0 - 8.0 / kRoot2) / 256.0;
  EXPECT_NEAR(df_sym_closed_form(0, 0), corner, 1e-17);
  EXPECT_NEAR(df_sym_closed_form(15, 15), corner, 1e-17);
  for (auto conv : {APrimeConvention::standard, APrimeConvention::reversed})
    for (std::size_t x = 0; x < 16; ++x)
      for (std::size_t y = 0; y < 16; ++y) EXPECT_EQ(df_sym_closed_form(x, y, conv), df_sym_closed_form(y, x, conv));
}

TEST(BuildSym, SpectrumAndBound) {
  const auto d = df_sym_standard();
  expect_valid_joint(d);
  EXPECT_EQ(eigensignature(d), (Signature{0, 12, 4}));
  EXPECT_NEAR(max_chsh_q(experimental_probabilities(d)).value, 2 * kRoot2, 1e-14);
  EXPECT_EQ(gns_construct(d).rank(), 4);
}

TEST(BuildOrdered, ValidAndSharesMarginals) {
  const auto d = build_df_ordered(singlet_state(), standard_directions());
  expect_valid_joint(d);
  EXPECT_NEAR(d.matrix().sum().real(), 1.0, 1e-14);
  const auto p = experimental_probabilities(d);
  const auto q = experimental_probabilities(df_sym_standard());
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(p.p[k][c], q.p[k][c], 1e-14);
  // Frozen: D(++++;++++) from an independent operator-chain evaluation.
  EXPECT_NEAR(d(0, 0).real(), 0.018305826175840773, 1e-15);
}

TEST(BuildOrdered, MixedMarginalDecoheresOnB) {
  // sum over i', j', k, l' of D(ii'jj'; kk'll') vanishes unless j = l.
  const auto d = build_df_ordered(singlet_state(), standard_directions());
  for (int i : {1, -1})
    for (int j : {1, -1})
      for (int kp : {1, -1})
        for (int l : {1, -1}) {
          if (j == l) continue;
          Complex s = 0.0;
          for (int ip : {1, -1})
            for (int jp : {1, -1})
              for (int k : {1, -1})
                for (int lp : {1, -1}) s += d(EprScenario::index(i, ip, j, jp), EprScenario::index(k, kp, l, lp));
          EXPECT_LT(std::abs(s), 1e-10);
        }
}

TEST(BuildConvex, EndpointsAndInterior) {
  const auto psi = singlet_state();
  const auto dirs = standard_directions();
  EXPECT_LT(max_diff(build_df_convex(psi, dirs, 0.5, 0.5).matrix(), build_df_sym(psi, dirs).matrix()), 1e-12);
  EXPECT_LT(max_diff(build_df_convex(psi, dirs, 1.0, 1.0).matrix(), build_df_ordered(psi, dirs).matrix()), 1e-12);
  expect_valid_joint(build_df_convex(psi, dirs, 0.3, 0.7));
  EXPECT_THROW(build_df_convex(psi, dirs, -0.1, 0.5), InvalidArgument);
  EXPECT_THROW(build_df_convex(psi, dirs, 0.5, 1.5), InvalidArgument);
}

TEST(BuildCommuting, PureSingletEqualsOrdered) {
  const auto psi = singlet_state();
  const auto dirs = standard_directions();
  const auto d = build_df_commuting(psi * psi.adjoint(), ProjectorFamily::from_directions(dirs));
  EXPECT_LT(max_diff(d.matrix(), build_df_ordered(psi, dirs).matrix()), 1e-12);
}

TEST(BuildCommuting, MaximallyMixedIsUncorrelated) {
  const ComplexMatrix rho = ComplexMatrix::Identity(4, 4) * 0.25;
  const auto d = build_df_commuting(rho, ProjectorFamily::from_directions(standard_directions()));
  const auto p = experimental_probabilities(d);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(correlator(p, k), 0.0, 1e-15);
  EXPECT_NEAR(max_chsh_q(p).value, 0.0, 1e-15);
}

TEST(BuildCommuting, RandomInstancesObeyTsirelson) {
  Rng rng(61);
  for (int t = 0; t < 200; ++t) {
    const ComplexMatrix rho = random_density(rng, 4);
    const auto f = ProjectorFamily::from_directions(random_directions(rng));
    const auto d = build_df_commuting(rho, f);
    expect_valid_joint(d);
    const auto p = experimental_probabilities(d);
    // p(a_i, b_j) = Tr(rho P^a_i P^b_j).
    EXPECT_NEAR(p(0, 1, -1), (rho * f(Setting::a, 1) * f(Setting::b, -1)).trace().real(), 1e-12);
    EXPECT_LE(max_chsh_q(p).value, 2 * kRoot2 + 1e-9);
  }
}

TEST(BuildCommuting, RejectsBadInputs) {
  const auto f = ProjectorFamily::from_directions(standard_directions());
  EXPECT_THROW(build_df_commuting(ComplexMatrix::Identity(4, 4), f), InvalidArgument);
  ComplexMatrix neg = ComplexMatrix::Zero(4, 4);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  EXPECT_THROW(build_df_commuting(neg, f), InvalidArgument);
  auto g = f;
  // Put an A-side projector on the B slot so the families stop commuting.
  g.proj[2][0] = f.proj[0][0];
  g.proj[2][1] = f.proj[0][1];
  g.proj[3][0] = spin_projector(Vec3(0, 1, 0), 1, Side::A);
  g.proj[3][1] = spin_projector(Vec3(0, 1, 0), -1, Side::A);
  EXPECT_THROW(build_df_commuting(ComplexMatrix::Identity(4, 4) * 0.25, g), InvalidArgument);
}
