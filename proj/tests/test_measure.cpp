#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "qmt/epr.hpp"
#include "qmt/measure.hpp"
#include "qmt/quantum_model.hpp"
#include "qmt/random.hpp"

using namespace qmt;

namespace {

DecoherenceFunctional maximal_example() {
  return DecoherenceFunctional(EprScenario::space(), oracle::maximal_example_table());
}

}  // namespace

TEST(SampleSpace, RejectsEmptyAndDuplicateLabels) {
  EXPECT_THROW(SampleSpace::make({}), InvalidArgument);
  EXPECT_THROW(SampleSpace::make({"x", "y", "x"}), InvalidArgument);
  auto s = SampleSpace::make({"p", "q"});
  EXPECT_EQ(s->index_of("q"), 1u);
  EXPECT_FALSE(s->index_of("r").has_value());
}

TEST(Event, MaskRoundTripAndSetAlgebra) {
  auto s = SampleSpace::indexed(5);
  Event x = Event::from_mask(s, 0b10110);
  EXPECT_EQ(x.mask(), 0b10110u);
  EXPECT_EQ(x.count(), 3u);
  Event y(s, {0, 1});
  EXPECT_EQ((x & y).mask(), 0b00010u);
  EXPECT_EQ((x | y).mask(), 0b10111u);
  EXPECT_FALSE(x.disjoint_from(y));
  EXPECT_THROW(Event::from_mask(s, 0b100000), InvalidArgument);
  EXPECT_THROW(x.insert(5), InvalidArgument);
}

TEST(Event, DifferentSpacesDoNotMix) {
  Event x(SampleSpace::make({"u", "v"}), {0});
  Event y(SampleSpace::make({"u", "w"}), {0});
  EXPECT_THROW((void)(x | y), SpaceMismatch);
}

TEST(ClassicalMeasure, RejectsNegativeWeights) {
  auto s = SampleSpace::indexed(2);
  EXPECT_THROW(ClassicalMeasure(s, {0.5, -0.1}), AxiomViolation);
  EXPECT_THROW(ClassicalMeasure(s, {1.0}), InvalidArgument);
}

TEST(DecoherenceFunctional, AxiomChecks) {
  auto s = SampleSpace::indexed(2);
  ComplexMatrix m(2, 2);
  m << 0.5, Complex(0.1, 0.2), Complex(0.1, 0.2), 0.5;  // not Hermitian
  EXPECT_THROW(DecoherenceFunctional(s, m), AxiomViolation);
  m << -0.1, 0.0, 0.0, 1.1;
  EXPECT_THROW(DecoherenceFunctional(s, m), AxiomViolation);
  EXPECT_THROW(DecoherenceFunctional(s, ComplexMatrix::Identity(3, 3)), InvalidArgument);
}

TEST(Mu, EmptyFullAndSingleAtom) {
  const auto d = df_sym_standard();
  EXPECT_EQ(mu(d, Event(d.space())), 0.0);
  EXPECT_NEAR(mu(d, Event::full(d.space())), 1.0, 1e-12);
  // Frozen from the independent Kronecker-factor construction.
  const double corner = (9.0 - 8.0 / std::sqrt(2.0)) / 256.0;
  EXPECT_NEAR(mu(d, Event(d.space(), {15})), corner, 1e-14);
  EXPECT_NEAR(mu(d, Event(d.space(), {0})), corner, 1e-14);
  EXPECT_NEAR(corner, 0.0130591630879204, 1e-15);
}

TEST(Mu, SpaceMismatchThrows) {
  const auto d = df_sym_standard();
  EXPECT_THROW(mu(d, Event(SampleSpace::indexed(16), {0})), SpaceMismatch);
}

TEST(DfPair, MaximalExampleEntryAndTrivialCases) {
  const auto d = maximal_example();
  const auto s = d.space();
  EXPECT_EQ(df_pair(d, Event(s), Event::full(s)), Complex(0.0, 0.0));
  EXPECT_NEAR(std::abs(df_pair(d, Event::full(s), Event::full(s)) - 1.0), 0.0, 1e-14);
  const Complex v = df_pair(d, Event(s, {15}), Event(s, {14}));
  EXPECT_NEAR(v.real(), -0.25, 1e-15);
  EXPECT_NEAR(v.imag(), 0.0, 1e-15);
}

TEST(DfPair, HermitianAndBiadditiveOnRandomEvents) {
  Rng rng(11);
  auto s = SampleSpace::indexed(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = random_psd_df(rng, s, 1 + static_cast<Eigen::Index>(trial % 9));
    const auto mx = rng() & 0x1FF, my = rng() & 0x1FF;
    const auto mz = rng() & 0x1FF;
    const Event x = Event::from_mask(s, mx), y = Event::from_mask(s, my & ~mx), z = Event::from_mask(s, mz);
    EXPECT_LT(std::abs(df_pair(d, x, z) - std::conj(df_pair(d, z, x))), 1e-14);
    EXPECT_LT(std::abs(df_pair(d, x | y, z) - df_pair(d, x, z) - df_pair(d, y, z)), 1e-12);
    EXPECT_NEAR(df_pair(d, x, x).real(), mu(d, x), 1e-15);
    EXPECT_NEAR(mu(d, x), oracle::naive_mu(d.matrix(), x.mask()), 1e-12);
  }
}

TEST(Interference, FirstOrderIsMeasure) {
  Rng rng(3);
  auto s = SampleSpace::indexed(6);
  const auto d = random_psd_df(rng, s, 3);
  const std::vector<Event> one{Event(s, {1, 4})};
  EXPECT_NEAR(interference(d, one), mu(d, one[0]), 1e-15);
}

TEST(Interference, ClassicalSecondOrderVanishes) {
  Rng rng(5);
  auto s = SampleSpace::indexed(6);
  const auto m = random_classical_measure(rng, s);
  const std::vector<Event> ev{Event(s, {0, 2}), Event(s, {3}), Event(s, {5})};
  EXPECT_NEAR(interference(m, std::span(ev).first(2)), 0.0, 1e-15);
}

TEST(Interference, QuantalThirdOrderVanishesOnRandomTriples) {
  Rng rng(7);
  auto s = SampleSpace::indexed(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = random_psd_df(rng, s, 1 + static_cast<Eigen::Index>(trial % 6));
    std::vector<std::size_t> label(6);
    for (auto& l : label) l = uniform_index(rng, 4);
    std::vector<Event> ev(3, Event(s));
    for (std::size_t a = 0; a < 6; ++a)
      if (label[a] > 0) ev[label[a] - 1].insert(a);
    EXPECT_NEAR(interference(d, ev), 0.0, 1e-12);
  }
}

TEST(Interference, RejectsOverlap) {
  auto s = SampleSpace::indexed(3);
  const ClassicalMeasure m(s, {0.2, 0.3, 0.5});
  const std::vector<Event> ev{Event(s, {0, 1}), Event(s, {1})};
  EXPECT_THROW(interference(m, ev), NotDisjoint);
}

TEST(MeasureLevel, ClassicalIsLevelOne) {
  const ClassicalMeasure m(SampleSpace::indexed(4), {0.25, 0.25, 0.25, 0.25});
  const auto lv = measure_level(m, 3);
  ASSERT_TRUE(lv.level.has_value());
  EXPECT_EQ(*lv.level, 1);
  EXPECT_TRUE(lv.higher_vanishes);
}

TEST(MeasureLevel, RankOnePhaseVectorIsLevelTwo) {
  auto s = SampleSpace::indexed(2);
  Eigen::Vector2cd v(1.0 / std::sqrt(2.0), Complex(0.0, 1.0 / std::sqrt(2.0)));
  const DecoherenceFunctional d(s, v * v.adjoint());
  // v = (1, i)/sqrt2 gives D(0;1) = -i/2, so I_2 = 2 Re D(0;1) = 0.
  EXPECT_EQ(*measure_level(d, 3).level, 1);
  Eigen::Vector2cd w(1.0 / std::sqrt(2.0), std::polar(1.0 / std::sqrt(2.0), std::numbers::pi / 3));
  const DecoherenceFunctional e(s, w * w.adjoint());
  const auto lv = measure_level(e, 3);
  ASSERT_TRUE(lv.level.has_value());
  EXPECT_EQ(*lv.level, 2);
  EXPECT_NEAR(lv.residuals[0], 0.5, 1e-15);  // I_2 = 2 Re(e^{-i pi/3})/2
  EXPECT_TRUE(lv.higher_vanishes);
}

TEST(MeasureLevel, SymmetricFunctionalTooLargeForLevelScan) {
  EXPECT_THROW(measure_level(df_sym_standard(), 2), SpaceTooLarge);
}

TEST(MeasureLevel, MatchesBruteForceOnSmallSpaces) {
  Rng rng(19);
  auto s = SampleSpace::indexed(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto d = random_psd_df(rng, s, 2);
    const auto lv = measure_level(d, 2);
    EXPECT_NEAR(lv.residuals[0], oracle::brute_max_interference(d.matrix(), 2), 1e-12);
    ASSERT_TRUE(lv.level.has_value());
    EXPECT_EQ(*lv.level, 2);
    EXPECT_NEAR(lv.higher_residual, 0.0, 1e-12);
  }
}

TEST(ConditionalMu, DefinedAndUndefined) {
  auto s = SampleSpace::indexed(4);
  const ClassicalMeasure m(s, {0.1, 0.2, 0.3, 0.4});
  const Event y(s, {1, 3});
  EXPECT_DOUBLE_EQ(conditional_mu(m, y, y), 1.0);
  EXPECT_NEAR(conditional_mu(m, Event(s, {3}), y), 0.4 / 0.6, 1e-15);
  const ClassicalMeasure z(s, {0.5, 0.0, 0.5, 0.0});
  EXPECT_THROW(conditional_mu(z, Event(s, {0}), y), ConditionUndefined);
}

TEST(ConditionalMu, ProductMeasureIsIndependent) {
  // Two fair-ish bits: atoms 2*u + v with weights p_u q_v.
  auto s = SampleSpace::indexed(4);
  const double p = 0.3, q = 0.8;
  const ClassicalMeasure m(s, {p * q, p * (1 - q), (1 - p) * q, (1 - p) * (1 - q)});
  const Event u0(s, {0, 1}), v0(s, {0, 2});
  EXPECT_NEAR(conditional_mu(m, u0, v0), mu(m, u0), 1e-15);
}
