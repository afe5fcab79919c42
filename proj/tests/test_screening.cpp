#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qmt/quantum_model.hpp"
#include "qmt/screening.hpp"

using namespace qmt;

namespace {

const double kRoot2 = std::sqrt(2.0);

// weights[(pair * 4 + cell) * |C| + c] from a callback.
template <class F>
StructuredModel classical_model(std::vector<std::string> past, F weight) {
  const auto space = StructuredModel::make_space(past);
  std::vector<double> w(space->size());
  const std::size_t nc = past.size();
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t cell = 0; cell < 4; ++cell)
      for (std::size_t c = 0; c < nc; ++c) w[(p * 4 + cell) * nc + c] = weight(p, cell, c);
  return StructuredModel(std::move(past), ClassicalMeasure(space, std::move(w)));
}

void expect_same_probabilities(const ExperimentalProbabilities& a, const ExperimentalProbabilities& b, double eps) {
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(a.p[k][c], b.p[k][c], eps) << k << "," << c;
}

}  // namespace

TEST(StructuredModel, LayoutAndEvents) {
  const auto m = classical_model({"x", "y"}, [](auto, auto, auto) { return 1.0 / 32; });
  EXPECT_EQ(m.size(), 32u);
  EXPECT_EQ(m.atom(Setting::a_prime, -1, Setting::b, 1, 1), (1 * 4 + 2) * 2 + 1u);
  EXPECT_EQ(m.space()->label(m.atom(Setting::a_prime, -1, Setting::b, 1, 1)), "a'-b+|y");
  EXPECT_EQ(m.setting_event(Setting::a).count(), 16u);
  EXPECT_EQ(m.outcome_event(Setting::b_prime, -1).count(), 8u);
  EXPECT_EQ(m.past_event(0).count(), 16u);
  EXPECT_NEAR(m.mu(m.pair_event(3)), 0.25, 1e-15);
  EXPECT_THROW(m.atom(4, 0, 0), InvalidArgument);
  EXPECT_THROW(StructuredModel::make_space({}), InvalidArgument);
}

TEST(SettingWeights, ProductAndValidation) {
  const auto w = SettingWeights::product(0.3, 0.6);
  EXPECT_NO_THROW(w.validate());
  EXPECT_NEAR(w.setting(Setting::a), 0.3, 1e-15);
  EXPECT_NEAR(w.setting(Setting::b_prime), 0.4, 1e-15);
  EXPECT_LT(w.product_residual(), 1e-15);
  const SettingWeights skew{{0.4, 0.1, 0.1, 0.4}};
  EXPECT_GT(skew.product_residual(), 0.1);
  EXPECT_THROW((SettingWeights{{0.5, 0.5, 0.0, 0.0}}).validate(), InvalidArgument);
  EXPECT_THROW((SettingWeights{{0.5, 0.5, 0.5, 0.5}}).validate(), InvalidArgument);
}

TEST(ClassicalScreening, UniformModelAndItsJoint) {
  const auto m = classical_model({"c"}, [](auto, auto, auto) { return 1.0 / 16; });
  const auto r = check_classical_screening(m);
  EXPECT_TRUE(r.holds);
  for (const auto& c : r.conditions()) EXPECT_TRUE(c.checked) << c.name;
  const auto j = joint_from_screening(m);
  for (double v : j.weights()) EXPECT_NEAR(v, 1.0 / 16, 1e-15);
}

TEST(ClassicalScreening, RandomModelsPassAndAgreeWithJoint) {
  Rng rng(101);
  for (int t = 0; t < 200; ++t) {
    const auto m = random_screening_model(rng, 1 + static_cast<std::size_t>(t % 5));
    const auto r = check_classical_screening(m);
    ASSERT_TRUE(r.holds) << r.outcome_screening.residual << " " << r.setting_independence.residual;
    const auto j = joint_from_screening(m);
    EXPECT_NEAR(j.total(), 1.0, 1e-12);
    const auto p = conditional_experimental_probabilities(m);
    expect_same_probabilities(p, classical_joint_marginals(j), 1e-10);
    EXPECT_TRUE(check_bounds(p).chshb_satisfied);
  }
}

TEST(ClassicalScreening, CorrelatedOutcomesFail) {
  // One past cell, outcomes perfectly correlated in every pair.
  const auto m = classical_model({"c"}, [](auto, std::size_t cell, auto) { return cell == 0 || cell == 3 ? 0.125 : 0.0; });
  const auto r = check_classical_screening(m);
  EXPECT_FALSE(r.holds);
  EXPECT_FALSE(r.outcome_screening.holds);
  EXPECT_NEAR(r.outcome_screening.residual, 0.0625, 1e-15);
  EXPECT_TRUE(r.setting_screening.holds);
  EXPECT_THROW(joint_from_screening(m), ScreeningViolation);
}

TEST(ClassicalScreening, SettingsCorrelatedWithPastFail) {
  // Cell x prefers setting a, cell y prefers a'.
  const auto m = classical_model({"x", "y"}, [](std::size_t p, auto, std::size_t c) {
    const bool a = kSettingPairs[p].alpha == Setting::a;
    return (a == (c == 0) ? 0.3 : 0.2) / 8.0;
  });
  const auto r = check_classical_screening(m);
  EXPECT_FALSE(r.holds);
  EXPECT_FALSE(r.setting_independence.holds);
  EXPECT_NEAR(r.setting_independence.residual, 0.1, 1e-12);
  EXPECT_FALSE(r.joint_setting_independence.holds);
  EXPECT_TRUE(r.outcome_screening.holds);
}

TEST(ClassicalScreening, ZeroPastCellIsRejected) {
  const auto m = classical_model({"x", "empty"}, [](auto, auto, std::size_t c) { return c == 0 ? 1.0 / 16 : 0.0; });
  EXPECT_THROW(check_classical_screening(m), ConditionUndefined);
}

TEST(ClassicalScreening, MinimalistIgnoresSettingWeights) {
  // Outcomes screen off within each pair, but the pair weights do not factor.
  const std::array<double, 4> pw{0.4, 0.1, 0.1, 0.4};
  const auto m = classical_model({"x", "y"}, [&](std::size_t p, auto, std::size_t c) {
    return pw[p] * (c == 0 ? 0.7 : 0.3) / 4.0;
  });
  EXPECT_FALSE(check_classical_screening(m).holds);
  const auto r = check_classical_screening(m, {.minimalist = true});
  EXPECT_TRUE(r.holds);
  EXPECT_TRUE(r.minimalist);
  EXPECT_FALSE(r.setting_independence.checked);
}

TEST(AugmentClassical, RoundTripRecoversJoint) {
  Rng rng(103);
  for (int t = 0; t < 50; ++t) {
    const auto joint = random_classical_measure(rng, EprScenario::space());
    const auto w = SettingWeights::product(uniform(rng, 0.1, 0.9), uniform(rng, 0.1, 0.9));
    const auto m = augment_classical(joint, w);
    ASSERT_TRUE(check_classical_screening(m).holds);
    expect_same_probabilities(conditional_experimental_probabilities(m), classical_joint_marginals(joint), 1e-12);
    const auto back = joint_from_screening(m);
    for (std::size_t x = 0; x < 16; ++x) EXPECT_NEAR(back.weight(x), joint.weight(x), 1e-12);
  }
}

TEST(AugmentClassical, RejectsNonProductWeights) {
  const ClassicalMeasure joint(EprScenario::space(), std::vector<double>(16, 1.0 / 16));
  EXPECT_THROW(augment_classical(joint, SettingWeights{{0.4, 0.1, 0.1, 0.4}}), InvalidArgument);
}

TEST(QuantalScreening, DiagonalEmbeddingOfScreeningModel) {
  Rng rng(107);
  for (int t = 0; t < 20; ++t) {
    const auto m = random_screening_model(rng, 1 + static_cast<std::size_t>(t % 4)).as_quantal();
    const auto r = check_quantal_screening(m);
    EXPECT_TRUE(r.holds) << r.screening.residual << " " << r.setting_independence.residual;
    EXPECT_TRUE(r.product_form.holds);
    EXPECT_TRUE(r.factorization.holds);
  }
}

TEST(QuantalScreening, DiagonalEmbeddingOfCorrelatedModelFails) {
  const auto m = classical_model({"c"}, [](auto, std::size_t cell, auto) { return cell == 0 || cell == 3 ? 0.125 : 0.0; });
  const auto r = check_quantal_screening(m.as_quantal());
  EXPECT_FALSE(r.holds);
  EXPECT_FALSE(r.screening.holds);
  EXPECT_FALSE(r.product_form.holds);
}

TEST(AugmentQuantal, SymmetricFunctional) {
  const auto joint = df_sym_standard();
  const auto m = augment_quantal(joint, SettingWeights::uniform());
  EXPECT_EQ(m.size(), 256u);
  const auto r = check_quantal_screening(m);
  EXPECT_TRUE(r.holds);
  EXPECT_LT(r.screening.residual, 1e-10);
  EXPECT_LT(r.setting_independence.residual, 1e-10);
  EXPECT_LT(r.product_form.residual, 1e-10);
  EXPECT_LT(r.factorization.residual, 1e-10);
  EXPECT_TRUE(check_strong_positivity(m.functional()).holds);
  const auto p = conditional_experimental_probabilities(m);
  expect_same_probabilities(p, experimental_probabilities(joint), 1e-12);
  EXPECT_NEAR(max_chsh_q(p).value, 2 * kRoot2, 1e-12);
}

TEST(AugmentQuantal, RandomCommutingModels) {
  Rng rng(109);
  for (int t = 0; t < 10; ++t) {
    const auto joint = build_df_commuting(
        random_density(rng, 4), ProjectorFamily::from_directions({random_unit_vector(rng), random_unit_vector(rng),
                                                                  random_unit_vector(rng), random_unit_vector(rng)}));
    const auto m = augment_quantal(joint, SettingWeights::product(uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8)));
    const auto r = check_quantal_screening(m);
    EXPECT_TRUE(r.holds) << r.screening.residual;
    expect_same_probabilities(conditional_experimental_probabilities(m), experimental_probabilities(joint), 1e-10);
  }
}

TEST(AugmentQuantal, RejectsBadJoints) {
  const DecoherenceFunctional five(EprScenario::space(), oracle::maximal_example_table());
  EXPECT_THROW(augment_quantal(five, SettingWeights::uniform()), NotStronglyPositive);
  ComplexMatrix m = ComplexMatrix::Identity(16, 16) / 16.0;
  m(0, 15) = m(15, 0) = 0.01;
  EXPECT_THROW(augment_quantal(DecoherenceFunctional(EprScenario::space(), m), SettingWeights::uniform()),
               MarginalsNotDiagonal);
  EXPECT_THROW(augment_quantal(df_sym_standard(), SettingWeights{{0.4, 0.1, 0.1, 0.4}}), InvalidArgument);
}
