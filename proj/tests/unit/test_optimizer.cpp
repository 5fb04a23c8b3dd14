#include "helpers.hpp"

using namespace risocc;

TEST(Retract, ZeroTangentKeepsPoint) {
  Rng rng{1};
  const auto x = PhaseVector::random(6, rng);
  EXPECT_LT((retract(x, CVec::Zero(6), 0.7).values() - x.values()).norm(), 1e-15);
}

TEST(Retract, QuarterTurnExample) {
  const auto x = PhaseVector::ones(1);
  CVec xi(1);
  xi(0) = cd(0.0, 1.0);
  const auto y = retract(x, xi, 1.0);
  EXPECT_NEAR(std::abs(y(0) - std::polar(1.0, kPi / 4.0)), 0.0, 1e-15);
}

TEST(Retract, OutputIsOnManifold) {
  Rng rng{2};
  for (int t = 0; t < 50; ++t) {
    const auto x = PhaseVector::random(30, rng);
    const CVec xi = 5.0 * test::random_vector(30, rng);
    EXPECT_LT(retract(x, xi, uniform(rng, 0.0, 3.0)).max_modulus_error(), 1e-15);
  }
}

TEST(Retract, HittingTheOriginIsPathological) {
  const auto x = PhaseVector::ones(2);
  CVec xi = CVec::Zero(2);
  xi(1) = -1.0;
  EXPECT_THROW(retract(x, xi, 1.0), PathologicalStep);
}

TEST(ProjectTangent, Examples) {
  Rng rng{3};
  const auto x = PhaseVector::random(10, rng);
  EXPECT_LT(project_tangent(x.values(), x).norm(), 1e-15);

  const CVec tangent = cd(0.0, 1.0) * x.values().cwiseProduct(test::random_matrix(10, 1, rng).col(0).real().cast<cd>());
  EXPECT_LT((project_tangent(tangent, x) - tangent).norm(), 1e-15);

  for (int t = 0; t < 20; ++t) {
    const CVec g = test::random_vector(10, rng);
    EXPECT_LT(tangency_error(project_tangent(g, x), x.values()), 1e-12);
  }
}

TEST(Armijo, ZeroDirectionStalls) {
  OptimizerConfig cfg;
  const auto x = PhaseVector::ones(3);
  const auto r = armijo_search(x, CVec::Zero(3), 0.0, 0.0, cfg, [](const PhaseVector&) { return 0.0; });
  EXPECT_TRUE(r.stalled);
  EXPECT_EQ(r.step, 0.0);
}

TEST(Armijo, ImmediateAcceptanceWhenIncreaseIsLarge) {
  OptimizerConfig cfg;
  const auto x = PhaseVector::ones(1);
  CVec xi(1);
  xi(0) = cd(0.0, 1.0);
  // f = arg(x): rises by pi/4 along this direction at alpha = 1.
  const auto r = armijo_search(x, xi, 0.0, 1.0, cfg, [](const PhaseVector& p) { return std::arg(p(0)); });
  EXPECT_FALSE(r.stalled);
  EXPECT_EQ(r.backtracks, 0);
  EXPECT_EQ(r.step, 1.0);
}

TEST(Armijo, QuadraticOnGeodesicGivesStrictIncrease) {
  // f(x) = -(arg x - 0.1)^2, maximised at angle 0.1; start at angle 0 with
  // tangent direction j, derivative 0.2.
  OptimizerConfig cfg;
  const auto x = PhaseVector::ones(1);
  CVec xi(1);
  xi(0) = cd(0.0, 1.0);
  auto f = [](const PhaseVector& p) { return -std::pow(std::arg(p(0)) - 0.1, 2); };
  const auto r = armijo_search(x, xi, f(x), 0.2, cfg, f);
  EXPECT_FALSE(r.stalled);
  EXPECT_GT(r.value, f(x));
  EXPECT_GT(r.backtracks, 0);
  const double theta = std::atan(r.step);
  EXPECT_GE(-std::pow(theta - 0.1, 2), f(x) + cfg.armijo_c * r.step * 0.2);
  // The previous (doubled) step would have failed the test.
  const double prev = std::atan(2.0 * r.step);
  EXPECT_LT(-std::pow(prev - 0.1, 2), f(x) + cfg.armijo_c * 2.0 * r.step * 0.2);
}

TEST(Armijo, DescentDirectionStalls) {
  OptimizerConfig cfg;
  const auto x = PhaseVector::ones(1);
  CVec xi(1);
  xi(0) = cd(0.0, 1.0);
  const auto r = armijo_search(x, xi, 0.0, -1.0, cfg, [](const PhaseVector&) { return 0.0; });
  EXPECT_TRUE(r.stalled);
}

TEST(PolakRibiere, Examples) {
  Rng rng{4};
  const CVec r_prev = test::random_vector(8, rng);
  const CVec xi_prev = test::random_vector(8, rng);
  const CVec r_next = test::random_vector(8, rng);

  EXPECT_EQ(polak_ribiere_beta(r_next, r_next, r_prev, xi_prev), 0.0);

  const CVec transported = test::random_vector(8, rng);
  const double num = (r_next - transported).dot(r_next).real();
  const double den = r_prev.dot(xi_prev).real();
  const double expected = std::max(0.0, num / den);
  EXPECT_NEAR(polak_ribiere_beta(transported, r_next, r_prev, xi_prev), expected, 1e-12 * std::max(1.0, expected));

  // Force a negative quotient.
  EXPECT_EQ(polak_ribiere_beta(2.0 * r_next, r_next, r_prev, r_prev), 0.0);
  EXPECT_EQ(polak_ribiere_beta(transported, r_next, CVec::Zero(8), xi_prev), 0.0);
}

TEST(Optimizer, HugeToleranceReturnsInitialisation) {
  const auto ch = test::random_channels(6, 3, 2, 5, 1e-3);
  OptimizerConfig cfg;
  cfg.grad_tol = 1e300;
  Rng rng{6};
  const auto init = PhaseVector::random(9, rng);
  const auto res = optimize_from(ch, ObjectiveConfig{}, cfg, init);
  EXPECT_EQ(res.trace.iterations(), 0);
  EXPECT_TRUE(res.trace.converged);
  EXPECT_EQ(res.phase.values(), init.values());
}

TEST(Optimizer, InvariantsHoldOnRandomScenes) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ch = test::random_channels(8, 5, 2, 100 + seed, 1e-3);
    OptimizerConfig cfg;
    cfg.max_iters = 100;
    cfg.seed = seed;
    ObjectiveConfig obj;
    const auto res = optimize(ch, obj, cfg);
    const auto& t = res.trace;
    EXPECT_LT(t.max_modulus_error, 1e-12);
    EXPECT_LT(t.max_tangency_error, 1e-10);
    EXPECT_TRUE(t.monotone);
    EXPECT_TRUE(t.restart_rule_held);
    for (std::size_t i = 1; i < t.records.size(); ++i) {
      EXPECT_GE(t.records[i].objective, t.records[i - 1].objective);
      EXPECT_GE(t.records[i].beta, 0.0);
      EXPECT_GT(t.records[i].step, 0.0);
    }
    EXPECT_NEAR(t.final_objective(), joint_objective(ch, res.phase, obj), 1e-9 * std::max(1.0, std::abs(t.final_objective())));
  }
}

TEST(Optimizer, RateOnlySingleUserImprovesChannelGain) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto ch = test::random_channels(4, 3, 1, 500 + seed, 1e-3);
    OptimizerConfig cfg;
    cfg.max_iters = 50;
    cfg.seed = seed;
    Rng rng{seed};
    const auto init = PhaseVector::random(9, rng);
    ObjectiveConfig obj;
    obj.rho = 1.0;
    const auto res = optimize_from(ch, obj, cfg, init);
    auto gain = [&](const PhaseVector& p) { return (ch.H * p.values().asDiagonal() * ch.g.col(0)).squaredNorm(); };
    EXPECT_GE(gain(res.phase), gain(init));
  }
}

TEST(Optimizer, TwoElementAllOnesChannelReachesCoherentSum) {
  // |phi_1 g_1 + phi_2 g_2| peaks at |g_1| + |g_2|.
  ChannelSet ch;
  ch.H = CMat::Ones(3, 2);
  ch.g.resize(2, 1);
  ch.g << cd(0.3, 0.4), cd(-0.1, 0.2);
  ch.A = CMat::Ones(2, 1);
  ch.powers = Eigen::VectorXd::Ones(1);
  ch.noise_power = 0.1;
  ObjectiveConfig obj;
  obj.rho = 1.0;
  const double best_gain = 3.0 * std::pow(std::abs(ch.g(0, 0)) + std::abs(ch.g(1, 0)), 2);
  const double best = std::log2(1.0 + best_gain / 0.1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    OptimizerConfig cfg;
    cfg.seed = seed;
    const auto res = optimize(ch, obj, cfg);
    EXPECT_NEAR(res.trace.final_objective(), best, 1e-6) << "seed " << seed;
  }
}

TEST(Optimizer, ConfigValidation) {
  OptimizerConfig c;
  c.armijo_c = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.armijo_shrink = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.max_iters = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Optimizer, SeededRunsAreReproducible) {
  const auto ch = test::random_channels(6, 3, 2, 9, 1e-3);
  OptimizerConfig cfg;
  cfg.max_iters = 40;
  cfg.seed = 42;
  const auto a = optimize(ch, ObjectiveConfig{}, cfg);
  const auto b = optimize(ch, ObjectiveConfig{}, cfg);
  EXPECT_EQ(a.phase.values(), b.phase.values());
  ASSERT_EQ(a.trace.records.size(), b.trace.records.size());
  for (std::size_t i = 0; i < a.trace.records.size(); ++i) {
    EXPECT_EQ(a.trace.records[i].objective, b.trace.records[i].objective);
  }
}
