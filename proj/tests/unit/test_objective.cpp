#include "helpers.hpp"
#include "oracle.hpp"

using namespace risocc;

namespace {

CVec random_phase(Eigen::Index n, std::uint64_t seed) {
  Rng rng{seed};
  return PhaseVector::random(n, rng).values();
}

}  // namespace

TEST(Objective, CombinerExamples) {
  CVec v = CVec::Zero(4);
  v(0) = 2.0;
  const CVec w = combiner(v);
  EXPECT_NEAR(std::abs(w(0) - cd(1.0, 0.0)), 0.0, 1e-15);
  EXPECT_NEAR(w.norm(), 1.0, 1e-15);

  Rng rng{1};
  const CVec r = test::random_vector(9, rng);
  const cd wv = combiner(r).dot(r);
  EXPECT_NEAR(wv.real(), r.norm(), 1e-12);
  EXPECT_NEAR(wv.imag(), 0.0, 1e-12);
  EXPECT_THROW(combiner(CVec::Zero(3)), DegenerateChannel);
}

TEST(Objective, SingleUserSinrIsSnr) {
  const auto ch = test::random_channels(6, 3, 1, 2, 0.01);
  const CVec phase = random_phase(9, 3);
  const double expected = ch.powers(0) * (ch.H * phase.asDiagonal() * ch.g.col(0)).squaredNorm() / 0.01;
  EXPECT_NEAR(sinr(0, ch, PhaseVector(phase)) / expected, 1.0, 1e-12);
}

TEST(Objective, OrthogonalChannelsHaveNoInterference) {
  // Identity H with users on disjoint elements gives orthogonal v_k.
  ChannelSet ch;
  ch.H = CMat::Identity(3, 3);
  ch.g = CMat::Zero(3, 2);
  ch.g(0, 0) = cd(0.5, 0.1);
  ch.g(2, 1) = cd(-0.2, 0.3);
  ch.A = CMat::Ones(3, 2);
  ch.powers = Eigen::VectorXd::Ones(2);
  ch.noise_power = 0.1;
  const CVec phase = random_phase(3, 4);
  const auto s = sinr_all(ch, phase);
  for (int k = 0; k < 2; ++k) {
    const double v2 = (ch.H * phase.asDiagonal() * ch.g.col(k)).squaredNorm();
    EXPECT_NEAR(s[k], v2 / 0.1, 1e-12);
  }
}

TEST(Objective, SinrMatchesLoopOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ch = test::random_channels(8, 5, 3, seed, 1e-4);
    const CVec phase = random_phase(25, seed + 100);
    const auto got = sinr_all(ch, phase);
    const auto want = oracle::sinr(ch, phase);
    for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k] / want[k], 1.0, 1e-10);
  }
}

TEST(Objective, SinrInvariantToCombinerPhase) {
  const auto ch = test::random_channels(6, 3, 2, 5, 1e-3);
  const CVec phase = random_phase(9, 6);
  const CMat V = ch.H * phase.asDiagonal() * ch.g;
  const CVec w = combiner(V.col(0));
  const CVec w_rot = w * std::polar(1.0, 1.234);
  auto sinr_with = [&](const CVec& c) {
    const double nu = ch.powers(0) * std::norm(c.dot(V.col(0)));
    const double delta = ch.powers(1) * std::norm(c.dot(V.col(1))) + ch.noise_power * c.squaredNorm();
    return nu / delta;
  };
  EXPECT_NEAR(sinr_with(w_rot) / sinr_with(w), 1.0, 1e-12);
  EXPECT_NEAR(sinr_with(w) / sinr_all(ch, phase)[0], 1.0, 1e-12);
}

TEST(Objective, SumRateExamples) {
  // K = 1 with SNR tuned to exactly 1 per user gives 1 bit; three of them give 3.
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto ch = test::random_channels(4, 3, 1, seed, 1.0);
    const CVec phase = random_phase(9, seed);
    ch.noise_power = ch.powers(0) * (ch.H * phase.asDiagonal() * ch.g.col(0)).squaredNorm();
    total += sum_rate(ch, phase);
  }
  EXPECT_NEAR(total, 3.0, 1e-12);

  auto ch = test::random_channels(4, 3, 2, 7, 1e-3);
  ch.powers.setZero();
  EXPECT_EQ(sum_rate(ch, random_phase(9, 8)), 0.0);

  const auto ch2 = test::random_channels(8, 3, 3, 9, 1e-3);
  const CVec phase = random_phase(9, 10);
  const auto rates = user_rates(ch2, phase);
  EXPECT_GE(sum_rate(ch2, phase), *std::max_element(rates.begin(), rates.end()));
}

TEST(Objective, PenaltyExamples) {
  const auto ch = test::random_channels(6, 3, 2, 11, 1e-3);
  const CVec phase = random_phase(9, 12);
  ObjectiveConfig cfg;
  cfg.epsilon = 1e30;
  EXPECT_EQ(occultation_penalty(ch, phase, cfg), 0.0);

  cfg.epsilon = 0.0;
  cfg.wiretapper_phase = phase;
  const CMat gw = effective_channel(ch.H, phase, ch.A);
  EXPECT_NEAR(occultation_penalty(ch, phase, cfg) / (gw.adjoint() * gw).squaredNorm(), 1.0, 1e-12);

  cfg.wiretapper_phase = CVec();
  const double want = oracle::projection(ch, phase, CVec::Ones(9));
  EXPECT_NEAR(occultation_penalty(ch, phase, cfg) / want, 1.0, 1e-12);
  EXPECT_GE(occultation_penalty(ch, phase, cfg), 0.0);
}

TEST(Objective, JointObjectiveComposition) {
  const auto ch = test::random_channels(6, 3, 2, 13, 1e-3);
  const CVec phase = random_phase(9, 14);
  ObjectiveConfig cfg;
  cfg.rho = 1.0;
  EXPECT_DOUBLE_EQ(joint_objective(ch, phase, cfg), sum_rate(ch, phase));

  cfg.rho = 0.0;
  cfg.epsilon = 1e30;
  EXPECT_EQ(joint_objective(ch, phase, cfg), 0.0);

  cfg.rho = 0.3;
  cfg.epsilon = 2.0;
  const double want = 0.3 * oracle::rate_of(oracle::sinr(ch, phase)) -
                      0.7 * std::max(oracle::projection(ch, phase, CVec::Ones(9)) - 2.0, 0.0);
  EXPECT_NEAR(joint_objective(ch, phase, cfg), want, 1e-9 * std::abs(want));
}

TEST(Objective, RateOnlyIgnoresWiretapperGuess) {
  const auto ch = test::random_channels(6, 3, 2, 15, 1e-3);
  const CVec phase = random_phase(9, 16);
  ObjectiveConfig a, b;
  a.rho = b.rho = 1.0;
  b.wiretapper_phase = random_phase(9, 17);
  EXPECT_EQ(joint_objective(ch, phase, a), joint_objective(ch, phase, b));
}

TEST(Objective, ConfigValidation) {
  ObjectiveConfig c;
  c.rho = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.rho = 0.5;
  c.epsilon = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Objective, FixedCombinerSurrogateTouchesObjectiveAtAnchor) {
  const auto ch = test::random_channels(8, 5, 2, 18, 1e-3);
  const CVec phase = random_phase(25, 19);
  ObjectiveConfig cfg;
  for (double rho : {0.0, 0.5, 1.0}) {
    cfg.rho = rho;
    const double a = fixed_combiner_objective(ch, phase, phase, cfg);
    const double b = joint_objective(ch, phase, cfg);
    EXPECT_NEAR(a, b, 1e-10 * std::max(1.0, std::abs(b)));
  }
}

TEST(Objective, HugeEpsilonLeavesPureRateGradient) {
  const auto ch = test::random_channels(6, 3, 2, 20, 1e-3);
  const CVec phase = random_phase(9, 21);
  ObjectiveConfig huge, rate_only;
  huge.rho = 0.5;
  huge.epsilon = 1e30;
  rate_only.rho = 1.0;
  const CVec g1 = gradient(ch, phase, huge);
  const CVec g2 = gradient(ch, phase, rate_only);
  EXPECT_LT((g1 - 0.5 * g2).norm(), 1e-12 * g2.norm());
}

TEST(Objective, SingleUserGradientIsScaledNuGradient) {
  const auto ch = test::random_channels(6, 3, 1, 22, 1e-3);
  const CVec phase = random_phase(9, 23);
  ObjectiveConfig cfg;
  cfg.rho = 1.0;
  const CVec g = gradient(ch, phase, cfg);
  const CVec hv = ch.H.adjoint() * (ch.H * phase.asDiagonal() * ch.g.col(0));
  const CVec grad_nu = 2.0 * ch.powers(0) * ch.g.col(0).conjugate().cwiseProduct(hv);
  const cd ratio = g.dot(grad_nu) / grad_nu.squaredNorm();
  EXPECT_NEAR(ratio.imag(), 0.0, 1e-12);
  EXPECT_GT(ratio.real(), 0.0);
  EXPECT_LT((g - ratio.real() * grad_nu).norm(), 1e-10 * g.norm());
}

TEST(Objective, GradientMatchesFiniteDifferencesOfFixedCombinerObjective) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ch = test::random_channels(16, 5, 2, 1000 + seed, 1e-2);
    const CVec phase = random_phase(25, 2000 + seed);
    for (double rho : {0.0, 0.5, 1.0}) {
      ObjectiveConfig cfg;
      cfg.rho = rho;
      const CVec analytic = gradient(ch, phase, cfg);
      const CVec numeric = oracle::fd_gradient(
          [&](const CVec& p) { return oracle::objective_fixed(ch, p, phase, rho, 0.0, CVec::Ones(25)); }, phase,
          1e-6);
      EXPECT_LT((analytic - numeric).norm() / numeric.norm(), 1e-6) << "seed " << seed << " rho " << rho;
    }
  }
}

TEST(Objective, EvaluateIsConsistent) {
  const auto ch = test::random_channels(8, 3, 2, 24, 1e-3);
  const CVec phase = random_phase(9, 25);
  ObjectiveConfig cfg;
  cfg.epsilon = 1.0;
  const auto e = evaluate(ch, phase, cfg);
  EXPECT_NEAR(e.sum_rate, sum_rate(ch, phase), 1e-12);
  EXPECT_NEAR(e.gamma, occultation_penalty(ch, phase, cfg), 1e-9 * std::max(1.0, e.gamma));
  EXPECT_NEAR(e.joint_value, joint_objective(ch, phase, cfg), 1e-9 * std::max(1.0, std::abs(e.joint_value)));
  EXPECT_GE(e.gamma, 0.0);
  for (double s : e.per_user_sinr) EXPECT_GE(s, 0.0);
  EXPECT_EQ(e.gradient.size(), 9);
}

TEST(Objective, DegenerateChannelIsSignalled) {
  auto ch = test::random_channels(4, 3, 2, 26, 1e-3);
  ch.g.col(1).setZero();
  EXPECT_THROW(sinr_all(ch, CVec::Ones(9)), DegenerateChannel);
}

TEST(Objective, ZeroNoiseIsFloored) {
  const auto ch = test::random_channels(4, 3, 1, 27, 0.0);
  const auto s = sinr_all(ch, CVec::Ones(9));
  EXPECT_TRUE(std::isfinite(s[0]));
  EXPECT_GT(s[0], 1e20);
}
