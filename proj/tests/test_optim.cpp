#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "lookaround/augment.hpp"
#include "lookaround/optim.hpp"
#include "lookaround/quad.hpp"
#include "lookaround/rng.hpp"

using namespace lookaround;
using namespace lookaround::optim;

namespace {

Minibatch point_batch(std::vector<double> c) {
  Minibatch b;
  b.examples.push_back({std::move(c), 0});
  b.indices.push_back(0);
  return b;
}

std::vector<Minibatch> noise_batches(std::size_t dim, int count, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Minibatch> out;
  for (int i = 0; i < count; ++i) {
    std::vector<double> c(dim);
    for (double& x : c) x = normal(rng);
    out.push_back(point_batch(std::move(c)));
  }
  return out;
}

AugmentationSpec jitter(double sd, std::uint64_t stream) {
  return {AugKind::Jitter, sd, 0.0, stream, "jitter"};
}

}  // namespace

TEST(SgdStep, OneStepArithmetic) {
  const ParamVector out = sgd_step(InnerOptimizer::sgd(0.1), std::vector<double>{1.0}, std::vector<double>{2.0});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0], 0.8);
}

TEST(SgdStep, ZeroGradientLeavesParamsUnchanged) {
  const std::vector<double> p{1.5, -2.0, 3.25};
  EXPECT_EQ(sgd_step(InnerOptimizer::sgd(0.3), p, std::vector<double>(3, 0.0)), p);
}

TEST(SgdStep, QuadraticDecayAfterTenSteps) {
  const quad::QuadraticObjective f({1.0});
  InnerOptimizer opt = InnerOptimizer::sgd(0.1);
  ParamVector theta{1.0};
  const Minibatch origin = point_batch({0.0});
  for (int t = 0; t < 10; ++t) theta = inner_step(opt, theta, f.evaluate(theta, origin).grad);
  EXPECT_NEAR(theta[0], 0.3486784401, 1e-12);
}

TEST(SgdStep, RejectsMismatchedGradient) {
  EXPECT_THROW(sgd_step(InnerOptimizer::sgd(0.1), std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}),
               std::invalid_argument);
}

TEST(CmStep, HandIteratedTwoSteps) {
  InnerOptimizer cm = InnerOptimizer::cm(0.1, 0.9, 1);
  ParamVector theta{1.0};
  theta = cm_step(cm, theta, std::vector<double>{theta[0]});
  EXPECT_DOUBLE_EQ(cm.velocity[0], -1.0);
  EXPECT_DOUBLE_EQ(theta[0], 0.9);
  theta = cm_step(cm, theta, std::vector<double>{theta[0]});
  EXPECT_NEAR(cm.velocity[0], -1.8, 1e-15);
  EXPECT_NEAR(theta[0], 0.72, 1e-15);
}

TEST(CmStep, ZeroGradientFromRestIsConstant) {
  InnerOptimizer cm = InnerOptimizer::cm(0.5, 0.9, 2);
  ParamVector theta{1.0, -1.0};
  for (int t = 0; t < 50; ++t) theta = cm_step(cm, theta, std::vector<double>(2, 0.0));
  EXPECT_EQ(theta, (ParamVector{1.0, -1.0}));
}

TEST(CmStep, BetaZeroMatchesSgdBitExactOnRandomInstances) {
  Rng rng = make_rng(11, "test/cm-beta0");
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> lr(1e-3, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 7;
    const double step = lr(rng);
    InnerOptimizer cm = InnerOptimizer::cm(step, 0.0, n);
    const InnerOptimizer sgd = InnerOptimizer::sgd(step);
    ParamVector a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = b[i] = u(rng);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> g(n);
      for (double& x : g) x = u(rng);
      a = cm_step(cm, a, g);
      b = sgd_step(sgd, b, g);
      ASSERT_EQ(a, b) << "trial " << trial << " step " << t;
    }
  }
}

TEST(InnerOptimizer, ValidationRejectsBadHyperparameters) {
  EXPECT_THROW(InnerOptimizer::sgd(-0.1).validate(), std::invalid_argument);
  EXPECT_THROW(InnerOptimizer::cm(0.1, 1.0, 1).validate(), std::invalid_argument);
}

TEST(LookaheadRound, AlphaOneReturnsFastWeights) {
  const quad::QuadraticObjective f({1.0, 4.0});
  Rng rng = make_rng(3, "test/la-alpha1");
  const std::vector<Minibatch> batches = noise_batches(2, 5, rng);
  LookaheadConfig la = LookaheadConfig::create(InnerOptimizer::sgd(0.1), 5, 1.0, {1.0, -1.0});
  InnerOptimizer plain = InnerOptimizer::sgd(0.1);
  ParamVector theta{1.0, -1.0};
  for (const Minibatch& b : batches) theta = inner_step(plain, theta, f.evaluate(theta, b).grad);
  EXPECT_EQ(lookahead_round(la, f, batches), theta);
}

TEST(LookaheadRound, MidpointWithOneStep) {
  const quad::QuadraticObjective f({1.0});
  // slow = [0], one step toward c = 4 with lr 0.2 gives fast = [0.8].
  LookaheadConfig la = LookaheadConfig::create(InnerOptimizer::sgd(0.2), 1, 0.5, {0.0});
  const std::vector<Minibatch> batches{point_batch({4.0})};
  EXPECT_NEAR(lookahead_round(la, f, batches)[0], 0.4, 1e-15);
}

TEST(LookaheadRound, RejectsTooFewBatchesAndBadAlpha) {
  const quad::QuadraticObjective f({1.0});
  LookaheadConfig la = LookaheadConfig::create(InnerOptimizer::sgd(0.1), 3, 0.5, {0.0});
  const std::vector<Minibatch> two{point_batch({0.0}), point_batch({0.0})};
  EXPECT_THROW(lookahead_round(la, f, two), std::invalid_argument);
  EXPECT_THROW(LookaheadConfig::create(InnerOptimizer::sgd(0.1), 3, 0.0, {0.0}), std::invalid_argument);
  EXPECT_THROW(LookaheadConfig::create(InnerOptimizer::sgd(0.1), 3, 1.5, {0.0}), std::invalid_argument);
}

TEST(LookaheadRound, SlowVarianceMatchesFixedPoint) {
  const double gamma = 0.1;
  const int k = 5;
  const double alpha = 0.5;
  const quad::QuadraticObjective f({1.0});
  LookaheadConfig la = LookaheadConfig::create(InnerOptimizer::sgd(gamma), k, alpha, {0.0});
  Rng rng = make_rng(5, "test/la-variance");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Minibatch> batches(k, point_batch({0.0}));
  const long burn_in = 1000;
  const long rounds = 200'000;
  double sum = 0.0, sum_sq = 0.0;
  for (long r = 0; r < burn_in + rounds; ++r) {
    for (Minibatch& b : batches) b.examples[0].input[0] = normal(rng);
    const double slow = lookahead_round(la, f, batches)[0];
    if (r >= burn_in) {
      sum += slow;
      sum_sq += slow * slow;
    }
  }
  const double mean = sum / rounds;
  const double var = sum_sq / rounds - mean * mean;
  const quad::DiagNoisyQuadratic m{{1.0}, {1.0}};
  const double expected = quad::fixed_point(m, {quad::Method::Lookahead, gamma, k, alpha, 1})[0];
  EXPECT_NEAR(var / expected, 1.0, 0.03) << "empirical " << var << " vs " << expected;
}

TEST(AroundStep, SingleIdentityReplicaIsOneInnerStep) {
  const quad::QuadraticObjective f({2.0, 0.5});
  LookaroundConfig cfg =
      LookaroundConfig::create(InnerOptimizer::sgd(0.1), 3, {AugmentationSpec::identity()}, {1.0, 2.0}, 7);
  const Minibatch b = point_batch({0.3, -0.4});
  around_step(cfg, f, b);
  EXPECT_EQ(cfg.replicas[0], sgd_step(InnerOptimizer::sgd(0.1), ParamVector{1.0, 2.0}, f.evaluate(ParamVector{1.0, 2.0}, b).grad));
}

TEST(AroundStep, IdenticalAugmentationsKeepReplicasIdentical) {
  const quad::QuadraticObjective f({1.0, 3.0});
  LookaroundConfig cfg = LookaroundConfig::create(
      InnerOptimizer::cm(0.1, 0.9, 2), 10, {AugmentationSpec::identity(), AugmentationSpec::identity()}, {1.0, 1.0}, 1);
  Rng rng = make_rng(1, "test/identical");
  for (const Minibatch& b : noise_batches(2, 10, rng)) around_step(cfg, f, b);
  EXPECT_EQ(cfg.replicas[0], cfg.replicas[1]);
}

TEST(AroundStep, ThreeReplicasMatchBruteForceSimulation) {
  const double lr = 0.1;
  const int k = 4;
  const std::uint64_t seed = 2024;
  const quad::QuadraticObjective f({1.0});
  const std::vector<AugmentationSpec> augs{jitter(1.0, 1), jitter(1.0, 2), jitter(1.0, 3)};
  LookaroundConfig cfg = LookaroundConfig::create(InnerOptimizer::sgd(lr), k, augs, {1.0}, seed);
  const Minibatch b = point_batch({0.0});

  std::vector<double> ref(3, 1.0);
  for (std::uint64_t round = 0; round < 6; ++round) {
    for (std::uint64_t step = 0; step < static_cast<std::uint64_t>(k); ++step) {
      around_step(cfg, f, b);
      for (std::uint64_t j = 0; j < 3; ++j) {
        Rng rng = make_rng(stream_key(seed, "augment", {round, step, j, augs[j].stream}));
        const double c = apply_augmentation(augs[j], b, rng).examples[0].input[0];
        ref[j] = ref[j] - lr * (ref[j] - c);
        ASSERT_EQ(cfg.replicas[j][0], ref[j]) << "round " << round << " step " << step << " replica " << j;
      }
    }
    EXPECT_FALSE(ref[0] == ref[1] && ref[1] == ref[2]);
    const double phi = ref[0] + ((ref[1] - ref[0]) + (ref[2] - ref[0])) / 3.0;
    EXPECT_EQ(average_step(cfg)[0], phi);
    ref.assign(3, phi);
  }
}

TEST(AroundStep, RejectsSizeChangingBatch) {
  const quad::QuadraticObjective f({1.0});
  LookaroundConfig cfg =
      LookaroundConfig::create(InnerOptimizer::sgd(0.1), 1, {AugmentationSpec::identity()}, {1.0}, 0);
  EXPECT_THROW(around_step(cfg, f, Minibatch{}), std::invalid_argument);
}

TEST(AverageStep, ArithmeticMeanExamples) {
  LookaroundConfig two = LookaroundConfig::create(
      InnerOptimizer::sgd(0.1), 1, {AugmentationSpec::identity(), AugmentationSpec::identity()}, {0.0, 0.0}, 0);
  two.replicas = {{1.0, 3.0}, {3.0, 1.0}};
  EXPECT_EQ(average_step(two), (ParamVector{2.0, 2.0}));

  LookaroundConfig one =
      LookaroundConfig::create(InnerOptimizer::sgd(0.1), 1, {AugmentationSpec::identity()}, {0.0}, 0);
  one.replicas = {{0.123456789}};
  EXPECT_EQ(average_step(one), (ParamVector{0.123456789}));

  LookaroundConfig three = LookaroundConfig::create(InnerOptimizer::sgd(0.1), 1,
                                                    {AugmentationSpec::identity(), AugmentationSpec::identity(),
                                                     AugmentationSpec::identity()},
                                                    {0.0}, 0);
  three.replicas = {{0.0}, {3.0}, {6.0}};
  EXPECT_EQ(average_step(three), (ParamVector{3.0}));
}

TEST(AverageStep, SynchronizesReplicasAndResetsVelocity) {
  const quad::QuadraticObjective f({1.0, 2.0});
  const std::vector<AugmentationSpec> augs{jitter(0.5, 1), jitter(0.5, 2), jitter(0.5, 3)};
  for (const bool carry : {false, true}) {
    LookaroundConfig cfg = LookaroundConfig::create(InnerOptimizer::cm(0.05, 0.9, 2), 5, augs, {1.0, -1.0}, 9);
    cfg.carry_velocity = carry;
    for (int s = 0; s < 5; ++s) around_step(cfg, f, point_batch({0.0, 0.0}));
    std::vector<ParamVector> vs;
    for (const InnerOptimizer& st : cfg.inner_states) vs.push_back(st.velocity);
    const ParamVector phi = average_step(cfg);
    for (const ParamVector& r : cfg.replicas) EXPECT_EQ(r, phi);
    const ParamVector expected_v = carry ? uniform_mean(vs) : ParamVector(2, 0.0);
    for (const InnerOptimizer& st : cfg.inner_states) EXPECT_EQ(st.velocity, expected_v);
  }
}

TEST(UniformMean, IdenticalVectorsAverageBitExactly) {
  Rng rng = make_rng(4, "test/uniform-mean");
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int trial = 0; trial < 100; ++trial) {
    ParamVector x(5);
    for (double& v : x) v = u(rng);
    const std::vector<ParamVector> xs(1 + trial % 6, x);
    EXPECT_EQ(uniform_mean(xs), x);
  }
}

TEST(LookaroundRound, SingleStepSingleReplicaEqualsSgd) {
  const quad::QuadraticObjective f({1.5});
  LookaroundConfig cfg =
      LookaroundConfig::create(InnerOptimizer::sgd(0.2), 1, {AugmentationSpec::identity()}, {2.0}, 0);
  const std::vector<Minibatch> batches{point_batch({0.5})};
  const ParamVector expected = sgd_step(InnerOptimizer::sgd(0.2), ParamVector{2.0}, f.evaluate(ParamVector{2.0}, batches[0]).grad);
  EXPECT_EQ(lookaround_round(cfg, f, batches), expected);
}

TEST(LookaroundRound, IdenticalIdentityReplicasEqualPlainSgdOnRandomInstances) {
  Rng rng = make_rng(12, "test/ladder");
  std::uniform_real_distribution<double> curv(0.1, 2.0);
  std::uniform_real_distribution<double> start(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 5;
    const int d = 1 + trial % 4;
    const int k = 1 + trial % 7;
    std::vector<double> a(n);
    for (double& x : a) x = curv(rng);
    ParamVector init(n);
    for (double& x : init) x = start(rng);
    const quad::QuadraticObjective f(a);
    LookaroundConfig cfg = LookaroundConfig::create(InnerOptimizer::sgd(0.3), k,
                                                    std::vector<AugmentationSpec>(d, AugmentationSpec::identity()),
                                                    init, static_cast<std::uint64_t>(trial));
    const InnerOptimizer sgd = InnerOptimizer::sgd(0.3);
    ParamVector theta = init;
    const Minibatch origin = point_batch(std::vector<double>(n, 0.0));
    const std::vector<Minibatch> batches(k, origin);
    for (int r = 0; r < 3; ++r) {
      for (int s = 0; s < k; ++s) theta = sgd_step(sgd, theta, f.evaluate(theta, origin).grad);
      ASSERT_EQ(lookaround_round(cfg, f, batches), theta) << "trial " << trial << " round " << r;
    }
  }
}

TEST(LookaroundRound, MeanDecayMatchesExpectationRecursion) {
  const double gamma = 0.1;
  const int k = 5;
  const int rounds = 4;
  const long trials = 10'000;
  const quad::QuadraticObjective f({1.0});
  const std::vector<AugmentationSpec> augs{jitter(1.0, 1), jitter(1.0, 2), jitter(1.0, 3)};
  const std::vector<Minibatch> batches(k, point_batch({0.0}));
  std::vector<double> sum(rounds, 0.0), sum_sq(rounds, 0.0);
  for (long t = 0; t < trials; ++t) {
    LookaroundConfig cfg = LookaroundConfig::create(InnerOptimizer::sgd(gamma), k, augs, {1.0},
                                                    stream_key(77, "test/trial", {static_cast<std::uint64_t>(t)}));
    for (int r = 0; r < rounds; ++r) {
      const double phi = lookaround_round(cfg, f, batches)[0];
      sum[r] += phi;
      sum_sq[r] += phi * phi;
    }
  }
  for (int r = 0; r < rounds; ++r) {
    const double mean = sum[r] / trials;
    const double var = (sum_sq[r] - trials * mean * mean) / (trials - 1);
    const double se = std::sqrt(var / trials);
    const double expected = std::pow(1.0 - gamma, k * (r + 1));
    EXPECT_LE(std::abs(mean - expected), 3.0 * se) << "round " << r + 1;
  }
}

TEST(LookaroundRound, ParallelReplicasMatchSequentialBitExactly) {
  const quad::QuadraticObjective f({1.0, 0.3, 2.0});
  const std::vector<AugmentationSpec> augs{jitter(0.4, 1), jitter(0.7, 2), AugmentationSpec::identity(),
                                           jitter(0.1, 4)};
  LookaroundConfig seq = LookaroundConfig::create(InnerOptimizer::cm(0.05, 0.9, 3), 6, augs, {1.0, 2.0, 3.0}, 5);
  LookaroundConfig par = seq;
  par.parallel = true;
  Rng rng = make_rng(8, "test/par");
  const std::vector<Minibatch> batches = noise_batches(3, 6, rng);
  for (int r = 0; r < 20; ++r) {
    ASSERT_EQ(lookaround_round(seq, f, batches), lookaround_round(par, f, batches)) << "round " << r;
  }
}

TEST(LookaroundRound, ParametersStayFiniteOnBoundedGradients) {
  const quad::QuadraticObjective f({1.0, 10.0});
  const std::vector<AugmentationSpec> augs{jitter(2.0, 1), jitter(2.0, 2), jitter(2.0, 3)};
  LookaroundConfig cfg = LookaroundConfig::create(InnerOptimizer::cm(0.01, 0.9, 2), 10, augs, {5.0, -5.0}, 3);
  const std::vector<Minibatch> batches(10, point_batch({0.0, 0.0}));
  for (int r = 0; r < 200; ++r) {
    lookaround_round(cfg, f, batches);
    ASSERT_TRUE(all_finite(cfg.phi));
  }
}

TEST(LookaroundConfig, RejectsEmptyAugmentationList) {
  EXPECT_THROW(LookaroundConfig::create(InnerOptimizer::sgd(0.1), 1, {}, {0.0}, 0), std::invalid_argument);
  EXPECT_THROW(LookaroundConfig::create(InnerOptimizer::sgd(0.1), 0, {AugmentationSpec::identity()}, {0.0}, 0),
               std::invalid_argument);
}
