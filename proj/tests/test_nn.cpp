#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "lookaround/augment.hpp"
#include "lookaround/dataset.hpp"
#include "lookaround/landscape.hpp"
#include "lookaround/mlp.hpp"
#include "lookaround/train.hpp"
#include "test_support.hpp"

using namespace lookaround;
using namespace lookaround::nn;
using lookaround::testing::as_batch;
using lookaround::testing::gradient_check;

namespace {

bool same_examples(const std::vector<Example>& a, const std::vector<Example>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].label != b[i].label || a[i].input != b[i].input) return false;
  }
  return true;
}

TrainConfig small_config(TrainMethod method, long steps, double lr) {
  TrainConfig c;
  c.method = method;
  c.lr = lr;
  c.steps = steps;
  c.k = 10;
  c.schedule.kind = ScheduleKind::Constant;
  c.hidden = {16, 16};
  c.eval_every = 1;
  c.seed = 3;
  return c;
}

}  // namespace

TEST(Dataset, SameSeedIsBitIdentical) {
  for (const DatasetKind kind : {DatasetKind::Spirals, DatasetKind::Blobs, DatasetKind::Glyphs}) {
    const Dataset a = make_dataset(kind, 120, 200, 42);
    const Dataset b = make_dataset(kind, 120, 200, 42);
    EXPECT_TRUE(same_examples(a.train, b.train)) << to_string(kind);
    EXPECT_TRUE(same_examples(a.test, b.test)) << to_string(kind);
    const Dataset c = make_dataset(kind, 120, 200, 43);
    EXPECT_FALSE(same_examples(a.train, c.train)) << to_string(kind);
  }
}

TEST(Dataset, LabelsWithinClassCount) {
  for (const DatasetKind kind : {DatasetKind::Spirals, DatasetKind::Blobs, DatasetKind::Glyphs}) {
    const Dataset ds = make_dataset(kind, 100, 100, 1);
    for (const auto* split : {&ds.train, &ds.test}) {
      for (const Example& ex : *split) {
        EXPECT_GE(ex.label, 0);
        EXPECT_LT(ex.label, ds.num_classes);
        EXPECT_EQ(ex.input.size(), static_cast<std::size_t>(ds.input_dim));
      }
    }
  }
}

TEST(Dataset, NoiselessBlobsAreSeparableByNearestCentroid) {
  const Dataset ds = make_dataset(DatasetKind::Blobs, 200, 400, 5, 0.0);
  std::vector<std::vector<double>> centroid(4, std::vector<double>(2, 0.0));
  std::vector<int> count(4, 0);
  for (const Example& ex : ds.train) {
    for (int i = 0; i < 2; ++i) centroid[ex.label][i] += ex.input[i];
    ++count[ex.label];
  }
  for (int c = 0; c < 4; ++c) {
    for (double& v : centroid[c]) v /= count[c];
  }
  int hits = 0;
  for (const Example& ex : ds.test) {
    int best = 0;
    double best_d = 1e300;
    for (int c = 0; c < 4; ++c) {
      const double dx = ex.input[0] - centroid[c][0], dy = ex.input[1] - centroid[c][1];
      if (dx * dx + dy * dy < best_d) {
        best_d = dx * dx + dy * dy;
        best = c;
      }
    }
    hits += best == ex.label;
  }
  EXPECT_EQ(hits, static_cast<int>(ds.test.size()));
}

TEST(Augmentation, IdentityLeavesInputsBitUnchanged) {
  const Dataset ds = make_dataset(DatasetKind::Spirals, 64, 1, 2);
  const Minibatch b = as_batch(ds.train);
  Rng rng = make_rng(1, "test/aug");
  const Minibatch out = apply_augmentation(AugmentationSpec::identity(), b, rng);
  EXPECT_TRUE(same_examples(out.examples, b.examples));
  EXPECT_EQ(out.indices, b.indices);
}

TEST(Augmentation, FullTurnRotationIsIdentityWithinRoundOff) {
  const double turn = 2.0 * std::numbers::pi;
  const AugmentationSpec spec{AugKind::Rotation, turn, turn, 0, "full_turn"};
  const Dataset ds = make_dataset(DatasetKind::Spirals, 64, 1, 2);
  Rng rng = make_rng(1, "test/rot");
  for (const Example& ex : ds.train) {
    const std::vector<double> out = augment_input(spec, ex.input, rng);
    EXPECT_NEAR(out[0], ex.input[0], 1e-12);
    EXPECT_NEAR(out[1], ex.input[1], 1e-12);
  }
}

TEST(Augmentation, CatalogPreservesLabelsCountAndIndices) {
  for (const DatasetKind kind : {DatasetKind::Spirals, DatasetKind::Blobs, DatasetKind::Glyphs}) {
    const Dataset ds = make_dataset(kind, 40, 1, 9);
    const Minibatch b = as_batch(ds.train);
    for (const AugmentationSpec& spec : augmentation_catalog(kind)) {
      Rng rng = make_rng(spec.stream, "test/catalog");
      const Minibatch out = apply_augmentation(spec, b, rng);
      ASSERT_EQ(out.size(), b.size()) << spec.name;
      EXPECT_EQ(out.indices, b.indices) << spec.name;
      for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(out.examples[i].label, b.examples[i].label);
    }
  }
}

TEST(Augmentation, MakeAugmentationsTakesCatalogPrefix) {
  const std::vector<AugmentationSpec> all = augmentation_catalog(DatasetKind::Spirals);
  ASSERT_EQ(all.size(), 6u);
  EXPECT_EQ(all[0].kind, AugKind::Identity);
  for (int d = 1; d <= 6; ++d) {
    const std::vector<AugmentationSpec> first = make_augmentations(DatasetKind::Spirals, d);
    ASSERT_EQ(first.size(), static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) EXPECT_EQ(first[j].name, all[j].name);
  }
  EXPECT_THROW(make_augmentations(DatasetKind::Spirals, 0), std::invalid_argument);
  EXPECT_THROW(make_augmentations(DatasetKind::Spirals, 7), std::invalid_argument);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  struct Arch {
    DatasetKind data;
    std::vector<int> hidden;
  };
  const std::vector<Arch> archs{{DatasetKind::Spirals, {8}},
                                {DatasetKind::Spirals, {32, 32}},
                                {DatasetKind::Blobs, {4, 4, 4}},
                                {DatasetKind::Glyphs, {16}}};
  for (const Arch& a : archs) {
    const Dataset ds = make_dataset(a.data, 16, 1, 4);
    const std::vector<int> widths = architecture(ds.input_dim, a.hidden, ds.num_classes);
    Rng rng = make_rng(7, "test/gradcheck");
    const MLP net = MLP::random(widths, rng);
    EXPECT_LE(gradient_check(widths, net.params(), as_batch(ds.train), 100, rng), 1e-5)
        << to_string(a.data) << " hidden layers " << a.hidden.size();
  }
}

TEST(Mlp, FlattenRoundTripIsBitExact) {
  Rng rng = make_rng(8, "test/flatten");
  const std::vector<int> widths{2, 32, 32, 2};
  const MLP net = MLP::random(widths, rng);
  const MLP back = MLP::unflatten(widths, net.flatten());
  EXPECT_EQ(back.params(), net.params());
  EXPECT_EQ(back.widths(), net.widths());
  EXPECT_EQ(net.flatten().size(), param_count(widths));
  EXPECT_EQ(param_count(widths), 2u * 32 + 32 + 32 * 32 + 32 + 32 * 2 + 2);
}

TEST(Mlp, DuplicatedBatchGivesSameLossAndGradient) {
  const Dataset ds = make_dataset(DatasetKind::Spirals, 20, 1, 6);
  Rng rng = make_rng(9, "test/dup");
  const MLP net = MLP::random({2, 8, 2}, rng);
  std::vector<Example> twice;
  for (const Example& ex : ds.train) {
    twice.push_back(ex);
    twice.push_back(ex);
  }
  const LossAndGrad once = mlp_grad(net, as_batch(ds.train));
  const LossAndGrad dup = mlp_grad(net, as_batch(twice));
  EXPECT_NEAR(dup.loss, once.loss, 1e-14 * std::abs(once.loss));
  for (std::size_t i = 0; i < once.grad.size(); ++i) {
    EXPECT_NEAR(dup.grad[i], once.grad[i], 1e-14 * std::max(1.0, std::abs(once.grad[i])));
  }
}

TEST(Mlp, ZeroWeightsGiveUniformSoftmax) {
  const Dataset ds = make_dataset(DatasetKind::Spirals, 10, 1, 6);
  const MLP net = MLP::zeros({2, 8, 2});
  EXPECT_NEAR(mlp_grad(net, as_batch(ds.train)).loss, std::log(2.0), 1e-15);
}

TEST(Mlp, RejectsWrongParameterCount) {
  EXPECT_THROW(MLP({2, 3, 2}, ParamVector(5, 0.0)), std::invalid_argument);
}

TEST(Ensemble, SingleAndIdenticalModelsMatchOwnAccuracy) {
  const Dataset ds = make_dataset(DatasetKind::Spirals, 50, 300, 1);
  Rng rng = make_rng(10, "test/ens");
  const MLP net = MLP::random({2, 16, 2}, rng);
  const std::vector<MLP> one{net};
  const std::vector<MLP> three(3, net);
  EXPECT_DOUBLE_EQ(logit_ensemble(one, ds), accuracy(net, ds.test));
  EXPECT_DOUBLE_EQ(logit_ensemble(three, ds), accuracy(net, ds.test));
}

TEST(PosthocAverage, SelfAverageIsIdentical) {
  Rng rng = make_rng(11, "test/avg");
  const MLP net = MLP::random({2, 16, 16, 2}, rng);
  const std::vector<MLP> pair{net, net};
  EXPECT_EQ(posthoc_average(pair).params(), net.params());
  const std::vector<MLP> mismatched{net, MLP::zeros({2, 8, 2})};
  EXPECT_THROW(posthoc_average(mismatched), std::invalid_argument);
}

TEST(Train, DeterministicAcrossRerunsAndReplicaThreads) {
  const Dataset ds = make_dataset(DatasetKind::Spirals, 100, 200, 4);
  TrainConfig c = small_config(TrainMethod::Lookaround, 300, 0.5);
  const std::vector<AugmentationSpec> augs = make_augmentations(DatasetKind::Spirals, 3);
  const RunLog a = train(c, ds, augs);
  const RunLog b = train(c, ds, augs);
  c.parallel = true;
  const RunLog p = train(c, ds, augs);
  EXPECT_EQ(a.final_params, b.final_params);
  EXPECT_EQ(a.final_params, p.final_params);
  ASSERT_EQ(a.records.size(), p.records.size());
  for (std::size_t r = 0; r < a.records.size(); ++r) {
    EXPECT_EQ(a.records[r].round, static_cast<long>(r) + 1);
    EXPECT_EQ(a.records[r].mean_acc, p.records[r].mean_acc);
    EXPECT_EQ(a.records[r].replica_acc, p.records[r].replica_acc);
  }
}

TEST(Train, IdenticalIdentityReplicasReproducePlainTraining) {
  const Dataset ds = make_dataset(DatasetKind::Spirals, 100, 100, 4, 0.0);
  for (const optim::InnerKind inner : {optim::InnerKind::Sgd, optim::InnerKind::Momentum}) {
    TrainConfig la = small_config(TrainMethod::Lookaround, 200, 0.3);
    la.inner = inner;
    TrainConfig plain = la;
    plain.method = TrainMethod::Sgd;
    // Velocity resets at synchronization, so compare against plain momentum
    // only within one round.
    if (inner == optim::InnerKind::Momentum) la.k = plain.k = 200;
    const RunLog a = train(la, ds, identity_augmentations(3));
    const RunLog b = train(plain, ds, {});
    EXPECT_EQ(a.final_params, b.final_params);
  }
}

TEST(Train, ReplicaSpreadStaysBoundedAtSmallLearningRate) {
  const Dataset ds = make_dataset(DatasetKind::Spirals, 150, 300, 1);
  TrainConfig c = small_config(TrainMethod::Lookaround, 2000, 0.01);
  const RunLog log = train(c, ds, make_augmentations(DatasetKind::Spirals, 3));
  std::vector<double> dist;
  std::size_t above = 0;
  for (const RoundRecord& r : log.records) {
    dist.push_back(r.max_pairwise_distance);
    if (r.mean_acc >= *std::min_element(r.replica_acc.begin(), r.replica_acc.end())) ++above;
  }
  std::vector<double> sorted = dist;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  EXPECT_LE(dist.back(), 10.0 * sorted[sorted.size() / 2]);
  EXPECT_GE(static_cast<double>(above) / static_cast<double>(log.records.size()), 0.95);
}

TEST(Train, ScheduleShapes) {
  const Schedule piecewise{ScheduleKind::Piecewise, 0.2, {0.3, 0.6, 0.8}};
  EXPECT_DOUBLE_EQ(piecewise.lr_at(1.0, 0, 100), 1.0);
  EXPECT_DOUBLE_EQ(piecewise.lr_at(1.0, 30, 100), 0.2);
  EXPECT_NEAR(piecewise.lr_at(1.0, 99, 100), 0.008, 1e-15);
  const Schedule cosine{ScheduleKind::Cosine, 0.2, {}};
  EXPECT_DOUBLE_EQ(cosine.lr_at(2.0, 0, 100), 2.0);
  EXPECT_NEAR(cosine.lr_at(2.0, 50, 100), 1.0, 1e-12);
  const Schedule constant{ScheduleKind::Constant, 0.2, {}};
  EXPECT_DOUBLE_EQ(constant.lr_at(0.7, 99, 100), 0.7);
}

TEST(Plane, AxisAlignedInputsGiveUnitBasis) {
  const std::vector<double> o{0, 0, 0}, e1{1, 0, 0}, e2{0, 1, 0};
  const PlaneProjection p = plane_projection(o, e1, e2);
  EXPECT_EQ(p.u_hat, e1);
  EXPECT_EQ(p.v_hat, e2);
}

TEST(Plane, CollinearInputsAreDegenerate) {
  const std::vector<double> o{0, 0}, a{1, 1}, b{3, 3};
  EXPECT_THROW(plane_projection(o, a, b), DomainError);
  EXPECT_THROW(plane_projection(o, o, b), DomainError);
}

TEST(Plane, TrainedReplicasGiveOrthonormalFrameAndExactReconstruction) {
  const Dataset ds = make_dataset(DatasetKind::Spirals, 100, 200, 2);
  const RunLog log = train(small_config(TrainMethod::Lookaround, 200, 0.3), ds,
                           make_augmentations(DatasetKind::Spirals, 3));
  ASSERT_EQ(log.last_replicas.size(), 3u);
  const PlaneProjection p = plane_projection(log.last_replicas[0], log.last_replicas[1], log.last_replicas[2]);
  double uu = 0, vv = 0, uv = 0;
  for (std::size_t i = 0; i < p.dimension(); ++i) {
    uu += p.u_hat[i] * p.u_hat[i];
    vv += p.v_hat[i] * p.v_hat[i];
    uv += p.u_hat[i] * p.v_hat[i];
  }
  EXPECT_NEAR(uu, 1.0, 1e-10);
  EXPECT_NEAR(vv, 1.0, 1e-10);
  EXPECT_LE(std::abs(uv), 1e-10);
  for (const ParamVector& w : log.last_replicas) {
    const PlaneCoords c = plane_coords(p, w);
    const ParamVector back = reconstruct(p, c);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(back[i], w[i], 1e-12 * std::max(1.0, std::abs(w[i])));
    // The three spanning points lie in the plane up to round-off.
    EXPECT_LE(c.residual_norm(), 1e-12 * p.u_norm);
  }
}

TEST(Plane, GridOriginAndCornerLosses) {
  const Dataset ds = make_dataset(DatasetKind::Spirals, 100, 200, 2);
  const RunLog log = train(small_config(TrainMethod::Lookaround, 200, 0.3), ds,
                           make_augmentations(DatasetKind::Spirals, 3));
  const PlaneProjection p = plane_projection(log.last_replicas[0], log.last_replicas[1], log.last_replicas[2]);
  const double reach = 1.5 * std::max(p.u_norm, p.v_norm);
  const PlaneGrid g = plane_grid_eval(p, log.widths, ds.test, -reach, reach, -reach, reach, 5, 3);
  ASSERT_EQ(g.xs[2], 0.0);
  ASSERT_EQ(g.ys[2], 0.0);
  EXPECT_EQ(g.at(2, 2), mean_loss(log.widths, log.last_replicas[0], ds.test));

  const PlaneCoords h = plane_coords(p, log.last_replicas[1]);
  const double at_h = mean_loss(log.widths, plane_point(p, h.x, h.y), ds.test);
  const double direct = mean_loss(log.widths, log.last_replicas[1], ds.test);
  EXPECT_NEAR(at_h, direct, 1e-12 * direct);

  const PlaneGrid single = plane_grid_eval(p, log.widths, ds.test, -reach, reach, -reach, reach, 5, 1);
  EXPECT_EQ(single.loss, g.loss);
  EXPECT_THROW(plane_grid_eval(p, log.widths, ds.test, -1, 1, -1, 1, 1), std::invalid_argument);
}

TEST(Plane, LinspaceHitsEndsAndSymmetricCentre) {
  const std::vector<double> xs = linspace(-0.7, 0.7, 25);
  EXPECT_EQ(xs.front(), -0.7);
  EXPECT_EQ(xs.back(), 0.7);
  EXPECT_EQ(xs[12], 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_EQ(xs[i], -xs[xs.size() - 1 - i]);
}
