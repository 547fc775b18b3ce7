#include "irgan/objectives.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "irgan/core.hpp"
#include "irgan/dataset.hpp"
#include "irgan/sampling.hpp"
#include "irgan/scorers.hpp"

namespace {

using irgan::AdvantageBatch;
using irgan::ClipConfig;
using irgan::Dataset;
using irgan::LinearScorer;
using irgan::ParameterGradient;
using irgan::QueryDoc;
using irgan::Rng;

Dataset letor_from(const std::string& text) {
  std::istringstream in(text);
  return irgan::parse_letor(in);
}

Dataset load_fixture(const char* name, bool letor) {
  std::ifstream in(std::string(IRGAN_FIXTURES_DIR) + "/" + name);
  EXPECT_TRUE(in.good());
  return letor ? irgan::parse_letor(in) : irgan::parse_movielens(in);
}

TEST(DiscriminatorLoss, ZeroScoresGiveTwoLnTwo) {
  Dataset ds = load_fixture("tiny.letor", true);
  LinearScorer phi(2);  // zero params -> f = 0 everywhere
  std::vector<QueryDoc> pos = {{0, 0}};
  std::vector<QueryDoc> neg = {{0, 1}};
  auto [loss, g] = irgan::discriminator_loss_and_grad(phi, ds, pos, neg);
  EXPECT_NEAR(loss, 2.0 * std::log(2.0), 1e-12);
  // d loss/df = sigma(0) - 1 = -1/2 on the positive, sigma(0) = 1/2 on the
  // negative; features route those coefficients into the parameters.
  const double* xp = ds.features_at(0, 0);
  const double* xn = ds.features_at(0, 1);
  EXPECT_NEAR(g[0], -0.5 * xp[0] + 0.5 * xn[0], 1e-12);
  EXPECT_NEAR(g[1], -0.5 * xp[1] + 0.5 * xn[1], 1e-12);
  EXPECT_NEAR(g[2], 0.0, 1e-12);  // bias coefficients cancel
}

TEST(DiscriminatorLoss, ConfidentMarginSaturates) {
  Dataset ds = letor_from(
      "1 qid:1 1:1.0\n"
      "0 qid:1 1:-1.0\n");
  LinearScorer phi(1);
  phi.params = {50.0, 0.0};  // f(pos) = 50, f(neg) = -50
  auto [loss, g] = irgan::discriminator_loss_and_grad(phi, ds, {{0, 0}}, {{0, 1}});
  EXPECT_NEAR(loss, 0.0, 1e-9);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], 0.0, 1e-9);
}

TEST(DiscriminatorLoss, RequiresBothClasses) {
  Dataset ds = load_fixture("tiny.letor", true);
  LinearScorer phi(2);
  ParameterGradient g;
  g.reset(phi.params.size());
  EXPECT_THROW(
      irgan::accumulate_discriminator_loss(phi, ds, {}, {{0, 1}}, g),
      irgan::ContractViolation);
  EXPECT_THROW(
      irgan::accumulate_discriminator_loss(phi, ds, {{0, 0}}, {}, g),
      irgan::ContractViolation);
}

// Central finite difference of the discriminator loss along parameter i.
double fd_disc_loss(irgan::Scorer& phi, const Dataset& ds,
                    const std::vector<QueryDoc>& pos,
                    const std::vector<QueryDoc>& neg, std::size_t i, double h) {
  ParameterGradient scratch;
  scratch.reset(phi.params.size());
  double keep = phi.params[i];
  phi.params[i] = keep + h;
  double up = irgan::accumulate_discriminator_loss(phi, ds, pos, neg, scratch);
  phi.params[i] = keep - h;
  double down = irgan::accumulate_discriminator_loss(phi, ds, pos, neg, scratch);
  phi.params[i] = keep;
  return (up - down) / (2.0 * h);
}

TEST(DiscriminatorLoss, GradientMatchesFiniteDifferenceLinear) {
  Dataset ds = load_fixture("tiny.letor", true);
  std::vector<QueryDoc> pos = {{0, 0}, {1, 0}};
  std::vector<QueryDoc> neg = {{0, 1}, {0, 2}, {1, 1}};
  LinearScorer phi(2);
  Rng rng(41);
  for (int trial = 0; trial < 25; ++trial) {
    for (double& p : phi.params) p = rng.uniform(-1.5, 1.5);
    auto [loss, g] = irgan::discriminator_loss_and_grad(phi, ds, pos, neg);
    EXPECT_TRUE(std::isfinite(loss));
    for (std::size_t i = 0; i < phi.params.size(); ++i) {
      double fd = fd_disc_loss(phi, ds, pos, neg, i, 1e-5);
      if (std::fabs(g[i]) > 1e-8)
        EXPECT_NEAR(fd / g[i], 1.0, 1e-5) << "trial " << trial << " param " << i;
      else
        EXPECT_NEAR(fd, g[i], 1e-7);
    }
  }
}

TEST(DiscriminatorLoss, GradientMatchesFiniteDifferenceMatrixFactorization) {
  Dataset ds = load_fixture("tiny.udata", false);
  std::vector<QueryDoc> pos = {{0, 0}, {1, 4}};
  std::vector<QueryDoc> neg = {{0, 2}, {3, 7}};
  irgan::MatrixFactorizationScorer phi(ds.num_queries(), ds.num_docs(), 3);
  Rng rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    for (double& p : phi.params) p = rng.uniform(-0.8, 0.8);
    auto [loss, g] = irgan::discriminator_loss_and_grad(phi, ds, pos, neg);
    EXPECT_TRUE(std::isfinite(loss));
    for (int rep = 0; rep < 20; ++rep) {
      std::size_t i = rng.below(phi.params.size());
      double fd = fd_disc_loss(phi, ds, pos, neg, i, 1e-5);
      if (std::fabs(g[i]) > 1e-8)
        EXPECT_NEAR(fd / g[i], 1.0, 1e-5) << "param " << i;
      else
        EXPECT_NEAR(fd, g[i], 1e-8);
    }
  }
}

TEST(Advantages, CenteringClosedForms) {
  AdvantageBatch flat = irgan::advantage({0.7, 0.7, 0.7});
  for (double a : flat.advantages) EXPECT_NEAR(a, 0.0, 1e-15);
  EXPECT_NEAR(flat.batch_mean_reward, irgan::softplus(0.7), 1e-15);

  AdvantageBatch zeros = irgan::advantage({0.0, 0.0});
  EXPECT_NEAR(zeros.batch_mean_reward, std::log(2.0), 1e-15);

  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> f(1 + rng.below(16));
    for (double& x : f) x = rng.uniform(-5.0, 5.0);
    AdvantageBatch b = irgan::advantage(f);
    double sum = 0.0;
    for (double a : b.advantages) sum += a;
    EXPECT_NEAR(sum, 0.0, 1e-9);
    for (std::size_t i = 0; i < f.size(); ++i)
      EXPECT_NEAR(b.advantages[i],
                  irgan::softplus(f[i]) - b.batch_mean_reward, 1e-12);
  }
  EXPECT_THROW(irgan::advantage({}), irgan::ContractViolation);
  EXPECT_THROW(irgan::advantage({std::nan("")}), irgan::ContractViolation);
}

TEST(ProbRatio, ClosedFormsAndGuards) {
  EXPECT_DOUBLE_EQ(irgan::prob_ratio(0.3, 0.3), 1.0);
  EXPECT_NEAR(irgan::prob_ratio(0.5, 0.25), 2.0, 1e-15);
  EXPECT_NEAR(irgan::prob_ratio(0.1, 0.4), 0.25, 1e-15);
  EXPECT_DOUBLE_EQ(irgan::prob_ratio(0.0, 0.5), 0.0);
  EXPECT_THROW(irgan::prob_ratio(0.5, 0.0), irgan::ContractViolation);
  EXPECT_THROW(irgan::prob_ratio(-0.1, 0.5), irgan::ContractViolation);
}

TEST(ProbRatio, IdenticalPoliciesGiveUnitRatios) {
  Dataset ds = load_fixture("tiny.letor", true);
  LinearScorer theta(2);
  Rng rng(23);
  for (double& p : theta.params) p = rng.uniform(-1.0, 1.0);
  auto target = irgan::snapshot(theta);
  for (int q = 0; q < ds.num_queries(); ++q) {
    auto live = irgan::softmax_probs(theta.score_pool(ds, q));
    auto tgt = irgan::softmax_probs(target->score_pool(ds, q));
    for (std::size_t i = 0; i < live.size(); ++i)
      EXPECT_NEAR(irgan::prob_ratio(live[i], tgt[i]), 1.0, 1e-12);
  }
}

TEST(PpoObjective, ClosedForms) {
  ClipConfig clip;  // epsilon 0.2
  // All ratios 1 on centered advantages: objective is the advantage mean, 0.
  AdvantageBatch adv = irgan::advantage({1.0, -0.5, 2.0, 0.25});
  std::vector<double> ones(adv.advantages.size(), 1.0);
  EXPECT_NEAR(irgan::ppo_objective(ones, adv.advantages, clip), 0.0, 1e-12);
  // Positive advantage, ratio above the ceiling: clipped at 1.2.
  EXPECT_NEAR(irgan::ppo_objective({1.5}, {1.0}, clip), 1.2, 1e-15);
  // Negative advantage, ratio below the floor: pessimistic branch -0.8.
  EXPECT_NEAR(irgan::ppo_objective({0.5}, {-1.0}, clip), -0.8, 1e-15);

  EXPECT_THROW(irgan::ppo_objective({1.0}, {1.0, 2.0}, clip),
               irgan::ContractViolation);
  EXPECT_THROW(irgan::ppo_objective({}, {}, clip), irgan::ContractViolation);
  ClipConfig bad;
  bad.epsilon = 0.0;
  EXPECT_THROW(irgan::ppo_objective({1.0}, {1.0}, bad), irgan::ConfigError);
  bad.epsilon = 1.0;
  EXPECT_THROW(irgan::ppo_objective({1.0}, {1.0}, bad), irgan::ConfigError);
}

TEST(PpoCoeff, ClipGatingTable) {
  ClipConfig clip;  // lo 0.8, hi 1.2
  // Clipped-flat region: gradient exactly zero.
  EXPECT_EQ(irgan::ppo_sample_coeff(2.0, 1.0, clip), 0.0);
  EXPECT_EQ(irgan::ppo_sample_coeff(0.5, -1.0, clip), 0.0);
  // Pessimistic side stays live.
  EXPECT_DOUBLE_EQ(irgan::ppo_sample_coeff(2.0, -1.0, clip), -2.0);
  EXPECT_DOUBLE_EQ(irgan::ppo_sample_coeff(0.5, 1.0, clip), 0.5);
  // Interior.
  EXPECT_DOUBLE_EQ(irgan::ppo_sample_coeff(1.0, 0.7, clip), 0.7);
  // Exactly at the kink the unclipped branch wins.
  EXPECT_DOUBLE_EQ(irgan::ppo_sample_coeff(1.2, 1.0, clip), 1.2);
  EXPECT_DOUBLE_EQ(irgan::ppo_sample_coeff(0.8, -1.0, clip), -0.8);
}

TEST(PpoGrad, ZeroWhenPoliciesEqualAndAdvantagesZero) {
  Dataset ds = load_fixture("tiny.letor", true);
  LinearScorer theta(2);
  Rng rng(29);
  for (double& p : theta.params) p = rng.uniform(-1.0, 1.0);
  auto target = irgan::snapshot(theta);
  // Equal f-values center to zero advantages; with unit ratios the whole
  // surrogate gradient vanishes.
  ParameterGradient g = irgan::ppo_grad(theta, ds, 0, {0, 1, 2},
                                        {0.4, 0.4, 0.4}, *target, ClipConfig{});
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], 0.0, 1e-15);
}

// PPO surrogate value for FD checks: mean_i min(r_i A_i, clamp(r_i) A_i)
// with ratios live/target at the sampled positions.
double ppo_value(const irgan::Scorer& theta, const irgan::Scorer& target,
                 const Dataset& ds, int q, const std::vector<int>& samples,
                 const AdvantageBatch& adv, ClipConfig clip) {
  auto live = irgan::softmax_probs(theta.score_pool(ds, q));
  auto tgt = irgan::softmax_probs(target.score_pool(ds, q));
  std::vector<double> ratios(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    ratios[i] = irgan::prob_ratio(live[samples[i]], tgt[samples[i]]);
  return irgan::ppo_objective(ratios, adv.advantages, clip);
}

TEST(PpoGrad, MatchesFiniteDifferenceAwayFromKink) {
  Dataset ds = load_fixture("tiny.letor", true);
  ClipConfig clip;
  Rng rng(31);
  int accepted = 0;
  while (accepted < 20) {
    LinearScorer theta(2), target(2);
    for (double& p : theta.params) p = rng.uniform(-1.0, 1.0);
    // Target nearby so ratios stay in a sane range but off the kink.
    for (std::size_t i = 0; i < target.params.size(); ++i)
      target.params[i] = theta.params[i] + rng.uniform(-0.15, 0.15);
    int q = static_cast<int>(rng.below(2));
    std::vector<int> samples;
    for (int i = 0; i < 4; ++i)
      samples.push_back(static_cast<int>(rng.below(ds.pool_size(q))));
    std::vector<double> f(samples.size());
    for (double& x : f) x = rng.uniform(-2.0, 2.0);
    AdvantageBatch adv = irgan::advantage(f);

    // Skip configurations with a ratio within 1e-3 of a clip boundary: the
    // surrogate is non-differentiable there.
    auto live = irgan::softmax_probs(theta.score_pool(ds, q));
    auto tgt = irgan::softmax_probs(target.score_pool(ds, q));
    bool near_kink = false;
    for (int pos : samples) {
      double r = irgan::prob_ratio(live[pos], tgt[pos]);
      if (std::fabs(r - clip.lo()) < 1e-3 || std::fabs(r - clip.hi()) < 1e-3)
        near_kink = true;
    }
    if (near_kink) continue;
    ++accepted;

    ParameterGradient g = irgan::ppo_grad(theta, ds, q, samples, f, target, clip);
    for (std::size_t i = 0; i < theta.params.size(); ++i) {
      double keep = theta.params[i];
      theta.params[i] = keep + 1e-5;
      double up = ppo_value(theta, target, ds, q, samples, adv, clip);
      theta.params[i] = keep - 1e-5;
      double down = ppo_value(theta, target, ds, q, samples, adv, clip);
      theta.params[i] = keep;
      double fd = (up - down) / 2e-5;
      if (std::fabs(g[i]) > 1e-7)
        EXPECT_NEAR(fd / g[i], 1.0, 1e-5) << "param " << i;
      else
        EXPECT_NEAR(fd, g[i], 1e-7);
    }
  }
}

TEST(Reinforce, EqualRewardsGiveZeroGradient) {
  Dataset ds = load_fixture("tiny.letor", true);
  LinearScorer theta(2);
  Rng rng(37);
  for (double& p : theta.params) p = rng.uniform(-1.0, 1.0);
  ParameterGradient g =
      irgan::reinforce_grad(theta, ds, 0, {0, 2, 1}, {1.3, 1.3, 1.3});
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], 0.0, 1e-15);
}

TEST(Reinforce, TwoDocHandDerivedCase) {
  // Zero weights give the uniform policy over two one-hot docs, so
  // d log pi(0) = (1/2, -1/2, 0) and d log pi(1) = (-1/2, 1/2, 0); with
  // samples {0, 1} the estimator is ((A0-A1)/4, (A1-A0)/4, 0).
  Dataset ds = letor_from(
      "1 qid:1 1:1.0 2:0.0\n"
      "0 qid:1 1:0.0 2:1.0\n");
  LinearScorer theta(2);
  double f0 = 1.0, f1 = 0.0;
  ParameterGradient g = irgan::reinforce_grad(theta, ds, 0, {0, 1}, {f0, f1});
  double a_gap = irgan::softplus(f0) - irgan::softplus(f1);
  EXPECT_NEAR(g[0], a_gap / 4.0, 1e-12);
  EXPECT_NEAR(g[1], -a_gap / 4.0, 1e-12);
  EXPECT_NEAR(g[2], 0.0, 1e-15);
}

TEST(Reinforce, EnumeratedExpectationHasBaselineShrinkage) {
  // With the batch-mean baseline over K samples, the estimator's exact
  // expectation is (1 - 1/K) * grad E_{d~pi}[softplus f(d)]. Enumerate all
  // K=2 ordered sample pairs of a 3-doc pool and compare.
  Dataset ds = letor_from(
      "1 qid:1 1:0.9 2:0.1\n"
      "0 qid:1 1:0.2 2:0.8\n"
      "0 qid:1 1:0.5 2:0.4\n");
  LinearScorer theta(2);
  Rng rng(43);
  for (double& p : theta.params) p = rng.uniform(-1.0, 1.0);
  std::vector<double> f = {1.7, -0.6, 0.3};  // fixed, independent of theta

  auto pi = irgan::softmax_probs(theta.score_pool(ds, 0));
  std::vector<double> expectation(theta.params.size(), 0.0);
  for (int d1 = 0; d1 < 3; ++d1) {
    for (int d2 = 0; d2 < 3; ++d2) {
      ParameterGradient g =
          irgan::reinforce_grad(theta, ds, 0, {d1, d2}, {f[d1], f[d2]});
      double w = pi[d1] * pi[d2];
      for (std::size_t i = 0; i < expectation.size(); ++i)
        expectation[i] += w * g[i];
    }
  }

  // grad E[softplus f] = sum_d softplus(f_d) * pi_d * d log pi(d).
  std::vector<double> grad_e(theta.params.size(), 0.0);
  for (int d = 0; d < 3; ++d) {
    ParameterGradient dlog;
    dlog.reset(theta.params.size());
    irgan::add_grad_log_prob(theta, ds, 0, pi, d, 1.0, dlog);
    for (std::size_t i = 0; i < grad_e.size(); ++i)
      grad_e[i] += irgan::softplus(f[d]) * pi[d] * dlog[i];
  }

  for (std::size_t i = 0; i < expectation.size(); ++i) {
    double target = 0.5 * grad_e[i];  // (1 - 1/K) with K = 2
    if (std::fabs(target) > 1e-10)
      EXPECT_NEAR(expectation[i] / target, 1.0, 1e-10) << "param " << i;
    else
      EXPECT_NEAR(expectation[i], target, 1e-12);
  }
}

TEST(PolicyGradientBatch, Guards) {
  Dataset ds = load_fixture("tiny.letor", true);
  LinearScorer theta(2);
  ParameterGradient g;
  g.reset(theta.params.size());
  std::vector<double> probs(3, 1.0 / 3.0);
  EXPECT_THROW(irgan::add_policy_gradient_batch(theta, ds, 0, {0, 1}, {1.0},
                                                probs, 1.0, g),
               irgan::ContractViolation);
  EXPECT_THROW(irgan::add_policy_gradient_batch(theta, ds, 0, {}, {}, probs,
                                                1.0, g),
               irgan::ContractViolation);
  EXPECT_THROW(irgan::add_policy_gradient_batch(theta, ds, 0, {5}, {1.0},
                                                probs, 1.0, g),
               irgan::ContractViolation);
  EXPECT_THROW(irgan::add_policy_gradient_batch(theta, ds, 0, {0}, {1.0},
                                                {0.5, 0.5}, 1.0, g),
               irgan::ContractViolation);
}

}  // namespace
