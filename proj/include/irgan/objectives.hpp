// Loss/objective computations and their parameter gradients: discriminator
// log-likelihood, softplus advantages with a batch-mean baseline, PPO
// probability ratios and the clipped surrogate, and the REINFORCE estimator.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "irgan/core.hpp"
#include "irgan/dataset.hpp"
#include "irgan/sampling.hpp"
#include "irgan/scorers.hpp"

namespace irgan {

struct ClipConfig {
  double epsilon = 0.2;

  void check() const {
    if (!(epsilon > 0.0 && epsilon < 1.0))
      throw ConfigError("clip epsilon must be in (0, 1)");
  }
  double lo() const { return 1.0 - epsilon; }
  double hi() const { return 1.0 + epsilon; }
};

struct AdvantageBatch {
  std::vector<double> advantages;  // centered: mean is 0 by construction
  double batch_mean_reward = 0.0;
};

// A (query, pool position) pair addressing one candidate document.
struct QueryDoc {
  int q = 0;
  int pool_pos = 0;
};

// D(d|q) = sigma(f_phi(q, d)).
inline double discriminator_prob(double f) { return sigmoid(f); }

// loss = -[mean log sigma(f(pos)) + mean log(1 - sigma(f(neg)))]
// dloss/df is (sigma(f) - 1)/Npos on positives and sigma(f)/Nneg on
// negatives; the gradient is of the loss (descend by negating). The
// accumulate form adds into an existing gradient so per-query batches can
// share one buffer.
inline double accumulate_discriminator_loss(const Scorer& phi,
                                            const Dataset& ds,
                                            const std::vector<QueryDoc>& positives,
                                            const std::vector<QueryDoc>& negatives,
                                            ParameterGradient& g) {
  require(!positives.empty() && !negatives.empty(),
          "discriminator batch must contain positives and negatives");
  double loss = 0.0;
  const double wp = 1.0 / static_cast<double>(positives.size());
  const double wn = 1.0 / static_cast<double>(negatives.size());
  for (const QueryDoc& s : positives) {
    double f = phi.score_at(ds, s.q, s.pool_pos);
    loss -= wp * log_sigmoid(f);
    phi.add_score_gradient(ds, s.q, s.pool_pos, wp * (sigmoid(f) - 1.0), g);
  }
  for (const QueryDoc& s : negatives) {
    double f = phi.score_at(ds, s.q, s.pool_pos);
    loss -= wn * log_sigmoid(-f);  // log(1 - sigma(f)) = log sigma(-f)
    phi.add_score_gradient(ds, s.q, s.pool_pos, wn * sigmoid(f), g);
  }
  return loss;
}

inline std::pair<double, ParameterGradient> discriminator_loss_and_grad(
    const Scorer& phi, const Dataset& ds, const std::vector<QueryDoc>& positives,
    const std::vector<QueryDoc>& negatives) {
  ParameterGradient g;
  g.reset(phi.params.size());
  double loss = accumulate_discriminator_loss(phi, ds, positives, negatives, g);
  return {loss, std::move(g)};
}

// A_i = softplus(f_i) - mean_j softplus(f_j).
inline AdvantageBatch advantage(const std::vector<double>& f_values) {
  require(!f_values.empty(), "advantage of empty batch");
  AdvantageBatch out;
  out.advantages.resize(f_values.size());
  for (std::size_t i = 0; i < f_values.size(); ++i) {
    require(std::isfinite(f_values[i]), "non-finite discriminator score");
    out.advantages[i] = softplus(f_values[i]);
  }
  out.batch_mean_reward = mean_of(out.advantages);
  for (double& a : out.advantages) a -= out.batch_mean_reward;
  return out;
}

inline double prob_ratio(double p_current, double p_target) {
  require(p_target > 0.0, "target probability must be positive");
  require(p_current >= 0.0, "current probability must be non-negative");
  return std::exp(std::log(p_current) - std::log(p_target));
}

inline double ppo_objective(const std::vector<double>& ratios,
                            const std::vector<double>& advantages,
                            ClipConfig clip) {
  clip.check();
  require(ratios.size() == advantages.size() && !ratios.empty(),
          "ratio/advantage batch mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    double r = ratios[i], a = advantages[i];
    s += std::min(r * a, std::clamp(r, clip.lo(), clip.hi()) * a);
  }
  return s / static_cast<double>(ratios.size());
}

// Per-sample ascent coefficient of the clipped surrogate with respect to
// log pi_theta(d_i): A_i * r_i where the unclipped branch is selected, else
// exactly 0. At the kink the unclipped branch wins (ties included).
inline double ppo_sample_coeff(double ratio, double adv, ClipConfig clip) {
  if ((ratio > clip.hi() && adv > 0.0) || (ratio < clip.lo() && adv < 0.0))
    return 0.0;
  return adv * ratio;
}

// Shared accumulation: grad += scale * mean_i c_i * d log pi(d_i), with the
// pool-sum term folded so the candidate pool is swept once per query.
// `log_grad_scale` carries the relaxed policy's 1/tau factor (1 otherwise).
inline void add_policy_gradient_batch(const Scorer& theta, const Dataset& ds,
                                      int q, const std::vector<int>& samples,
                                      const std::vector<double>& coeffs,
                                      const std::vector<double>& live_probs,
                                      double log_grad_scale,
                                      ParameterGradient& g) {
  require(samples.size() == coeffs.size() && !samples.empty(),
          "sample/coefficient batch mismatch");
  require(static_cast<int>(live_probs.size()) == ds.pool_size(q),
          "policy/pool length mismatch");
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    int pos = samples[i];
    require(pos >= 0 && pos < ds.pool_size(q), "sample outside candidate pool");
    double c = coeffs[i] * inv_n * log_grad_scale;
    if (c != 0.0) theta.add_score_gradient(ds, q, pos, c, g);
    total += c;
  }
  if (total != 0.0)
    for (int j = 0; j < ds.pool_size(q); ++j)
      theta.add_score_gradient(ds, q, j, -total * live_probs[j], g);
}

// PPO ascent gradient with explicit policies; samples come from the target
// policy, ratios are live/target at the sampled positions.
inline void add_ppo_grad(const Scorer& theta, const Dataset& ds, int q,
                         const std::vector<int>& samples,
                         const AdvantageBatch& adv,
                         const std::vector<double>& live_probs,
                         const std::vector<double>& target_probs,
                         ClipConfig clip, double log_grad_scale,
                         ParameterGradient& g) {
  clip.check();
  require(samples.size() == adv.advantages.size(), "sample/advantage mismatch");
  require(live_probs.size() == target_probs.size(), "policy length mismatch");
  std::vector<double> coeffs(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double r = prob_ratio(live_probs[samples[i]], target_probs[samples[i]]);
    coeffs[i] = ppo_sample_coeff(r, adv.advantages[i], clip);
  }
  add_policy_gradient_batch(theta, ds, q, samples, coeffs, live_probs,
                            log_grad_scale, g);
}

// Convenience form over the noise-free softmax policies of the two scorers.
inline ParameterGradient ppo_grad(const Scorer& theta, const Dataset& ds, int q,
                                  const std::vector<int>& samples,
                                  const std::vector<double>& f_values,
                                  const Scorer& theta_target, ClipConfig clip) {
  ParameterGradient g;
  g.reset(theta.params.size());
  add_ppo_grad(theta, ds, q, samples, advantage(f_values),
               softmax_probs(theta.score_pool(ds, q)),
               softmax_probs(theta_target.score_pool(ds, q)), clip, 1.0, g);
  return g;
}

// REINFORCE with the batch-mean baseline: mean_i A_i * d log pi_theta(d_i).
// Samples come from pi_theta itself.
inline void add_reinforce_grad(const Scorer& theta, const Dataset& ds, int q,
                               const std::vector<int>& samples,
                               const AdvantageBatch& adv,
                               const std::vector<double>& live_probs,
                               double log_grad_scale, ParameterGradient& g) {
  require(samples.size() == adv.advantages.size(), "sample/advantage mismatch");
  add_policy_gradient_batch(theta, ds, q, samples, adv.advantages, live_probs,
                            log_grad_scale, g);
}

inline ParameterGradient reinforce_grad(const Scorer& theta, const Dataset& ds,
                                        int q, const std::vector<int>& samples,
                                        const std::vector<double>& f_values) {
  ParameterGradient g;
  g.reset(theta.params.size());
  add_reinforce_grad(theta, ds, q, samples, advantage(f_values),
                     softmax_probs(theta.score_pool(ds, q)), 1.0, g);
  return g;
}

}  // namespace irgan
