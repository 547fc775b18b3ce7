// Generator policy construction: stable softmax over candidate scores,
// Gumbel(0,1) noise, temperature-relaxed probabilities, Gumbel-Max discrete
// sampling, and the log-policy gradient building block.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "irgan/core.hpp"
#include "irgan/dataset.hpp"
#include "irgan/scorers.hpp"

namespace irgan {

struct CategoricalPolicy {
  std::vector<int> docs;     // candidate list (pool positions or doc indices)
  std::vector<double> probs;  // same length, >= 0, sums to 1
};

struct Temperature {
  double tau = 0.5;
  bool anneal = false;  // geometric schedule, off by default
  double tau_start = 1.0;
  double tau_end = 0.1;
  double decay_per_epoch = 0.95;

  double at_epoch(int epoch) const {
    if (!anneal) return tau;
    double t = tau_start * std::pow(decay_per_epoch, epoch);
    return t < tau_end ? tau_end : t;
  }
};

inline double log_sum_exp(const std::vector<double>& xs) {
  require(!xs.empty(), "log_sum_exp of empty vector");
  double m = xs[0];
  for (double x : xs) {
    require(std::isfinite(x), "non-finite score");
    if (x > m) m = x;
  }
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline void softmax_into(const std::vector<double>& scores,
                         std::vector<double>& probs) {
  double lse = log_sum_exp(scores);
  probs.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    probs[i] = std::exp(scores[i] - lse);
}

inline std::vector<double> softmax_probs(const std::vector<double>& scores) {
  std::vector<double> probs;
  softmax_into(scores, probs);
  return probs;
}

inline std::vector<double> log_softmax(const std::vector<double>& scores) {
  double lse = log_sum_exp(scores);
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] - lse;
  return out;
}

inline CategoricalPolicy softmax_policy(const std::vector<double>& scores) {
  CategoricalPolicy p;
  p.probs = softmax_probs(scores);
  p.docs.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    p.docs[i] = static_cast<int>(i);
  return p;
}

// v = -log(-log U), U uniform on the open interval (0,1).
inline void draw_gumbel_into(std::size_t n, Rng& rng, std::vector<double>& v) {
  v.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = -std::log(-std::log(rng.uniform_open01()));
}

inline std::vector<double> draw_gumbel(std::size_t n, Rng& rng) {
  std::vector<double> v;
  draw_gumbel_into(n, rng, v);
  return v;
}

// probs[i] proportional to exp((scores[i] + noise[i]) / tau). With the raw
// scores standing in for log g_theta, this is the relaxed sample of the
// Gumbel-Softmax reparametrization.
inline CategoricalPolicy gumbel_softmax_relaxed(const std::vector<double>& scores,
                                                const std::vector<double>& noise,
                                                double tau) {
  if (tau <= 0.0) throw ConfigError("temperature must be positive");
  require(scores.size() == noise.size(), "scores/noise length mismatch");
  std::vector<double> z(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    z[i] = (scores[i] + noise[i]) / tau;
  return softmax_policy(z);
}

inline int argmax_index(const std::vector<double>& xs) {
  require(!xs.empty(), "argmax of empty vector");
  int best = 0;
  for (int i = 1; i < static_cast<int>(xs.size()); ++i)
    if (xs[i] > xs[best]) best = i;
  return best;
}

// Gumbel-Max: each draw is argmax(scores + fresh noise), which is exactly
// categorical with softmax(scores) probabilities. With replacement.
inline int sample_discrete_one(const std::vector<double>& scores, Rng& rng) {
  require(!scores.empty(), "cannot sample from an empty pool");
  int best = 0;
  double best_v = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    require(std::isfinite(scores[i]), "non-finite score");
    double v = scores[i] - std::log(-std::log(rng.uniform_open01()));
    if (i == 0 || v > best_v) {
      best = static_cast<int>(i);
      best_v = v;
    }
  }
  return best;
}

inline std::vector<int> sample_discrete(const std::vector<double>& scores,
                                        int k, Rng& rng) {
  require(k >= 1, "sample count must be >= 1");
  std::vector<int> out(static_cast<std::size_t>(k));
  for (int draw = 0; draw < k; ++draw)
    out[draw] = sample_discrete_one(scores, rng);
  return out;
}

// Repeated Gumbel-Max draws from one fixed score vector. Since
// argmax_j (s_j - log(-log u_j)) = argmin_j (-log u_j) * exp(max_s - s_j),
// the exponentials can be cached across draws, leaving one log per pool item
// per draw. Consumes exactly the same uniform stream as sample_discrete: one
// draw per item, in pool order.
class RepeatedGumbelMax {
 public:
  RepeatedGumbelMax() = default;
  explicit RepeatedGumbelMax(const std::vector<double>& scores) {
    reset(scores);
  }

  void reset(const std::vector<double>& scores) {
    require(!scores.empty(), "cannot sample from an empty pool");
    double mx = scores[0];
    for (double s : scores) {
      require(std::isfinite(s), "non-finite score");
      mx = std::max(mx, s);
    }
    inv_weight_.resize(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
      inv_weight_[i] = std::exp(mx - scores[i]);
  }

  int draw(Rng& rng) const {
    int best = 0;
    double best_v = 0.0;
    for (std::size_t i = 0; i < inv_weight_.size(); ++i) {
      double v = -std::log(rng.uniform_open01()) * inv_weight_[i];
      if (i == 0 || v < best_v) {
        best = static_cast<int>(i);
        best_v = v;
      }
    }
    return best;
  }

 private:
  std::vector<double> inv_weight_;
};

// Rejection sampling of negatives: Gumbel-Max draws from softmax(scores),
// discarding rejected positions (the labeled positives), until `need` docs
// are accepted or max_attempts draws are spent. The accepted marginal is
// softmax(scores) restricted to the non-rejected positions. May return fewer
// than `need` entries when the pool is dominated by rejected docs.
inline std::vector<int> sample_negatives(const std::vector<double>& scores,
                                         const std::vector<char>& reject,
                                         int need, int max_attempts, Rng& rng) {
  require(scores.size() == reject.size(), "score/reject length mismatch");
  require(need >= 0 && max_attempts >= 0, "negative sample counts must be >= 0");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(need));
  RepeatedGumbelMax sampler(scores);
  int attempts = 0;
  while (static_cast<int>(out.size()) < need && attempts < max_attempts) {
    int pos = sampler.draw(rng);
    ++attempts;
    if (!reject[static_cast<std::size_t>(pos)]) out.push_back(pos);
  }
  return out;
}

// Accumulates coeff * d(log pi(sampled)) / d(theta) into g, where pi is any
// softmax-form policy over query q's pool with the given probabilities:
//   d log pi(d) = grad_score(d) - sum_j pi_j grad_score(j)
// For the temperature-relaxed policy the caller folds 1/tau into coeff.
inline void add_grad_log_prob(const Scorer& scorer, const Dataset& ds, int q,
                              const std::vector<double>& probs, int sampled_pos,
                              double coeff, ParameterGradient& g) {
  require(sampled_pos >= 0 &&
              sampled_pos < static_cast<int>(probs.size()) &&
              static_cast<int>(probs.size()) == ds.pool_size(q),
          "sampled index outside candidate pool");
  scorer.add_score_gradient(ds, q, sampled_pos, coeff, g);
  for (int j = 0; j < static_cast<int>(probs.size()); ++j)
    scorer.add_score_gradient(ds, q, j, -coeff * probs[j], g);
}

// Gradient of log p_theta(d|q) under the noise-free softmax policy.
inline ParameterGradient policy_grad_log_prob(const Scorer& scorer,
                                              const Dataset& ds, int q,
                                              int sampled_pos) {
  ParameterGradient g;
  g.reset(scorer.params.size());
  add_grad_log_prob(scorer, ds, q, softmax_probs(scorer.score_pool(ds, q)),
                    sampled_pos, 1.0, g);
  return g;
}

}  // namespace irgan
