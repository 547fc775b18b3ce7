// Adversarial training engine: interleaved single-step updates with target
// sync (Algorithm 1) and the original alternating-epoch schedule, over the
// objective (PPO vs REINFORCE) x schedule x sampler (Gumbel vs plain) grid.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "irgan/core.hpp"
#include "irgan/dataset.hpp"
#include "irgan/evaluation.hpp"
#include "irgan/objectives.hpp"
#include "irgan/sampling.hpp"
#include "irgan/scorers.hpp"

namespace irgan {

enum class Objective { Reinforce, Ppo };
enum class Schedule { Alternating, Interleaved };
enum class SamplerKind { Plain, Gumbel };

struct Variant {
  Objective objective = Objective::Reinforce;
  Schedule schedule = Schedule::Alternating;
  SamplerKind sampler = SamplerKind::Plain;

  friend bool operator==(const Variant&, const Variant&) = default;
};

// The four canonical ablation arms. Shorthand like "-SGS"/"-PPO" bundles the
// toggles ambiguously, so the grid keeps objective/schedule/sampler
// independent and these names pin one documented mapping.
inline Variant variant_from_name(const std::string& name) {
  if (name == "baseline") return {Objective::Reinforce, Schedule::Alternating, SamplerKind::Plain};
  if (name == "ppo") return {Objective::Ppo, Schedule::Alternating, SamplerKind::Plain};
  if (name == "sgs") return {Objective::Reinforce, Schedule::Interleaved, SamplerKind::Gumbel};
  if (name == "sgs+ppo") return {Objective::Ppo, Schedule::Interleaved, SamplerKind::Gumbel};
  throw ConfigError("unknown variant `" + name +
                    "` (expected baseline|ppo|sgs|sgs+ppo)");
}

inline const std::vector<std::string>& canonical_variants() {
  static const std::vector<std::string> v = {"baseline", "ppo", "sgs", "sgs+ppo"};
  return v;
}

inline std::string variant_name(const Variant& v) {
  for (const std::string& name : canonical_variants())
    if (variant_from_name(name) == v) return name;
  std::string s;
  s += v.objective == Objective::Ppo ? "ppo" : "reinforce";
  s += v.schedule == Schedule::Interleaved ? "-interleaved" : "-alternating";
  s += v.sampler == SamplerKind::Gumbel ? "-gumbel" : "-plain";
  return s;
}

struct TrainConfig {
  Variant variant;
  double lr_generator = 0.01;
  double lr_discriminator = 0.01;
  double l2_generator = 0.0;
  double l2_discriminator = 1e-4;
  ClipConfig clip;           // epsilon = 0.2
  Temperature temperature;   // tau = 0.5
  int k_sync = 5;            // target refresh cadence, in generator updates
  int k_samples = 5;         // docs sampled per query per generator step
  double neg_pos_ratio = 1.0;
  int gen_inner_epochs = 5;  // alternating schedule cycle lengths
  int disc_inner_epochs = 5;
  int warmup_discriminator = 0;  // discriminator-only steps before the loop
  std::uint64_t seed = 1;
  int max_iterations = 200;
  int eval_every = 10;       // validation cadence in iterations; 0 disables
  int patience = 20;         // evaluation rounds without p@5 improvement
  int probe_every = 0;       // lab probe cadence; 0 disables
  int latent_dim = 5;        // matrix-factorization E
  InitScheme init = InitScheme::uniform(0.05);
  int query_batch_size = 0;     // queries per iteration; 0 = all
  int positives_per_query = 0;  // positives per query per disc step; 0 = all

  void validate() const {
    if (lr_generator < 0.0 || lr_discriminator < 0.0)
      throw ConfigError("learning rates must be non-negative");
    if (l2_generator < 0.0 || l2_discriminator < 0.0)
      throw ConfigError("l2 terms must be non-negative");
    clip.check();
    if (temperature.tau <= 0.0) throw ConfigError("tau must be positive");
    if (k_sync < 1) throw ConfigError("k_sync must be >= 1");
    if (k_samples < 1) throw ConfigError("k_samples must be >= 1");
    if (neg_pos_ratio <= 0.0) throw ConfigError("neg_pos_ratio must be positive");
    if (gen_inner_epochs < 0 || disc_inner_epochs < 0 ||
        gen_inner_epochs + disc_inner_epochs == 0)
      throw ConfigError("inner epochs must be non-negative, not both zero");
    if (max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
    if (warmup_discriminator < 0) throw ConfigError("warmup must be >= 0");
    if (eval_every < 0 || patience < 1)
      throw ConfigError("bad evaluation cadence or patience");
    if (probe_every < 0) throw ConfigError("probe_every must be >= 0");
    if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
    if (query_batch_size < 0 || positives_per_query < 0)
      throw ConfigError("batch caps must be >= 0");
  }
};

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["variant"] = variant_name(c.variant);
  j["objective"] = c.variant.objective == Objective::Ppo ? "ppo" : "reinforce";
  j["schedule"] =
      c.variant.schedule == Schedule::Interleaved ? "interleaved" : "alternating";
  j["sampler"] = c.variant.sampler == SamplerKind::Gumbel ? "gumbel" : "plain";
  j["lr_generator"] = c.lr_generator;
  j["lr_discriminator"] = c.lr_discriminator;
  j["l2_generator"] = c.l2_generator;
  j["l2_discriminator"] = c.l2_discriminator;
  j["epsilon"] = c.clip.epsilon;
  j["tau"] = c.temperature.tau;
  j["tau_anneal"] = c.temperature.anneal;
  j["k_sync"] = c.k_sync;
  j["k_samples"] = c.k_samples;
  j["neg_pos_ratio"] = c.neg_pos_ratio;
  j["gen_inner_epochs"] = c.gen_inner_epochs;
  j["disc_inner_epochs"] = c.disc_inner_epochs;
  j["warmup_discriminator"] = c.warmup_discriminator;
  j["seed"] = c.seed;
  j["max_iterations"] = c.max_iterations;
  j["eval_every"] = c.eval_every;
  j["patience"] = c.patience;
  j["probe_every"] = c.probe_every;
  j["latent_dim"] = c.latent_dim;
  j["init_scheme"] = c.init.kind == InitScheme::Uniform ? "uniform" : "gaussian";
  j["init_param"] = c.init.param;
  j["query_batch_size"] = c.query_batch_size;
  j["positives_per_query"] = c.positives_per_query;
  return j;
}

// Append-only run log; serialized as JSON-lines. Contains no timestamps so
// identical runs serialize byte-identically.
struct RunLog {
  std::vector<nlohmann::json> lines;

  void append(nlohmann::json j) { lines.push_back(std::move(j)); }

  std::string to_jsonl() const {
    std::string out;
    for (const auto& j : lines) {
      out += j.dump();
      out += '\n';
    }
    return out;
  }
};

struct TrainResult {
  std::unique_ptr<Scorer> generator;
  std::unique_ptr<Scorer> generator_target;
  std::unique_ptr<Scorer> discriminator;
  RunLog log;
  int iterations_run = 0;
  bool aborted = false;
  bool stopped_early = false;
};

// Called right after each target sync and once at termination.
using CheckpointSink =
    std::function<void(int iteration, const Scorer& theta, const Scorer& phi)>;
// Called on the initial state and every probe_every iterations (lab probes).
using ProbeSink =
    std::function<void(int iteration, const Scorer& theta, const Scorer& phi)>;

class Trainer {
 public:
  Trainer(const Dataset& ds, TrainConfig cfg)
      : ds_(ds), cfg_(std::move(cfg)) {
    cfg_.validate();
    theta_ = init_scorer(ds_, cfg_.latent_dim, cfg_.init,
                         derive_stream_seed(cfg_.seed, "generator", StreamRole::Init));
    phi_ = init_scorer(ds_, cfg_.latent_dim, cfg_.init,
                       derive_stream_seed(cfg_.seed, "discriminator", StreamRole::Init));
    theta_target_ = snapshot(*theta_);
    for (int q : ds_.train_queries())
      if (!ds_.train_positive_docs(q).empty() && ds_.pool_size(q) > 0)
        train_qs_.push_back(q);
    if (train_qs_.empty())
      throw DataError("no trainable queries (need >= 1 training positive)");
    nlohmann::json meta;
    meta["type"] = "meta";
    meta["rng_algorithm"] = kRngAlgorithmId;
    meta["config"] = train_config_to_json(cfg_);
    meta["train_queries"] = static_cast<int>(train_qs_.size());
    log_.append(std::move(meta));
  }

  const Scorer& generator() const { return *theta_; }
  const Scorer& generator_target() const { return *theta_target_; }
  const Scorer& discriminator() const { return *phi_; }
  const RunLog& log() const { return log_; }
  int iteration() const { return iteration_; }
  int generator_updates() const { return gen_updates_; }
  int discriminator_updates() const { return disc_updates_; }

  TrainResult run(const CheckpointSink& on_checkpoint = nullptr,
                  const ProbeSink& on_probe = nullptr) {
    const bool eval_enabled = cfg_.eval_every > 0 && has_test_queries();
    double best_p5 = -1.0;
    int stale_rounds = 0;
    bool stopped_early = false;

    if (cfg_.probe_every > 0 && on_probe) on_probe(0, *theta_, *phi_);

    const int total = cfg_.warmup_discriminator + cfg_.max_iterations;
    int t = 0;
    for (; t < total; ++t) {
      bool gen_active, disc_active;
      if (t < cfg_.warmup_discriminator) {
        gen_active = false;
        disc_active = true;
      } else if (cfg_.variant.schedule == Schedule::Interleaved) {
        gen_active = disc_active = true;
      } else {
        int cycle = cfg_.gen_inner_epochs + cfg_.disc_inner_epochs;
        int pos = (t - cfg_.warmup_discriminator) % cycle;
        gen_active = pos < cfg_.gen_inner_epochs;
        disc_active = !gen_active;
      }

      std::vector<int> batch = batch_for(t);
      // Generator first, then discriminator on negatives from the updated
      // theta; the inactive model's pass only computes diagnostics.
      GenStats gs = generator_step(batch, t, gen_active);
      DiscStats dstats = discriminator_step(batch, t, disc_active);

      nlohmann::json rec;
      rec["type"] = "iteration";
      rec["iteration"] = t;
      rec["d_loss"] = dstats.loss;
      rec["g_objective"] = gs.objective;
      rec["drift"] = dstats.drift;
      rec["entropy"] = gs.entropy;
      rec["mean_reward"] = gs.mean_reward;
      rec["gen_updates"] = gen_updates_;
      rec["disc_updates"] = disc_updates_;
      bool finite = std::isfinite(dstats.loss) && std::isfinite(gs.objective) &&
                    std::isfinite(dstats.drift) && std::isfinite(gs.entropy) &&
                    std::isfinite(gs.mean_reward);
      if (!finite) {
        nlohmann::json abort;
        abort["type"] = "abort";
        abort["iteration"] = t;
        abort["reason"] = "non-finite loss or objective";
        log_.append(std::move(abort));
        aborted_ = true;
        break;
      }
      log_.append(std::move(rec));

      if (synced_this_iteration_ && on_checkpoint)
        on_checkpoint(t, *theta_, *phi_);
      if (cfg_.probe_every > 0 && on_probe && (t + 1) % cfg_.probe_every == 0)
        on_probe(t + 1, *theta_, *phi_);

      if (eval_enabled && (t + 1) % cfg_.eval_every == 0) {
        EvalPair ev = evaluate(*theta_, *phi_, ds_, cfg_.seed);
        nlohmann::json vrec;
        vrec["type"] = "validation";
        vrec["iteration"] = t;
        vrec["generator"] = report_to_json(ev.generator);
        vrec["discriminator"] = report_to_json(ev.discriminator);
        log_.append(std::move(vrec));
        double p5 = std::max(ev.generator.mean[1], ev.discriminator.mean[1]);
        if (p5 > best_p5 + 1e-12) {
          best_p5 = p5;
          stale_rounds = 0;
        } else if (++stale_rounds >= cfg_.patience) {
          stopped_early = true;
          ++t;
          break;
        }
      }
    }
    iteration_ = t;

    TrainResult res;
    res.iterations_run = t;
    res.aborted = aborted_;
    res.stopped_early = stopped_early;

    nlohmann::json fin;
    fin["type"] = "final";
    fin["iterations_run"] = t;
    fin["aborted"] = aborted_;
    fin["stopped_early"] = stopped_early;
    fin["generator_updates"] = gen_updates_;
    fin["discriminator_updates"] = disc_updates_;
    if (!aborted_ && has_test_queries()) {
      EvalPair ev = evaluate(*theta_, *phi_, ds_, cfg_.seed);
      fin["generator"] = report_to_json(ev.generator);
      fin["discriminator"] = report_to_json(ev.discriminator);
    }
    log_.append(std::move(fin));

    if (on_checkpoint) on_checkpoint(t, *theta_, *phi_);
    res.generator = theta_->clone();
    res.generator_target = theta_target_->clone();
    res.discriminator = phi_->clone();
    res.log = log_;
    return res;
  }

 private:
  struct GenStats {
    double objective = 0.0;
    double entropy = 0.0;
    double mean_reward = 0.0;
  };
  struct DiscStats {
    double loss = 0.0;
    double drift = 0.0;
  };

  bool has_test_queries() const { return !ds_.test_queries().empty(); }

  // Batch of train queries for iteration t: full set when no cap, else the
  // t-th slice of a per-epoch seeded shuffle. Random-access and identical
  // across schedules so step 1 replays identically on every arm.
  std::vector<int> batch_for(int t) const {
    if (cfg_.query_batch_size == 0 ||
        cfg_.query_batch_size >= static_cast<int>(train_qs_.size()))
      return train_qs_;
    int n = static_cast<int>(train_qs_.size());
    int bs = cfg_.query_batch_size;
    int per_epoch = (n + bs - 1) / bs;
    int epoch = t / per_epoch;
    int slot = t % per_epoch;
    std::vector<int> order = train_qs_;
    Rng rng(derive_stream_seed(cfg_.seed, "batch-order", StreamRole::EpochShuffle,
                               static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    auto lo = order.begin() + slot * bs;
    auto hi = slot == per_epoch - 1 ? order.end() : lo + bs;
    std::vector<int> batch(lo, hi);
    std::sort(batch.begin(), batch.end());
    return batch;
  }

  // One generator pass over the batch. Gradients accumulate in ascending
  // query order into a single ParameterGradient, applied once. When `apply`
  // is false only the diagnostics are computed (alternating schedule).
  GenStats generator_step(const std::vector<int>& batch, int t, bool apply) {
    const bool ppo = cfg_.variant.objective == Objective::Ppo;
    const bool gumbel = cfg_.variant.sampler == SamplerKind::Gumbel;
    const double tau = cfg_.temperature.at_epoch(t);
    const int K = cfg_.k_samples;
    ParameterGradient grad;
    if (apply) grad.reset(theta_->params.size());

    GenStats stats;
    int used = 0;
    std::vector<int> docs(static_cast<std::size_t>(K));
    std::vector<double> f(static_cast<std::size_t>(K));
    std::vector<double> ratios(static_cast<std::size_t>(K));
    std::vector<double> log_live(static_cast<std::size_t>(K));
    std::vector<double> coeffs(static_cast<std::size_t>(K));
    sc_relaxed_.resize(static_cast<std::size_t>(K));
    for (int q : batch) {
      const std::size_t pool = static_cast<std::size_t>(ds_.pool_size(q));
      theta_->score_pool_into(ds_, q, sc_live_);
      if (ppo) theta_target_->score_pool_into(ds_, q, sc_tgt_);
      // Samples come from the target policy for PPO, the live one otherwise.
      const std::vector<double>& s_sample = ppo ? sc_tgt_ : sc_live_;
      Rng rng(derive_stream_seed(cfg_.seed, ds_.query_ids[q],
                                 StreamRole::GeneratorSampling,
                                 static_cast<std::uint64_t>(t)));
      // The ratio and objective use the categorical policy p_θ; the relaxed
      // per-sample policy (gumbel) is only the gradient pathway.
      softmax_into(sc_live_, sc_cat_live_);
      if (ppo) softmax_into(sc_tgt_, sc_cat_tgt_);
      std::fill(ratios.begin(), ratios.end(), 1.0);
      if (gumbel) {
        for (int i = 0; i < K; ++i) {
          draw_gumbel_into(pool, rng, sc_noise_);
          int best = 0;
          double best_v = s_sample[0] + sc_noise_[0];
          for (std::size_t j = 1; j < pool; ++j) {
            double v = s_sample[j] + sc_noise_[j];
            if (v > best_v) {
              best = static_cast<int>(j);
              best_v = v;
            }
          }
          docs[i] = best;
          // relaxed live policy under the shared noise, softmax in place
          std::vector<double>& y = sc_relaxed_[i];
          y.resize(pool);
          double zmax = -std::numeric_limits<double>::infinity();
          for (std::size_t j = 0; j < pool; ++j) {
            y[j] = (sc_live_[j] + sc_noise_[j]) / tau;
            if (y[j] > zmax) zmax = y[j];
          }
          double zsum = 0.0;
          for (std::size_t j = 0; j < pool; ++j) {
            y[j] = std::exp(y[j] - zmax);
            zsum += y[j];
          }
          for (std::size_t j = 0; j < pool; ++j) y[j] /= zsum;
          log_live[i] = std::log(sc_cat_live_[docs[i]]);
          if (ppo)
            ratios[i] = prob_ratio(sc_cat_live_[docs[i]], sc_cat_tgt_[docs[i]]);
        }
      } else {
        sc_sampler_.reset(s_sample);
        for (int i = 0; i < K; ++i) {
          docs[i] = sc_sampler_.draw(rng);
          log_live[i] = std::log(sc_cat_live_[docs[i]]);
          if (ppo)
            ratios[i] = prob_ratio(sc_cat_live_[docs[i]], sc_cat_tgt_[docs[i]]);
        }
      }
      for (int i = 0; i < K; ++i) f[i] = phi_->score_at(ds_, q, docs[i]);
      AdvantageBatch adv = advantage(f);

      double objective = 0.0;
      for (int i = 0; i < K; ++i) {
        if (ppo) {
          coeffs[i] = ppo_sample_coeff(ratios[i], adv.advantages[i], cfg_.clip);
          double r = ratios[i], a = adv.advantages[i];
          objective +=
              std::min(r * a, std::clamp(r, cfg_.clip.lo(), cfg_.clip.hi()) * a);
        } else {
          coeffs[i] = adv.advantages[i];
          objective += adv.advantages[i] * log_live[i];
        }
      }
      objective /= static_cast<double>(K);

      // Per-query gradients (sample means) sum across the batch: the
      // overall objective is the sum of per-query objectives, and summing
      // keeps per-user rows at full strength regardless of batch size.
      if (apply) {
        if (gumbel) {
          // One pool sweep: fold the K relaxed normalization terms into a
          // per-item coefficient before touching the scorer gradient.
          const double inv_k = 1.0 / (static_cast<double>(K) * tau);
          sc_item_coeff_.assign(pool, 0.0);
          for (int i = 0; i < K; ++i) {
            double c = coeffs[i] * inv_k;
            if (c == 0.0) continue;
            sc_item_coeff_[docs[i]] += c;
            const std::vector<double>& y = sc_relaxed_[i];
            for (std::size_t j = 0; j < pool; ++j)
              sc_item_coeff_[j] -= c * y[j];
          }
          for (std::size_t j = 0; j < pool; ++j)
            if (sc_item_coeff_[j] != 0.0)
              theta_->add_score_gradient(ds_, q, static_cast<int>(j),
                                         sc_item_coeff_[j], grad);
        } else {
          add_policy_gradient_batch(*theta_, ds_, q, docs, coeffs,
                                    sc_cat_live_, 1.0, grad);
        }
      }

      const std::vector<double>& sample_probs = ppo ? sc_cat_tgt_ : sc_cat_live_;
      double h = 0.0;
      for (double p : sample_probs)
        if (p > 0.0) h -= p * std::log(p);
      stats.objective += objective;
      stats.entropy += h;
      stats.mean_reward += adv.batch_mean_reward;
      ++used;
    }
    if (used > 0) {
      stats.objective /= used;
      stats.entropy /= used;
      stats.mean_reward /= used;
    }

    if (apply) {
      apply_update(*theta_, grad, cfg_.lr_generator, cfg_.l2_generator);
      ++gen_updates_;
      synced_this_iteration_ = gen_updates_ % cfg_.k_sync == 0;
      if (synced_this_iteration_) theta_target_ = snapshot(*theta_);
    } else {
      synced_this_iteration_ = false;
    }
    return stats;
  }

  // Positives from the training judgments of one query plus negatives
  // sampled from the current generator policy (labeled positives rejected
  // with a bounded retry).
  void build_discriminator_batch(int q, int t, std::vector<QueryDoc>& positives,
                                 std::vector<QueryDoc>& negatives) {
    positives.clear();
    negatives.clear();
    std::vector<int> pos = ds_.train_positive_docs(q);
    if (pos.empty()) {
      warn_once("query " + ds_.query_ids[q] +
                " has no training positives; skipped in discriminator batch", t);
      return;
    }
    // All training positives are off-limits as negatives, even when only a
    // subsample of them enters the batch.
    sc_is_pos_.assign(static_cast<std::size_t>(ds_.num_docs()), 0);
    for (int d : pos) sc_is_pos_[static_cast<std::size_t>(d)] = 1;
    if (cfg_.positives_per_query > 0 &&
        static_cast<int>(pos.size()) > cfg_.positives_per_query) {
      Rng prng(derive_stream_seed(cfg_.seed, ds_.query_ids[q],
                                  StreamRole::PositiveChoice,
                                  static_cast<std::uint64_t>(t)));
      prng.shuffle(pos);
      pos.resize(static_cast<std::size_t>(cfg_.positives_per_query));
      std::sort(pos.begin(), pos.end());
    }
    for (int d : pos) {
      int pp = ds_.pool_position(q, d);
      require(pp >= 0, "positive doc missing from its pool");
      positives.push_back({q, pp});
    }

    int need = static_cast<int>(
        std::ceil(cfg_.neg_pos_ratio * static_cast<double>(pos.size())));
    theta_->score_pool_into(ds_, q, sc_neg_scores_);
    sc_reject_.resize(static_cast<std::size_t>(ds_.pool_size(q)));
    for (int pp = 0; pp < ds_.pool_size(q); ++pp)
      sc_reject_[pp] = sc_is_pos_[static_cast<std::size_t>(ds_.pool(q)[pp])];
    Rng nrng(derive_stream_seed(cfg_.seed, ds_.query_ids[q],
                                StreamRole::NegativeSampling,
                                static_cast<std::uint64_t>(t)));
    std::vector<int> negs =
        sample_negatives(sc_neg_scores_, sc_reject_, need, need * 20, nrng);
    for (int pp : negs) negatives.push_back({q, pp});
    if (static_cast<int>(negs.size()) < need)
      warn_once("query " + ds_.query_ids[q] +
                ": negative sampling exhausted retries (pool dominated by positives)",
                t);
  }

  // One discriminator pass. Per-query batches go through the loss separately
  // (means within a query) and the per-query gradients sum across the batch,
  // mirroring the generator's accounting.
  DiscStats discriminator_step(const std::vector<int>& batch, int t, bool apply) {
    ParameterGradient grad;
    grad.reset(phi_->params.size());
    double loss_sum = 0.0, drift_sum = 0.0;
    long drift_count = 0;
    int used = 0;
    std::vector<QueryDoc> positives, negatives;
    for (int q : batch) {
      build_discriminator_batch(q, t, positives, negatives);
      if (positives.empty() || negatives.empty()) continue;
      loss_sum +=
          accumulate_discriminator_loss(*phi_, ds_, positives, negatives, grad);
      ++used;
      for (const QueryDoc& s : positives)
        drift_sum += std::abs(sigmoid(phi_->score_at(ds_, s.q, s.pool_pos)) - 0.5);
      for (const QueryDoc& s : negatives)
        drift_sum += std::abs(sigmoid(phi_->score_at(ds_, s.q, s.pool_pos)) - 0.5);
      drift_count += static_cast<long>(positives.size() + negatives.size());
    }

    DiscStats stats;
    if (used == 0) {
      warn_once("discriminator batch empty; update skipped", t);
      stats.loss = 2.0 * std::log(2.0);
      stats.drift = 0.0;
      return stats;
    }
    stats.loss = loss_sum / static_cast<double>(used);
    stats.drift = drift_sum / static_cast<double>(drift_count);

    if (apply && std::isfinite(stats.loss)) {
      grad.scale(-1.0);  // descend the loss; l2 still shrinks parameters
      apply_update(*phi_, grad, cfg_.lr_discriminator, cfg_.l2_discriminator);
      ++disc_updates_;
    }
    return stats;
  }

  void warn_once(const std::string& msg, int t) {
    if (!warned_.insert(msg).second) return;
    nlohmann::json w;
    w["type"] = "warning";
    w["iteration"] = t;
    w["message"] = msg;
    log_.append(std::move(w));
  }

  const Dataset& ds_;
  TrainConfig cfg_;
  std::unique_ptr<Scorer> theta_, theta_target_, phi_;
  std::vector<int> train_qs_;
  RunLog log_;
  int iteration_ = 0;
  int gen_updates_ = 0;
  int disc_updates_ = 0;
  bool synced_this_iteration_ = false;
  bool aborted_ = false;
  std::set<std::string> warned_;
  // Reused per-query scratch; the trainer is single-threaded.
  std::vector<double> sc_live_, sc_tgt_, sc_cat_live_, sc_cat_tgt_;
  std::vector<double> sc_noise_, sc_item_coeff_, sc_neg_scores_;
  std::vector<std::vector<double>> sc_relaxed_;
  std::vector<char> sc_is_pos_, sc_reject_;
  RepeatedGumbelMax sc_sampler_;
};

inline TrainResult run_training(const Dataset& ds, const TrainConfig& cfg,
                                const CheckpointSink& on_checkpoint = nullptr,
                                const ProbeSink& on_probe = nullptr) {
  Trainer tr(ds, cfg);
  return tr.run(on_checkpoint, on_probe);
}

}  // namespace irgan
