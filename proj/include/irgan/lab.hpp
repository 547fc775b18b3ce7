// Synthetic-world equilibrium diagnostics: known true relevance
// distributions, JS-divergence traces between the generator policy and the
// truth, discriminator drift (distance of sigma(f_phi) from 1/2), and
// multi-seed convergence/stability studies.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "irgan/core.hpp"
#include "irgan/dataset.hpp"
#include "irgan/sampling.hpp"
#include "irgan/scorers.hpp"
#include "irgan/trainer.hpp"

namespace irgan {

struct SyntheticWorld {
  int n_queries = 0;
  int docs_per_query = 0;
  double sharpness = 0.0;
  std::uint64_t seed = 0;
  int top_t = 1;  // docs per query marked relevant (top of the true policy)
  std::vector<std::vector<double>> true_policy;  // per query, sums to 1
};

// True policies are softmax(sharpness * gaussian); sharpness 0 gives the
// uniform distribution. Relevant docs are each query's top-T by true mass.
inline SyntheticWorld make_world(int n_queries, int docs_per_query,
                                 double sharpness, std::uint64_t seed,
                                 int top_t = 0) {
  require(n_queries >= 1 && docs_per_query >= 1, "world dims must be >= 1");
  require(sharpness >= 0.0, "sharpness must be >= 0");
  SyntheticWorld w;
  w.n_queries = n_queries;
  w.docs_per_query = docs_per_query;
  w.sharpness = sharpness;
  w.seed = seed;
  w.top_t = top_t > 0 ? std::min(top_t, docs_per_query)
                      : std::max(1, docs_per_query / 10);
  Rng rng(derive_stream_seed(seed, "synthetic-world", StreamRole::Init));
  w.true_policy.resize(static_cast<std::size_t>(n_queries));
  for (auto& policy : w.true_policy) {
    std::vector<double> scores(static_cast<std::size_t>(docs_per_query));
    for (double& s : scores) s = sharpness * rng.normal();
    policy = softmax_probs(scores);
  }
  return w;
}

// The world as a pair-feature dataset: disjoint per-query pools with one-hot
// (query, doc) features, so both scorers are tabular logit tables and the
// game stays in policy space. Every query's top-T true docs become grade-1
// judgments, all kept in the training split (the lab measures distribution
// recovery, not held-out accuracy).
inline Dataset world_to_dataset(const SyntheticWorld& w) {
  Dataset ds;
  ds.kind = DatasetKind::PairFeatures;
  const int M = w.docs_per_query;
  ds.feature_dim = w.n_queries * M;
  for (int q = 0; q < w.n_queries; ++q)
    ds.query_ids.push_back("w" + std::to_string(q));
  ds.queries.resize(static_cast<std::size_t>(w.n_queries));
  for (int q = 0; q < w.n_queries; ++q) {
    QueryData& qd = ds.queries[q];
    qd.pool.resize(static_cast<std::size_t>(M));
    qd.features.assign(static_cast<std::size_t>(M) * ds.feature_dim, 0.0);
    for (int d = 0; d < M; ++d) {
      int pair = q * M + d;
      ds.doc_ids.push_back("w" + std::to_string(q) + "#" + std::to_string(d));
      qd.pool[d] = pair;
      qd.features[static_cast<std::size_t>(d) * ds.feature_dim + pair] = 1.0;
    }
    std::vector<int> order(static_cast<std::size_t>(M));
    for (int d = 0; d < M; ++d) order[d] = d;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return w.true_policy[q][a] > w.true_policy[q][b];
    });
    for (int i = 0; i < w.top_t; ++i) {
      Judgment j;
      j.doc = q * M + order[i];
      j.grade = 1;
      ds.queries[q].judgments.push_back(j);
    }
  }
  ds.rebuild_index();
  return ds;
}

// 0.5*KL(p||m) + 0.5*KL(q||m) with m = (p+q)/2, natural log; in [0, ln 2].
inline double js_divergence(const std::vector<double>& p,
                            const std::vector<double>& q) {
  require(p.size() == q.size() && !p.empty(), "JS divergence support mismatch");
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    require(p[i] >= 0.0 && q[i] >= 0.0, "JS divergence needs probabilities");
    double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) js += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) js += 0.5 * q[i] * std::log(q[i] / m);
  }
  return js;
}

inline std::vector<double> generator_policy(const Scorer& theta,
                                            const Dataset& ds, int q) {
  return softmax_probs(theta.score_pool(ds, q));
}

inline double mean_js_to_truth(const Scorer& theta, const Dataset& ds,
                               const SyntheticWorld& w) {
  double total = 0.0;
  for (int q = 0; q < w.n_queries; ++q)
    total += js_divergence(generator_policy(theta, ds, q), w.true_policy[q]);
  return total / static_cast<double>(w.n_queries);
}

// Monte-Carlo drift: mean |sigma(f_phi) - 0.5| over docs drawn half from the
// true policy and half from the generator policy.
inline double discriminator_drift(const Scorer& phi, const SyntheticWorld& w,
                                  const Dataset& ds, const Scorer& theta,
                                  int samples_per_query, Rng& rng) {
  require(samples_per_query >= 1, "samples_per_query must be >= 1");
  double total = 0.0;
  long count = 0;
  for (int q = 0; q < w.n_queries; ++q) {
    const std::vector<double> gen = generator_policy(theta, ds, q);
    for (int rep = 0; rep < samples_per_query; ++rep) {
      for (const std::vector<double>* dist :
           std::initializer_list<const std::vector<double>*>{&w.true_policy[q],
                                                             &gen}) {
        double u = rng.uniform01(), acc = 0.0;
        int pick = static_cast<int>(dist->size()) - 1;
        for (std::size_t d = 0; d < dist->size(); ++d) {
          acc += (*dist)[d];
          if (u < acc) {
            pick = static_cast<int>(d);
            break;
          }
        }
        total += std::abs(sigmoid(phi.score_at(ds, q, pick)) - 0.5);
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

// Exact expectation of the same quantity by full pool enumeration;
// deterministic, used for trace checkpoints.
inline double discriminator_drift_exact(const Scorer& phi,
                                        const SyntheticWorld& w,
                                        const Dataset& ds, const Scorer& theta) {
  double total = 0.0;
  for (int q = 0; q < w.n_queries; ++q) {
    std::vector<double> gen = generator_policy(theta, ds, q);
    for (int d = 0; d < w.docs_per_query; ++d) {
      double mass = 0.5 * (w.true_policy[q][d] + gen[d]);
      total += mass * std::abs(sigmoid(phi.score_at(ds, q, d)) - 0.5);
    }
  }
  return total / static_cast<double>(w.n_queries);
}

inline double mean_policy_entropy(const Scorer& theta, const Dataset& ds,
                                  int n_queries) {
  double total = 0.0;
  for (int q = 0; q < n_queries; ++q) {
    double h = 0.0;
    for (double p : generator_policy(theta, ds, q))
      if (p > 0.0) h -= p * std::log(p);
    total += h;
  }
  return total / static_cast<double>(n_queries);
}

struct TraceEntry {
  int iteration = 0;
  double js = 0.0;
  double drift = 0.0;
  double entropy = 0.0;
};

struct DivergenceTrace {
  std::string variant;
  std::uint64_t seed = 0;
  std::vector<TraceEntry> entries;

  const TraceEntry& final_entry() const {
    require(!entries.empty(), "empty divergence trace");
    return entries.back();
  }
};

struct StudyRun {
  std::string variant;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  DivergenceTrace trace;
};

struct ConvergenceStudy {
  std::vector<StudyRun> runs;

  std::vector<const StudyRun*> runs_for(const std::string& variant) const {
    std::vector<const StudyRun*> out;
    for (const StudyRun& r : runs)
      if (r.variant == variant && !r.failed) out.push_back(&r);
    return out;
  }

  // Cross-seed mean and standard deviation of the final JS divergence.
  std::pair<double, double> final_js_stats(const std::string& variant) const {
    std::vector<double> finals;
    for (const StudyRun* r : runs_for(variant))
      finals.push_back(r->trace.final_entry().js);
    if (finals.empty())
      throw ContractViolation("no completed runs for variant " + variant);
    return {mean_of(finals), stddev_of(finals)};
  }
};

// Canonical study configuration for synthetic worlds. The tabular game wants
// a generator step large enough that the PPO clip (not the raw step size) is
// the binding rate limit, and a discriminator ridge strong enough that sigma(f)
// plateaus near 1/2 instead of saturating; with those two in place the clipped
// variants settle into the equilibrium neighbourhood while unclipped REINFORCE
// overshoots into mode collapse.
inline TrainConfig lab_study_config() {
  TrainConfig cfg;
  cfg.lr_generator = 2.0;
  cfg.lr_discriminator = 0.05;
  cfg.l2_discriminator = 0.2;
  cfg.k_sync = 25;
  cfg.warmup_discriminator = 200;
  cfg.max_iterations = 450;
  cfg.eval_every = 0;
  cfg.probe_every = 25;
  return cfg;
}

// Trains every (variant, seed) pair on the world, tracing JS/drift/entropy
// at the probe cadence starting from the initial state. Run failures are
// recorded and the study continues. With fair_budget set, alternating
// variants get twice the iteration and warmup budget so both schedules
// perform the same number of per-model updates.
inline ConvergenceStudy run_convergence_study(
    const std::vector<std::string>& variants, const SyntheticWorld& world,
    const std::vector<std::uint64_t>& seeds, const TrainConfig& base_config,
    bool fair_budget = true) {
  require(!variants.empty(), "study needs >= 1 variant");
  require(seeds.size() >= 1, "study needs >= 1 seed");
  Dataset ds = world_to_dataset(world);
  ConvergenceStudy study;
  for (const std::string& vname : variants) {
    for (std::uint64_t seed : seeds) {
      StudyRun run;
      run.variant = vname;
      run.seed = seed;
      run.trace.variant = vname;
      run.trace.seed = seed;
      try {
        TrainConfig cfg = base_config;
        cfg.variant = variant_from_name(vname);
        cfg.seed = seed;
        cfg.eval_every = 0;
        if (cfg.probe_every <= 0) cfg.probe_every = 25;
        if (fair_budget && cfg.variant.schedule == Schedule::Alternating) {
          cfg.max_iterations *= 2;
          cfg.warmup_discriminator *= 2;
          cfg.probe_every *= 2;
        }
        Trainer tr(ds, cfg);
        auto probe = [&](int iteration, const Scorer& theta, const Scorer& phi) {
          TraceEntry e;
          e.iteration = iteration;
          e.js = mean_js_to_truth(theta, ds, world);
          e.drift = discriminator_drift_exact(phi, world, ds, theta);
          e.entropy = mean_policy_entropy(theta, ds, world.n_queries);
          require(std::isfinite(e.js) && std::isfinite(e.drift) &&
                      std::isfinite(e.entropy),
                  "non-finite trace entry");
          run.trace.entries.push_back(e);
        };
        TrainResult res = tr.run(nullptr, probe);
        if (res.aborted) {
          run.failed = true;
          run.error = "training aborted on non-finite loss";
        }
      } catch (const std::exception& e) {
        run.failed = true;
        run.error = e.what();
      }
      study.runs.push_back(std::move(run));
    }
  }
  return study;
}

inline std::string trace_csv_header() {
  return "variant,seed,iteration,js,drift,entropy";
}

inline std::string trace_csv_rows(const DivergenceTrace& t) {
  std::string out;
  char buf[160];
  for (const TraceEntry& e : t.entries) {
    std::snprintf(buf, sizeof(buf), "%s,%llu,%d,%.6f,%.6f,%.6f\n",
                  t.variant.c_str(), static_cast<unsigned long long>(t.seed),
                  e.iteration, e.js, e.drift, e.entropy);
    out += buf;
  }
  return out;
}

inline nlohmann::json trace_to_jsonl_lines(const DivergenceTrace& t) {
  nlohmann::json lines = nlohmann::json::array();
  for (const TraceEntry& e : t.entries) {
    nlohmann::json j;
    j["variant"] = t.variant;
    j["seed"] = t.seed;
    j["iteration"] = e.iteration;
    j["js"] = e.js;
    j["drift"] = e.drift;
    j["entropy"] = e.entropy;
    lines.push_back(std::move(j));
  }
  return lines;
}

}  // namespace irgan
