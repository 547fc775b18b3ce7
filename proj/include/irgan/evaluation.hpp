// Ranking metrics (precision@k, NDCG@k, MAP), the test-set evaluation
// harness, and multi-seed aggregation with CSV/JSON emission.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "irgan/core.hpp"
#include "irgan/dataset.hpp"
#include "irgan/scorers.hpp"

namespace irgan {

struct Ranking {
  int q = 0;
  std::vector<int> docs;  // doc indices, descending score; ties by doc id
};

// Descending score; ties broken by ascending doc id (numeric-aware).
inline Ranking rank_pool(const Dataset& ds, int q,
                         const std::vector<double>& scores,
                         const std::vector<int>& pool) {
  require(!pool.empty(), "cannot rank an empty pool");
  require(scores.size() == pool.size(), "score/pool length mismatch");
  std::vector<int> order(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return doc_id_less(ds.doc_ids[pool[a]], ds.doc_ids[pool[b]]);
  });
  Ranking r;
  r.q = q;
  r.docs.resize(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) r.docs[i] = pool[order[i]];
  return r;
}

// Test-time ranking; for the per-user holdout protocol the user's training
// positives are removed from the candidate list before ranking.
inline Ranking rank(const Scorer& scorer, const Dataset& ds, int q,
                    bool mask_train_positives) {
  std::vector<int> pool;
  std::vector<double> scores;
  std::vector<int> train_pos;
  if (mask_train_positives) train_pos = ds.train_positive_docs(q);
  for (int pos = 0; pos < ds.pool_size(q); ++pos) {
    int d = ds.pool(q)[pos];
    if (mask_train_positives &&
        std::find(train_pos.begin(), train_pos.end(), d) != train_pos.end())
      continue;
    pool.push_back(d);
    scores.push_back(scorer.score_at(ds, q, pos));
  }
  require(!pool.empty(), "candidate pool empty after masking");
  return rank_pool(ds, q, scores, pool);
}

inline Ranking rank(const Scorer& scorer, const Dataset& ds, int q) {
  return rank(scorer, ds, q,
              ds.kind == DatasetKind::UserItem &&
                  ds.split == SplitKind::PerQueryHoldout);
}

// gains[d] > 0 marks d relevant; the map carries NDCG gain grades.
using GainMap = std::unordered_map<int, int>;

inline double precision_at_k(const std::vector<int>& ranked_docs,
                             const GainMap& gains, int k) {
  require(k >= 1, "k must be >= 1");
  int top = std::min<int>(k, static_cast<int>(ranked_docs.size()));
  int hits = 0;
  for (int i = 0; i < top; ++i) {
    auto it = gains.find(ranked_docs[i]);
    if (it != gains.end() && it->second > 0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

// DCG with gain 2^grade - 1 and discount log2(position + 1), positions
// starting at 1; normalized by the ideal DCG over the same candidates.
inline double ndcg_at_k(const std::vector<int>& ranked_docs,
                        const GainMap& gains, int k) {
  require(k >= 1, "k must be >= 1");
  auto gain_of = [&](int d) {
    auto it = gains.find(d);
    return it == gains.end() ? 0 : it->second;
  };
  int top = std::min<int>(k, static_cast<int>(ranked_docs.size()));
  double dcg = 0.0;
  for (int i = 0; i < top; ++i)
    dcg += (std::pow(2.0, gain_of(ranked_docs[i])) - 1.0) /
           std::log2(static_cast<double>(i) + 2.0);
  std::vector<int> ideal;
  ideal.reserve(ranked_docs.size());
  for (int d : ranked_docs) ideal.push_back(gain_of(d));
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());
  double idcg = 0.0;
  for (int i = 0; i < std::min<int>(k, static_cast<int>(ideal.size())); ++i)
    idcg += (std::pow(2.0, ideal[i]) - 1.0) /
            std::log2(static_cast<double>(i) + 2.0);
  require(idcg > 0.0, "ndcg undefined for a query without positives");
  return dcg / idcg;
}

inline double average_precision(const std::vector<int>& ranked_docs,
                                const GainMap& gains) {
  int total_relevant = 0;
  for (const auto& [d, g] : gains)
    if (g > 0) ++total_relevant;
  require(total_relevant > 0, "MAP undefined for a query without positives");
  double sum = 0.0;
  int hits = 0;
  for (std::size_t i = 0; i < ranked_docs.size(); ++i) {
    auto it = gains.find(ranked_docs[i]);
    if (it != gains.end() && it->second > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(total_relevant);
}

struct MetricValues {
  // p@3, p@5, p@10, ndcg@3, ndcg@5, ndcg@10, map
  std::array<double, 7> v{};

  static constexpr std::array<const char*, 7> names = {
      "p@3", "p@5", "p@10", "ndcg@3", "ndcg@5", "ndcg@10", "map"};

  double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
};

struct MetricReport {
  std::string arm;  // "generator" or "discriminator"
  std::uint64_t seed = 0;
  int queries_evaluated = 0;
  MetricValues mean;
  std::vector<std::pair<int, MetricValues>> per_query;
};

// Gains a test-time ranking is scored against: held-out (or test-query)
// positives with their grades; everything else counts 0.
inline GainMap eval_gains(const Dataset& ds, int q) {
  GainMap gains;
  for (int d : ds.test_positive_docs(q)) gains[d] = ds.grade_of(q, d);
  return gains;
}

inline MetricValues metrics_for_ranking(const std::vector<int>& ranked,
                                        const GainMap& gains) {
  MetricValues m;
  const int ks[3] = {3, 5, 10};
  for (int i = 0; i < 3; ++i) {
    m[i] = precision_at_k(ranked, gains, ks[i]);
    m[i + 3] = ndcg_at_k(ranked, gains, ks[i]);
  }
  m[6] = average_precision(ranked, gains);
  return m;
}

// Per-query metrics over the test split, averaged over queries that have at
// least one test positive.
inline MetricReport evaluate_scorer(const Scorer& scorer, const Dataset& ds,
                                    const std::string& arm,
                                    std::uint64_t seed = 0) {
  MetricReport rep;
  rep.arm = arm;
  rep.seed = seed;
  for (int q : ds.test_queries()) {
    GainMap gains = eval_gains(ds, q);
    if (gains.empty()) continue;
    Ranking r = rank(scorer, ds, q);
    MetricValues m = metrics_for_ranking(r.docs, gains);
    rep.per_query.emplace_back(q, m);
    for (int i = 0; i < 7; ++i) rep.mean[i] += m[i];
  }
  require(!rep.per_query.empty(), "test split has no queries with positives");
  rep.queries_evaluated = static_cast<int>(rep.per_query.size());
  for (int i = 0; i < 7; ++i)
    rep.mean[i] /= static_cast<double>(rep.queries_evaluated);
  return rep;
}

struct EvalPair {
  MetricReport generator;
  MetricReport discriminator;
};

inline EvalPair evaluate(const Scorer& generator, const Scorer& discriminator,
                         const Dataset& ds, std::uint64_t seed = 0) {
  return {evaluate_scorer(generator, ds, "generator", seed),
          evaluate_scorer(discriminator, ds, "discriminator", seed)};
}

struct MetricSummary {
  std::string arm;
  int runs = 0;
  MetricValues mean;
  MetricValues sd;
};

// Mean and (population) standard deviation per metric across seed reports.
inline MetricSummary aggregate_seeds(const std::vector<MetricReport>& reports) {
  require(!reports.empty(), "aggregate of zero reports");
  MetricSummary s;
  s.arm = reports[0].arm;
  s.runs = static_cast<int>(reports.size());
  for (const MetricReport& r : reports)
    require(r.arm == s.arm, "cannot aggregate reports from different arms");
  for (int i = 0; i < 7; ++i) {
    std::vector<double> xs;
    xs.reserve(reports.size());
    for (const MetricReport& r : reports) xs.push_back(r.mean[i]);
    s.mean[i] = mean_of(xs);
    s.sd[i] = stddev_of(xs);
  }
  return s;
}

inline nlohmann::json report_to_json(const MetricReport& r) {
  nlohmann::json j;
  j["arm"] = r.arm;
  j["seed"] = r.seed;
  j["queries_evaluated"] = r.queries_evaluated;
  for (int i = 0; i < 7; ++i) j["mean"][MetricValues::names[i]] = r.mean[i];
  return j;
}

inline std::string format_metric(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

inline std::string metrics_csv_header() {
  return "model,p@3,p@5,p@10,ndcg@3,ndcg@5,ndcg@10";
}

inline std::string metrics_csv_row(const std::string& model,
                                   const MetricValues& m) {
  std::string row = model;
  for (int i = 0; i < 6; ++i) row += "," + format_metric(m[i]);
  return row;
}

}  // namespace irgan
