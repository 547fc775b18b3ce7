#include "irgan/evaluation.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "irgan/core.hpp"
#include "irgan/dataset.hpp"
#include "irgan/scorers.hpp"

namespace {

using irgan::Dataset;
using irgan::GainMap;
using irgan::LinearScorer;
using irgan::MetricReport;
using irgan::Ranking;

Dataset letor_from(const std::string& text) {
  std::istringstream in(text);
  return irgan::parse_letor(in);
}

// Independent references, straight from the definitions.
double ref_precision(const std::vector<int>& ranked, const GainMap& gains,
                     int k) {
  int hits = 0;
  for (int i = 0; i < std::min<int>(k, ranked.size()); ++i) {
    auto it = gains.find(ranked[i]);
    if (it != gains.end() && it->second > 0) ++hits;
  }
  return static_cast<double>(hits) / k;
}

double ref_dcg(const std::vector<int>& gains_in_order, int k) {
  double dcg = 0.0;
  for (int i = 0; i < std::min<int>(k, gains_in_order.size()); ++i)
    dcg += (std::pow(2.0, gains_in_order[i]) - 1.0) / std::log2(i + 2.0);
  return dcg;
}

double ref_ndcg(const std::vector<int>& ranked, const GainMap& gains, int k) {
  std::vector<int> in_order, sorted;
  for (int d : ranked) {
    auto it = gains.find(d);
    int g = it == gains.end() ? 0 : it->second;
    in_order.push_back(g);
    sorted.push_back(g);
  }
  std::sort(sorted.rbegin(), sorted.rend());
  return ref_dcg(in_order, k) / ref_dcg(sorted, k);
}

TEST(RankPool, TieBreaksByDocId) {
  // Five docs, all scored equally: order falls back to numeric-aware id
  // order. Ids D1 < D10 < D2 lexicographically, 2 < 10 numerically.
  Dataset ds = letor_from(
      "0 qid:1 1:0.0 #docid = D2\n"
      "0 qid:1 1:0.0 #docid = D10\n"
      "1 qid:1 1:0.0 #docid = D1\n"
      "0 qid:1 1:0.0 #docid = 10\n"
      "0 qid:1 1:0.0 #docid = 2\n");
  std::vector<double> scores(5, 1.25);
  Ranking r = irgan::rank_pool(ds, 0, scores, ds.pool(0));
  std::vector<std::string> ids;
  for (int d : r.docs) ids.push_back(ds.doc_ids[d]);
  EXPECT_EQ(ids, (std::vector<std::string>{"2", "10", "D1", "D10", "D2"}));
}

TEST(RankPool, DescendingScoreHandCase) {
  Dataset ds = letor_from(
      "0 qid:1 1:0.0 #docid = d1\n"
      "0 qid:1 1:0.0 #docid = d2\n"
      "0 qid:1 1:0.0 #docid = d3\n");
  Ranking r = irgan::rank_pool(ds, 0, {2.0, 5.0, 1.0}, ds.pool(0));
  std::vector<std::string> ids;
  for (int d : r.docs) ids.push_back(ds.doc_ids[d]);
  EXPECT_EQ(ids, (std::vector<std::string>{"d2", "d1", "d3"}));
  EXPECT_THROW(irgan::rank_pool(ds, 0, {}, {}), irgan::ContractViolation);
  EXPECT_THROW(irgan::rank_pool(ds, 0, {1.0}, ds.pool(0)),
               irgan::ContractViolation);
}

TEST(Metrics, PrecisionClosedForms) {
  GainMap gains = {{0, 1}, {1, 2}, {2, 0}};
  EXPECT_DOUBLE_EQ(irgan::precision_at_k({0, 1, 2}, gains, 3), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(irgan::precision_at_k({0, 1, 2}, gains, 2), 1.0);
  EXPECT_DOUBLE_EQ(irgan::precision_at_k({2, 3, 4}, gains, 3), 0.0);
  // k exceeding the list size keeps k in the denominator.
  EXPECT_DOUBLE_EQ(irgan::precision_at_k({0, 1}, gains, 5), 2.0 / 5.0);
  EXPECT_THROW(irgan::precision_at_k({0}, gains, 0), irgan::ContractViolation);
}

TEST(Metrics, NdcgClosedForms) {
  GainMap one = {{7, 1}};
  // Ideal ranking: ndcg 1 at every k.
  EXPECT_NEAR(irgan::ndcg_at_k({7, 8, 9}, one, 1), 1.0, 1e-15);
  EXPECT_NEAR(irgan::ndcg_at_k({7, 8, 9}, one, 3), 1.0, 1e-15);
  // Single relevant doc at position 2, k = 2: dcg = 1/log2(3), idcg = 1.
  EXPECT_NEAR(irgan::ndcg_at_k({8, 7, 9}, one, 2), 1.0 / std::log2(3.0), 1e-12);
  EXPECT_NEAR(irgan::ndcg_at_k({8, 7, 9}, one, 2), 0.6309297535714574, 1e-12);
  // Graded gains: 2^g - 1 in the numerator.
  GainMap graded = {{0, 2}, {1, 1}};
  double dcg = 3.0 / std::log2(2.0) + 1.0 / std::log2(3.0);
  EXPECT_NEAR(irgan::ndcg_at_k({0, 1}, graded, 2), dcg / dcg, 1e-15);
  double swapped = 1.0 / std::log2(2.0) + 3.0 / std::log2(3.0);
  EXPECT_NEAR(irgan::ndcg_at_k({1, 0}, graded, 2), swapped / dcg, 1e-12);
  GainMap none = {{3, 0}};
  EXPECT_THROW(irgan::ndcg_at_k({3, 4}, none, 2), irgan::ContractViolation);
}

TEST(Metrics, AveragePrecisionClosedForms) {
  GainMap gains = {{0, 1}, {2, 1}};
  // Hits at ranks 1 and 3: AP = (1/1 + 2/3) / 2.
  EXPECT_NEAR(irgan::average_precision({0, 1, 2}, gains), 5.0 / 6.0, 1e-15);
  EXPECT_NEAR(irgan::average_precision({0, 2, 1}, gains), 1.0, 1e-15);
  // A positive missing from the ranking still counts in the denominator.
  EXPECT_NEAR(irgan::average_precision({0, 1}, gains), 0.5, 1e-15);
  GainMap none;
  EXPECT_THROW(irgan::average_precision({0}, none), irgan::ContractViolation);
}

TEST(Metrics, BruteForceOverAllPermutations) {
  // Every permutation of a 6-doc pool, every k <= 6, exact agreement with
  // the from-the-definition references.
  std::vector<int> docs = {0, 1, 2, 3, 4, 5};
  GainMap gains = {{0, 2}, {1, 0}, {2, 1}, {3, 0}, {4, 1}, {5, 0}};
  int permutations = 0;
  do {
    for (int k = 1; k <= 6; ++k) {
      ASSERT_NEAR(irgan::precision_at_k(docs, gains, k),
                  ref_precision(docs, gains, k), 1e-12);
      ASSERT_NEAR(irgan::ndcg_at_k(docs, gains, k), ref_ndcg(docs, gains, k),
                  1e-12);
    }
    ++permutations;
  } while (std::next_permutation(docs.begin(), docs.end()));
  EXPECT_EQ(permutations, 720);
}

Dataset two_doc_queries(int n) {
  std::ostringstream text;
  for (int q = 0; q < n; ++q)
    text << "1 qid:" << q << " 1:1.0\n"
         << "0 qid:" << q << " 1:-1.0\n";
  return letor_from(text.str());
}

TEST(EvaluateScorer, OracleAndAntiOracle) {
  Dataset ds = two_doc_queries(4);
  LinearScorer oracle(1);
  oracle.params = {1.0, 0.0};  // scores +1 on positives, -1 on negatives
  MetricReport rep = irgan::evaluate_scorer(oracle, ds, "generator", 3);
  EXPECT_EQ(rep.arm, "generator");
  EXPECT_EQ(rep.seed, 3u);
  EXPECT_EQ(rep.queries_evaluated, 4);
  // Two-doc pools: perfect ranking gives ndcg/map 1; p@k dilutes by k.
  EXPECT_NEAR(rep.mean[3], 1.0, 1e-15);  // ndcg@3
  EXPECT_NEAR(rep.mean[6], 1.0, 1e-15);  // map
  EXPECT_NEAR(rep.mean[0], 1.0 / 3.0, 1e-15);  // p@3
  EXPECT_NEAR(rep.mean[1], 1.0 / 5.0, 1e-15);  // p@5

  LinearScorer anti(1);
  anti.params = {-1.0, 0.0};
  MetricReport worst = irgan::evaluate_scorer(anti, ds, "generator");
  EXPECT_NEAR(worst.mean[3], 1.0 / std::log2(3.0), 1e-12);  // positive last
  EXPECT_NEAR(worst.mean[6], 0.5, 1e-15);
}

TEST(EvaluateScorer, AntiOracleZeroPrecisionOnDeepPool) {
  // Eight docs, one positive ranked last: nothing relevant in the top 5.
  std::ostringstream text;
  text << "1 qid:0 1:1.0\n";
  for (int d = 0; d < 7; ++d) text << "0 qid:0 1:" << -0.1 * (d + 1) << "\n";
  Dataset ds = letor_from(text.str());
  LinearScorer anti(1);
  anti.params = {-1.0, 0.0};
  MetricReport rep = irgan::evaluate_scorer(anti, ds, "generator");
  EXPECT_DOUBLE_EQ(rep.mean[0], 0.0);  // p@3
  EXPECT_DOUBLE_EQ(rep.mean[1], 0.0);  // p@5
  EXPECT_NEAR(rep.mean[6], 1.0 / 8.0, 1e-15);
}

TEST(EvaluateScorer, SkipsGainlessQueriesAndThrowsWhenNoneLeft) {
  // Second query has no positives: skipped, not a crash.
  Dataset ds = letor_from(
      "1 qid:0 1:1.0\n0 qid:0 1:0.0\n"
      "0 qid:1 1:1.0\n0 qid:1 1:0.0\n");
  LinearScorer s(1);
  s.params = {1.0, 0.0};
  MetricReport rep = irgan::evaluate_scorer(s, ds, "generator");
  EXPECT_EQ(rep.queries_evaluated, 1);

  Dataset none = letor_from("0 qid:0 1:1.0\n0 qid:0 1:0.0\n");
  EXPECT_THROW(irgan::evaluate_scorer(s, none, "generator"),
               irgan::ContractViolation);
}

TEST(Rank, MasksTrainPositivesOnlyForUserItemHoldout) {
  // User 7 has positives on items 1 and 2; fraction 0.5 holds one out.
  std::ostringstream text;
  text << "7\t1\t4\t0\n7\t2\t4\t0\n7\t3\t1\t0\n7\t4\t1\t0\n";
  std::istringstream in(text.str());
  Dataset raw = irgan::parse_movielens(in);
  Dataset ds = irgan::split_dataset(raw, 0.5, 13);
  int q = ds.query_index("7");
  auto train_pos = ds.train_positive_docs(q);
  auto test_pos = ds.test_positive_docs(q);
  ASSERT_EQ(train_pos.size(), 1u);
  ASSERT_EQ(test_pos.size(), 1u);

  irgan::MatrixFactorizationScorer s(ds.num_queries(), ds.num_docs(), 1);
  s.params[s.bias_offset(train_pos[0])] = 10.0;  // train positive on top
  s.params[s.bias_offset(test_pos[0])] = 5.0;

  // Default rank() on a held-out user-item split drops the train positive.
  Ranking masked = irgan::rank(s, ds, q);
  EXPECT_EQ(masked.docs.size(), 3u);
  EXPECT_EQ(std::find(masked.docs.begin(), masked.docs.end(), train_pos[0]),
            masked.docs.end());
  EXPECT_EQ(masked.docs.front(), test_pos[0]);

  // Explicitly unmasked (and unsplit data) keep the full pool.
  Ranking unmasked = irgan::rank(s, ds, q, false);
  EXPECT_EQ(unmasked.docs.size(), 4u);
  EXPECT_EQ(unmasked.docs.front(), train_pos[0]);
  Ranking raw_rank = irgan::rank(s, raw, raw.query_index("7"));
  EXPECT_EQ(raw_rank.docs.size(), 4u);

  // The held-out positive lands on top of the masked ranking: p@1-equivalent
  // behavior shows up as a full ndcg.
  MetricReport rep = irgan::evaluate_scorer(s, ds, "generator");
  EXPECT_NEAR(rep.mean[3], 1.0, 1e-15);
}

TEST(Rank, QueryLevelSplitNeverMasks) {
  Dataset ds = irgan::split_dataset(two_doc_queries(10), 0.8, 13);
  LinearScorer s(1);
  s.params = {1.0, 0.0};
  for (int q : ds.test_queries()) {
    Ranking r = irgan::rank(s, ds, q);
    EXPECT_EQ(r.docs.size(), 2u);  // nothing removed
  }
}

TEST(Aggregate, MeanAndSdAcrossSeeds) {
  MetricReport a, b;
  a.arm = b.arm = "generator";
  a.mean[1] = 0.2;
  b.mean[1] = 0.4;
  irgan::MetricSummary s = irgan::aggregate_seeds({a, b});
  EXPECT_EQ(s.runs, 2);
  EXPECT_NEAR(s.mean[1], 0.3, 1e-15);
  EXPECT_NEAR(s.sd[1], 0.1, 1e-12);

  irgan::MetricSummary single = irgan::aggregate_seeds({a});
  EXPECT_DOUBLE_EQ(single.sd[1], 0.0);

  MetricReport other;
  other.arm = "discriminator";
  EXPECT_THROW(irgan::aggregate_seeds({a, other}), irgan::ContractViolation);
  EXPECT_THROW(irgan::aggregate_seeds({}), irgan::ContractViolation);

  // Five-report recomputation against the scalar helpers.
  std::vector<MetricReport> reports(5);
  std::vector<double> xs = {0.1, 0.3, 0.25, 0.4, 0.15};
  for (int i = 0; i < 5; ++i) {
    reports[i].arm = "generator";
    reports[i].mean[4] = xs[i];
  }
  irgan::MetricSummary five = irgan::aggregate_seeds(reports);
  EXPECT_NEAR(five.mean[4], irgan::mean_of(xs), 1e-15);
  EXPECT_NEAR(five.sd[4], irgan::stddev_of(xs), 1e-15);
}

TEST(Emission, CsvAndJsonShapes) {
  EXPECT_EQ(irgan::metrics_csv_header(), "model,p@3,p@5,p@10,ndcg@3,ndcg@5,ndcg@10");
  irgan::MetricValues m;
  m[0] = 1.0;
  m[1] = 0.5;
  m[5] = 1.0 / 3.0;
  EXPECT_EQ(irgan::metrics_csv_row("baseline/generator", m),
            "baseline/generator,1.0000,0.5000,0.0000,0.0000,0.0000,0.3333");
  EXPECT_EQ(irgan::format_metric(0.63092975), "0.6309");

  MetricReport rep;
  rep.arm = "generator";
  rep.seed = 11;
  rep.queries_evaluated = 3;
  rep.mean[1] = 0.25;
  nlohmann::json j = irgan::report_to_json(rep);
  EXPECT_EQ(j["arm"], "generator");
  EXPECT_EQ(j["seed"], 11);
  EXPECT_EQ(j["queries_evaluated"], 3);
  EXPECT_DOUBLE_EQ(j["mean"]["p@5"].get<double>(), 0.25);
}

TEST(Emission, MetricNamesStayAligned) {
  ASSERT_EQ(irgan::MetricValues::names.size(), 7u);
  EXPECT_STREQ(irgan::MetricValues::names[0], "p@3");
  EXPECT_STREQ(irgan::MetricValues::names[3], "ndcg@3");
  EXPECT_STREQ(irgan::MetricValues::names[6], "map");
  // metrics_for_ranking wires each slot to its metric.
  GainMap gains = {{0, 1}};
  std::vector<int> ranked = {1, 0, 2};
  irgan::MetricValues m = irgan::metrics_for_ranking(ranked, gains);
  EXPECT_DOUBLE_EQ(m[0], irgan::precision_at_k(ranked, gains, 3));
  EXPECT_DOUBLE_EQ(m[2], irgan::precision_at_k(ranked, gains, 10));
  EXPECT_DOUBLE_EQ(m[4], irgan::ndcg_at_k(ranked, gains, 5));
  EXPECT_DOUBLE_EQ(m[6], irgan::average_precision(ranked, gains));
}

TEST(Gains, GradesFlowIntoGainMap) {
  Dataset ds = letor_from(
      "2 qid:0 1:1.0 #docid = A\n"
      "1 qid:0 1:0.5 #docid = B\n"
      "0 qid:0 1:0.0 #docid = C\n");
  GainMap gains = irgan::eval_gains(ds, 0);
  EXPECT_EQ(gains.size(), 2u);
  EXPECT_EQ(gains[ds.doc_index("A")], 2);
  EXPECT_EQ(gains[ds.doc_index("B")], 1);
  EXPECT_EQ(gains.count(ds.doc_index("C")), 0u);
}

}  // namespace
