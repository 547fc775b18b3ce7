// Retrieval dataset model: ids, candidate pools, graded judgments, features,
// train/test splits, plus parsers for the LETOR 4.0 and MovieLens u.data
// text formats and a canonical JSON serialization.
#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "irgan/core.hpp"

namespace irgan {

// Feature-context datasets (web search) carry a feature vector per
// (query, doc) pair; user-item datasets (recommendation) address scorer
// rows directly and their candidate pool is the whole item set.
enum class DatasetKind { PairFeatures, UserItem };

enum class SplitKind { None, QueryLevel, PerQueryHoldout };

struct Judgment {
  int doc = 0;
  int grade = 0;           // >= 0 after parsing; raw negatives map to 0
  bool unlabeled = false;  // true when the raw grade was negative
  bool in_test = false;

  friend bool operator==(const Judgment&, const Judgment&) = default;
};

struct QueryData {
  std::vector<int> pool;         // empty for UserItem: pool is all docs
  std::vector<double> features;  // row-major pool_size x F; PairFeatures only
  std::vector<Judgment> judgments;  // sorted by doc

  friend bool operator==(const QueryData&, const QueryData&) = default;
};

// Numeric-aware id order used for ranking tie-breaks: pure-digit ids compare
// as numbers, everything else lexicographically.
inline bool doc_id_less(const std::string& a, const std::string& b) {
  auto digits = [](const std::string& s) {
    if (s.empty() || s.size() > 18) return false;
    for (char c : s)
      if (c < '0' || c > '9') return false;
    return true;
  };
  if (digits(a) && digits(b)) {
    if (a.size() != b.size()) return a.size() < b.size();
  }
  return a < b;
}

class Dataset {
 public:
  DatasetKind kind = DatasetKind::PairFeatures;
  int feature_dim = 0;
  std::vector<std::string> query_ids;
  std::vector<std::string> doc_ids;
  std::vector<QueryData> queries;
  SplitKind split = SplitKind::None;
  std::vector<int> test_query_set;  // QueryLevel only, sorted

  int num_queries() const { return static_cast<int>(query_ids.size()); }
  int num_docs() const { return static_cast<int>(doc_ids.size()); }

  const std::vector<int>& pool(int q) const {
    return kind == DatasetKind::UserItem ? all_docs_ : queries[q].pool;
  }

  int pool_size(int q) const { return static_cast<int>(pool(q).size()); }

  // Position of doc d in query q's pool, or -1.
  int pool_position(int q, int d) const {
    if (kind == DatasetKind::UserItem)
      return d >= 0 && d < num_docs() ? d : -1;
    const auto& p = queries[q].pool;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] == d) return static_cast<int>(i);
    return -1;
  }

  const double* features_at(int q, int pool_pos) const {
    return queries[q].features.data() +
           static_cast<std::size_t>(pool_pos) * feature_dim;
  }

  int query_index(const std::string& id) const {
    for (int i = 0; i < num_queries(); ++i)
      if (query_ids[i] == id) return i;
    throw LookupError("unknown query id: " + id);
  }

  int doc_index(const std::string& id) const {
    auto it = doc_index_.find(id);
    if (it == doc_index_.end()) throw LookupError("unknown doc id: " + id);
    return it->second;
  }

  int grade_of(int q, int d) const {
    const Judgment* j = find_judgment(q, d);
    return j ? j->grade : 0;
  }

  const Judgment* find_judgment(int q, int d) const {
    const auto& js = queries[q].judgments;
    auto it = std::lower_bound(js.begin(), js.end(), d,
                               [](const Judgment& a, int doc) { return a.doc < doc; });
    return (it != js.end() && it->doc == d) ? &*it : nullptr;
  }

  bool query_in_test(int q) const {
    return std::binary_search(test_query_set.begin(), test_query_set.end(), q);
  }

  // Positives usable for training: grade > 0 and not held out.
  std::vector<int> train_positive_docs(int q) const {
    std::vector<int> out;
    if (split == SplitKind::QueryLevel && query_in_test(q)) return out;
    for (const Judgment& j : queries[q].judgments)
      if (j.grade > 0 && !j.in_test) out.push_back(j.doc);
    return out;
  }

  std::vector<int> test_positive_docs(int q) const {
    std::vector<int> out;
    if (split == SplitKind::QueryLevel && !query_in_test(q)) return out;
    for (const Judgment& j : queries[q].judgments)
      if (j.grade > 0 && (split != SplitKind::PerQueryHoldout || j.in_test))
        out.push_back(j.doc);
    return out;
  }

  std::vector<int> train_queries() const {
    std::vector<int> out;
    for (int q = 0; q < num_queries(); ++q)
      if (split != SplitKind::QueryLevel || !query_in_test(q)) out.push_back(q);
    return out;
  }

  std::vector<int> test_queries() const {
    if (split == SplitKind::QueryLevel) return test_query_set;
    std::vector<int> out;
    for (int q = 0; q < num_queries(); ++q)
      if (!test_positive_docs(q).empty()) out.push_back(q);
    return out;
  }

  void rebuild_index() {
    doc_index_.clear();
    for (int i = 0; i < num_docs(); ++i) doc_index_.emplace(doc_ids[i], i);
    all_docs_.resize(doc_ids.size());
    for (int i = 0; i < num_docs(); ++i) all_docs_[i] = i;
    for (auto& qd : queries)
      std::sort(qd.judgments.begin(), qd.judgments.end(),
                [](const Judgment& a, const Judgment& b) { return a.doc < b.doc; });
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.kind == b.kind && a.feature_dim == b.feature_dim &&
           a.query_ids == b.query_ids && a.doc_ids == b.doc_ids &&
           a.queries == b.queries && a.split == b.split &&
           a.test_query_set == b.test_query_set;
  }

 private:
  std::unordered_map<std::string, int> doc_index_;
  std::vector<int> all_docs_;
};

namespace detail {

inline bool parse_long(std::string_view s, long& out) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  long v = 0;
  bool neg = s[0] == '-';
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = neg ? -v : v;
  return true;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string_view strip_cr(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// LETOR 4.0:  <grade> qid:<q> 1:<v> ... F:<v> [#docid = <id> ...]
// Negative grades (unjudged pairs) become grade 0 with the unlabeled flag
// set; those docs stay in the candidate pool. A missing docid comment gets a
// synthesized per-query id so every line remains addressable.
// ---------------------------------------------------------------------------
inline Dataset parse_letor(std::istream& in) {
  Dataset ds;
  ds.kind = DatasetKind::PairFeatures;
  std::unordered_map<std::string, int> qindex;
  std::unordered_map<std::string, int> dindex;

  std::string raw;
  long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = detail::strip_cr(raw);
    if (line.empty()) continue;

    std::string_view body = line;
    std::string_view comment;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      body = line.substr(0, hash);
      comment = line.substr(hash + 1);
    }

    auto toks = detail::split_ws(body);
    if (toks.size() < 2) throw ParseError("expected `<grade> qid:<q> ...`", line_no);

    long grade_raw = 0;
    if (!detail::parse_long(toks[0], grade_raw))
      throw ParseError("bad relevance grade `" + std::string(toks[0]) + "`", line_no);

    if (toks[1].substr(0, 4) != "qid:" || toks[1].size() == 4)
      throw ParseError("missing qid: token", line_no);
    std::string qid(toks[1].substr(4));

    std::vector<double> feats;
    feats.reserve(toks.size() - 2);
    for (std::size_t t = 2; t < toks.size(); ++t) {
      auto tok = toks[t];
      auto colon = tok.find(':');
      if (colon == std::string_view::npos)
        throw ParseError("bad feature token `" + std::string(tok) + "`", line_no);
      long idx = 0;
      if (!detail::parse_long(tok.substr(0, colon), idx))
        throw ParseError("bad feature index in `" + std::string(tok) + "`", line_no);
      if (idx != static_cast<long>(t - 1))
        throw ParseError("non-contiguous feature index " + std::to_string(idx), line_no);
      std::string vstr(tok.substr(colon + 1));
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(vstr, &used);
      } catch (const std::exception&) {
        throw ParseError("bad feature value `" + vstr + "`", line_no);
      }
      if (used != vstr.size() || !std::isfinite(v))
        throw ParseError("bad feature value `" + vstr + "`", line_no);
      feats.push_back(v);
    }
    if (feats.empty()) throw ParseError("no features on line", line_no);
    if (ds.feature_dim == 0)
      ds.feature_dim = static_cast<int>(feats.size());
    else if (static_cast<int>(feats.size()) != ds.feature_dim)
      throw ParseError("inconsistent feature count: got " +
                           std::to_string(feats.size()) + ", expected " +
                           std::to_string(ds.feature_dim),
                       line_no);

    int q;
    if (auto it = qindex.find(qid); it != qindex.end()) {
      q = it->second;
    } else {
      q = ds.num_queries();
      qindex.emplace(qid, q);
      ds.query_ids.push_back(qid);
      ds.queries.emplace_back();
    }

    std::string doc_id;
    auto ctoks = detail::split_ws(comment);
    for (std::size_t t = 0; t + 1 < ctoks.size(); ++t) {
      if (ctoks[t] == "docid") {
        std::size_t v = t + 1;
        if (ctoks[v] == "=" && v + 1 < ctoks.size()) ++v;
        doc_id = std::string(ctoks[v]);
        break;
      }
    }
    if (doc_id.empty())
      doc_id = "q" + qid + "#" + std::to_string(ds.queries[q].pool.size());

    int d;
    if (auto it = dindex.find(doc_id); it != dindex.end()) {
      d = it->second;
    } else {
      d = ds.num_docs();
      dindex.emplace(doc_id, d);
      ds.doc_ids.push_back(doc_id);
    }

    QueryData& qd = ds.queries[q];
    for (int existing : qd.pool)
      if (existing == d)
        throw ParseError("duplicate judgment for qid " + qid + ", doc " + doc_id,
                         line_no);
    qd.pool.push_back(d);
    qd.features.insert(qd.features.end(), feats.begin(), feats.end());
    Judgment j;
    j.doc = d;
    j.grade = grade_raw < 0 ? 0 : static_cast<int>(grade_raw);
    j.unlabeled = grade_raw < 0;
    qd.judgments.push_back(j);
  }

  ds.rebuild_index();
  return ds;
}

// ---------------------------------------------------------------------------
// MovieLens u.data:  user \t item \t rating \t timestamp
// Users become queries, items documents, rating >= 4 becomes grade 1.
// The candidate pool of every user is the full item set.
// ---------------------------------------------------------------------------
inline Dataset parse_movielens(std::istream& in) {
  Dataset ds;
  ds.kind = DatasetKind::UserItem;
  std::unordered_map<std::string, int> qindex;
  std::unordered_map<std::string, int> dindex;

  std::string raw;
  long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = detail::strip_cr(raw);
    if (line.empty()) continue;

    long fields[4];
    std::size_t start = 0;
    for (int f = 0; f < 4; ++f) {
      std::size_t tab = line.find('\t', start);
      bool last = f == 3;
      if (!last && tab == std::string_view::npos)
        throw ParseError("expected 4 tab-separated fields", line_no);
      std::string_view tok =
          last ? line.substr(start) : line.substr(start, tab - start);
      if (!detail::parse_long(tok, fields[f]))
        throw ParseError("non-integer field `" + std::string(tok) + "`", line_no);
      start = last ? start : tab + 1;
    }
    long rating = fields[2];
    if (rating < 1 || rating > 5)
      throw ParseError("rating " + std::to_string(rating) + " outside 1..5", line_no);

    std::string uid = std::to_string(fields[0]);
    std::string iid = std::to_string(fields[1]);

    int q;
    if (auto it = qindex.find(uid); it != qindex.end()) {
      q = it->second;
    } else {
      q = ds.num_queries();
      qindex.emplace(uid, q);
      ds.query_ids.push_back(uid);
      ds.queries.emplace_back();
    }
    int d;
    if (auto it = dindex.find(iid); it != dindex.end()) {
      d = it->second;
    } else {
      d = ds.num_docs();
      dindex.emplace(iid, d);
      ds.doc_ids.push_back(iid);
    }

    Judgment j;
    j.doc = d;
    j.grade = rating >= 4 ? 1 : 0;
    for (const Judgment& seen : ds.queries[q].judgments)
      if (seen.doc == d)
        throw ParseError("duplicate rating for user " + uid + ", item " + iid,
                         line_no);
    ds.queries[q].judgments.push_back(j);
  }

  ds.rebuild_index();
  return ds;
}

// ---------------------------------------------------------------------------
// Splitting. Web-search datasets split at query level; user-item datasets
// hold out a fraction of each user's positives. Deterministic per
// (dataset, fraction, seed): every query uses its own derived stream.
// ---------------------------------------------------------------------------
inline Dataset split_dataset(const Dataset& input, double fraction,
                             std::uint64_t seed,
                             std::vector<std::string>* warnings = nullptr) {
  require(fraction > 0.0 && fraction < 1.0, "split fraction must be in (0, 1)");
  Dataset ds = input;
  ds.test_query_set.clear();

  if (ds.kind == DatasetKind::PairFeatures) {
    ds.split = SplitKind::QueryLevel;
    std::vector<int> order(ds.num_queries());
    for (int i = 0; i < ds.num_queries(); ++i) order[i] = i;
    Rng rng(derive_stream_seed(seed, "query-level", StreamRole::Split));
    rng.shuffle(order);
    auto train_count = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(order.size())));
    for (std::size_t i = train_count; i < order.size(); ++i)
      ds.test_query_set.push_back(order[i]);
    std::sort(ds.test_query_set.begin(), ds.test_query_set.end());
    for (int q = 0; q < ds.num_queries(); ++q) {
      bool test = ds.query_in_test(q);
      for (Judgment& j : ds.queries[q].judgments) j.in_test = test;
    }
  } else {
    ds.split = SplitKind::PerQueryHoldout;
    for (int q = 0; q < ds.num_queries(); ++q) {
      for (Judgment& j : ds.queries[q].judgments) j.in_test = false;
      std::vector<int> pos;
      for (const Judgment& j : ds.queries[q].judgments)
        if (j.grade > 0) pos.push_back(j.doc);
      if (pos.size() < 2) {
        if (!pos.empty() && warnings)
          warnings->push_back("query " + ds.query_ids[q] +
                              " has fewer than 2 positives; kept entirely in train");
        continue;
      }
      Rng rng(derive_stream_seed(seed, ds.query_ids[q], StreamRole::Split));
      rng.shuffle(pos);
      auto train_count = static_cast<std::size_t>(
          std::llround(fraction * static_cast<double>(pos.size())));
      for (std::size_t i = train_count; i < pos.size(); ++i) {
        auto& js = ds.queries[q].judgments;
        auto it = std::lower_bound(
            js.begin(), js.end(), pos[i],
            [](const Judgment& a, int doc) { return a.doc < doc; });
        it->in_test = true;
      }
    }
  }
  ds.rebuild_index();
  return ds;
}

// ---------------------------------------------------------------------------
// Canonical JSON form ("irgan-dataset-v1"); layout documented in the README.
// Serialization is deterministic, so equal datasets serialize byte-equal.
// ---------------------------------------------------------------------------
inline nlohmann::json dataset_to_json(const Dataset& ds) {
  nlohmann::json j;
  j["format"] = "irgan-dataset-v1";
  j["kind"] = ds.kind == DatasetKind::PairFeatures ? "pair_features" : "user_item";
  j["feature_dim"] = ds.feature_dim;
  j["query_ids"] = ds.query_ids;
  j["doc_ids"] = ds.doc_ids;
  switch (ds.split) {
    case SplitKind::None: j["split"] = "none"; break;
    case SplitKind::QueryLevel: j["split"] = "query_level"; break;
    case SplitKind::PerQueryHoldout: j["split"] = "per_query_holdout"; break;
  }
  j["test_queries"] = ds.test_query_set;
  nlohmann::json qs = nlohmann::json::array();
  for (const QueryData& qd : ds.queries) {
    nlohmann::json e;
    nlohmann::json js = nlohmann::json::array();
    for (const Judgment& jd : qd.judgments)
      js.push_back({jd.doc, jd.grade, jd.unlabeled ? 1 : 0, jd.in_test ? 1 : 0});
    e["judgments"] = std::move(js);
    if (ds.kind == DatasetKind::PairFeatures) {
      e["pool"] = qd.pool;
      e["features"] = qd.features;
    }
    qs.push_back(std::move(e));
  }
  j["queries"] = std::move(qs);
  return j;
}

inline Dataset dataset_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "irgan-dataset-v1")
    throw DataError("not an irgan-dataset-v1 document");
  Dataset ds;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "pair_features")
    ds.kind = DatasetKind::PairFeatures;
  else if (kind == "user_item")
    ds.kind = DatasetKind::UserItem;
  else
    throw DataError("unknown dataset kind: " + kind);
  ds.feature_dim = j.at("feature_dim").get<int>();
  ds.query_ids = j.at("query_ids").get<std::vector<std::string>>();
  ds.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
  std::string split = j.at("split").get<std::string>();
  if (split == "none")
    ds.split = SplitKind::None;
  else if (split == "query_level")
    ds.split = SplitKind::QueryLevel;
  else if (split == "per_query_holdout")
    ds.split = SplitKind::PerQueryHoldout;
  else
    throw DataError("unknown split kind: " + split);
  ds.test_query_set = j.at("test_queries").get<std::vector<int>>();
  for (const auto& e : j.at("queries")) {
    QueryData qd;
    for (const auto& triple : e.at("judgments")) {
      Judgment jd;
      jd.doc = triple.at(0).get<int>();
      jd.grade = triple.at(1).get<int>();
      jd.unlabeled = triple.at(2).get<int>() != 0;
      jd.in_test = triple.at(3).get<int>() != 0;
      qd.judgments.push_back(jd);
    }
    if (ds.kind == DatasetKind::PairFeatures) {
      qd.pool = e.at("pool").get<std::vector<int>>();
      qd.features = e.at("features").get<std::vector<double>>();
    }
    ds.queries.push_back(std::move(qd));
  }
  if (ds.queries.size() != ds.query_ids.size())
    throw DataError("query count mismatch in dataset document");
  ds.rebuild_index();
  return ds;
}

inline void write_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for write: " + path);
  out << dataset_to_json(ds).dump() << "\n";
}

struct DatasetSummary {
  int queries = 0;
  int docs = 0;
  long judgments = 0;
  long positives = 0;
};

inline DatasetSummary summarize(const Dataset& ds) {
  DatasetSummary s;
  s.queries = ds.num_queries();
  s.docs = ds.num_docs();
  for (const QueryData& qd : ds.queries) {
    s.judgments += static_cast<long>(qd.judgments.size());
    for (const Judgment& j : qd.judgments)
      if (j.grade > 0) ++s.positives;
  }
  return s;
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad dataset JSON in " + path + ": " + e.what());
  }
  return dataset_from_json(j);
}

}  // namespace irgan
