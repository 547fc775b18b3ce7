// Scoring functions shared by generator and discriminator: a linear scorer
// over pair features (web search) and a matrix-factorization scorer
// (recommendation), each with closed-form score gradients and a flat
// parameter vector so updates and checkpoints are uniform.
#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "irgan/core.hpp"
#include "irgan/dataset.hpp"

namespace irgan {

// Dense accumulator with the same flat layout as the owning scorer's
// parameter vector. Gradients from many samples/queries sum into one
// instance before a single apply_update.
struct ParameterGradient {
  std::vector<double> values;

  void reset(std::size_t n) { values.assign(n, 0.0); }
  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  void add_scaled(const ParameterGradient& other, double coeff) {
    require(values.size() == other.values.size(),
            "gradient shape mismatch in add_scaled");
    for (std::size_t i = 0; i < values.size(); ++i)
      values[i] += coeff * other.values[i];
  }

  void scale(double c) {
    for (double& v : values) v *= c;
  }
};

struct InitScheme {
  enum Kind { Uniform, Gaussian } kind = Uniform;
  double param = 0.05;  // half-width a for uniform(-a, a), sd for gaussian(0, sd)

  static InitScheme uniform(double a) { return {Uniform, a}; }
  static InitScheme gaussian(double sd) { return {Gaussian, sd}; }
};

class Scorer {
 public:
  std::vector<double> params;

  virtual ~Scorer() = default;
  virtual const char* kind_name() const = 0;

  // Score of the candidate at `pool_pos` within query q's candidate pool.
  virtual double score_at(const Dataset& ds, int q, int pool_pos) const = 0;

  // Accumulates coeff * (d score / d params) into g.
  virtual void add_score_gradient(const Dataset& ds, int q, int pool_pos,
                                  double coeff, ParameterGradient& g) const = 0;

  virtual std::unique_ptr<Scorer> clone() const = 0;
  virtual nlohmann::json dims_to_json() const = 0;

  double score(const Dataset& ds, int q, int d) const {
    int pos = ds.pool_position(q, d);
    if (pos < 0)
      throw LookupError("doc not in candidate pool of query " + ds.query_ids[q]);
    return score_at(ds, q, pos);
  }

  void score_pool_into(const Dataset& ds, int q, std::vector<double>& out) const {
    out.resize(static_cast<std::size_t>(ds.pool_size(q)));
    for (int i = 0; i < ds.pool_size(q); ++i) out[i] = score_at(ds, q, i);
  }

  std::vector<double> score_pool(const Dataset& ds, int q) const {
    std::vector<double> out;
    score_pool_into(ds, q, out);
    return out;
  }

  ParameterGradient grad_score(const Dataset& ds, int q, int d) const {
    int pos = ds.pool_position(q, d);
    if (pos < 0)
      throw LookupError("doc not in candidate pool of query " + ds.query_ids[q]);
    ParameterGradient g;
    g.reset(params.size());
    add_score_gradient(ds, q, pos, 1.0, g);
    return g;
  }

  void init(InitScheme scheme, std::uint64_t seed) {
    Rng rng(seed);
    for (double& p : params)
      p = scheme.kind == InitScheme::Uniform
              ? (2.0 * rng.uniform01() - 1.0) * scheme.param
              : rng.normal() * scheme.param;
  }
};

// score(q, d) = w . x(q, d) + b; params = [w_0 .. w_{F-1}, b].
class LinearScorer final : public Scorer {
 public:
  int feature_dim = 0;

  explicit LinearScorer(int features) : feature_dim(features) {
    if (features <= 0) throw ConfigError("linear scorer needs feature_dim >= 1");
    params.assign(static_cast<std::size_t>(features) + 1, 0.0);
  }

  const char* kind_name() const override { return "linear"; }

  double score_at(const Dataset& ds, int q, int pool_pos) const override {
    require(ds.kind == DatasetKind::PairFeatures,
            "linear scorer needs pair features");
    require(ds.feature_dim == feature_dim, "feature dimension mismatch");
    const double* x = ds.features_at(q, pool_pos);
    double s = params[static_cast<std::size_t>(feature_dim)];
    for (int i = 0; i < feature_dim; ++i) s += params[i] * x[i];
    return s;
  }

  void add_score_gradient(const Dataset& ds, int q, int pool_pos, double coeff,
                          ParameterGradient& g) const override {
    require(g.size() == params.size(), "gradient shape mismatch");
    const double* x = ds.features_at(q, pool_pos);
    for (int i = 0; i < feature_dim; ++i) g[i] += coeff * x[i];
    g[static_cast<std::size_t>(feature_dim)] += coeff;
  }

  std::unique_ptr<Scorer> clone() const override {
    return std::make_unique<LinearScorer>(*this);
  }

  nlohmann::json dims_to_json() const override {
    return {{"features", feature_dim}};
  }
};

// score(u, i) = item_bias[i] + dot(user_factors[u], item_factors[i]);
// params = [user_factors row-major (N*E), item_factors row-major (M*E),
//           item_bias (M)].
class MatrixFactorizationScorer final : public Scorer {
 public:
  int num_users = 0;
  int num_items = 0;
  int latent_dim = 0;

  MatrixFactorizationScorer(int users, int items, int latent)
      : num_users(users), num_items(items), latent_dim(latent) {
    if (users <= 0 || items <= 0 || latent <= 0)
      throw ConfigError("matrix factorization dims must be >= 1");
    params.assign(static_cast<std::size_t>(users) * latent +
                      static_cast<std::size_t>(items) * latent + items,
                  0.0);
  }

  const char* kind_name() const override { return "matrix_factorization"; }

  std::size_t user_offset(int u) const {
    return static_cast<std::size_t>(u) * latent_dim;
  }
  std::size_t item_offset(int i) const {
    return static_cast<std::size_t>(num_users) * latent_dim +
           static_cast<std::size_t>(i) * latent_dim;
  }
  std::size_t bias_offset(int i) const {
    return static_cast<std::size_t>(num_users + num_items) * latent_dim + i;
  }

  double score_at(const Dataset& ds, int q, int pool_pos) const override {
    int item = ds.pool(q)[pool_pos];
    require(q >= 0 && q < num_users && item >= 0 && item < num_items,
            "user/item index out of range");
    const double* uf = params.data() + user_offset(q);
    const double* itf = params.data() + item_offset(item);
    double s = params[bias_offset(item)];
    for (int e = 0; e < latent_dim; ++e) s += uf[e] * itf[e];
    return s;
  }

  void add_score_gradient(const Dataset& ds, int q, int pool_pos, double coeff,
                          ParameterGradient& g) const override {
    require(g.size() == params.size(), "gradient shape mismatch");
    int item = ds.pool(q)[pool_pos];
    const double* uf = params.data() + user_offset(q);
    const double* itf = params.data() + item_offset(item);
    double* gu = g.values.data() + user_offset(q);
    double* gi = g.values.data() + item_offset(item);
    for (int e = 0; e < latent_dim; ++e) {
      gu[e] += coeff * itf[e];
      gi[e] += coeff * uf[e];
    }
    g[bias_offset(item)] += coeff;
  }

  std::unique_ptr<Scorer> clone() const override {
    return std::make_unique<MatrixFactorizationScorer>(*this);
  }

  nlohmann::json dims_to_json() const override {
    return {{"users", num_users}, {"items", num_items}, {"latent", latent_dim}};
  }
};

// params <- params + lr * (gradient - l2 * params). Ascent form; descent
// objectives negate the gradient at the call site so l2 always shrinks.
inline void apply_update(Scorer& s, const ParameterGradient& g,
                         double learning_rate, double l2) {
  require(g.size() == s.params.size(), "gradient/parameter shape mismatch");
  for (std::size_t i = 0; i < s.params.size(); ++i)
    s.params[i] += learning_rate * (g[i] - l2 * s.params[i]);
}

inline std::unique_ptr<Scorer> snapshot(const Scorer& s) { return s.clone(); }

inline std::unique_ptr<Scorer> make_scorer_for(const Dataset& ds,
                                               int latent_dim = 5) {
  if (ds.kind == DatasetKind::PairFeatures)
    return std::make_unique<LinearScorer>(ds.feature_dim);
  return std::make_unique<MatrixFactorizationScorer>(ds.num_queries(),
                                                     ds.num_docs(), latent_dim);
}

inline std::unique_ptr<Scorer> init_scorer(const Dataset& ds, int latent_dim,
                                           InitScheme scheme,
                                           std::uint64_t seed) {
  auto s = make_scorer_for(ds, latent_dim);
  s->init(scheme, seed);
  return s;
}

// ---------------------------------------------------------------------------
// Checkpoint JSON ("irgan-scorer-v1"); doubles round-trip bit-exactly.
// ---------------------------------------------------------------------------
inline nlohmann::json scorer_to_json(const Scorer& s) {
  nlohmann::json j;
  j["format"] = "irgan-scorer-v1";
  j["kind"] = s.kind_name();
  j["dims"] = s.dims_to_json();
  j["params"] = s.params;
  return j;
}

inline std::unique_ptr<Scorer> scorer_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "irgan-scorer-v1")
    throw DataError("not an irgan-scorer-v1 document");
  std::string kind = j.at("kind").get<std::string>();
  std::unique_ptr<Scorer> s;
  const auto& dims = j.at("dims");
  if (kind == "linear") {
    s = std::make_unique<LinearScorer>(dims.at("features").get<int>());
  } else if (kind == "matrix_factorization") {
    s = std::make_unique<MatrixFactorizationScorer>(
        dims.at("users").get<int>(), dims.at("items").get<int>(),
        dims.at("latent").get<int>());
  } else {
    throw DataError("unknown scorer kind: " + kind);
  }
  auto p = j.at("params").get<std::vector<double>>();
  if (p.size() != s->params.size())
    throw DataError("checkpoint parameter count mismatch");
  s->params = std::move(p);
  return s;
}

}  // namespace irgan
