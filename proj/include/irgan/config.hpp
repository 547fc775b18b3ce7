// Experiment configuration: a flat key = value text format with [sections],
// parsed into dataset spec + training config + orchestration settings.
// Unknown keys are rejected so typos fail loudly. The only environment
// override is IRGAN_OUT for the output directory.
#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "irgan/core.hpp"
#include "irgan/dataset.hpp"
#include "irgan/lab.hpp"
#include "irgan/trainer.hpp"

namespace irgan {

struct DatasetSpec {
  enum Kind { Letor, Movielens, Canonical, Synthetic } kind = Synthetic;
  std::string path;
  double split_fraction = 0.8;
  std::uint64_t split_seed = 13;
  // synthetic world parameters
  int queries = 20;
  int docs = 50;
  double sharpness = 3.0;
  int top_t = 0;  // 0 = docs/10
  std::uint64_t world_seed = 7;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  TrainConfig train;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string out_dir = "runs";
  int jobs = 0;  // worker processes for grids; 0 = hardware concurrency
  // Alternating-schedule arms apply one model update per iteration while
  // interleaved arms apply two; with fair_budget the alternating arms get
  // twice the iteration (and probe) budget so total updates match.
  bool fair_budget = true;

  void validate() const {
    train.validate();
    if (seeds.empty()) throw ConfigError("seed list must be non-empty");
    if (out_dir.empty()) throw ConfigError("output directory must be set");
    if (jobs < 0) throw ConfigError("jobs must be >= 0");
    if (dataset.kind != DatasetSpec::Synthetic) {
      if (dataset.path.empty())
        throw ConfigError("dataset.path is required for non-synthetic datasets");
      if (!std::filesystem::exists(dataset.path))
        throw ConfigError("dataset path does not exist: " + dataset.path);
      if (!(dataset.split_fraction > 0.0 && dataset.split_fraction < 1.0))
        throw ConfigError("split_fraction must be in (0, 1)");
    } else {
      if (dataset.queries < 1 || dataset.docs < 1)
        throw ConfigError("synthetic world dims must be >= 1");
      if (dataset.sharpness < 0.0)
        throw ConfigError("sharpness must be >= 0");
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double cfg_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": `" + v + "`");
  }
}

inline long cfg_int(const std::string& key, const std::string& v) {
  long x;
  if (!parse_long(v, x))
    throw ConfigError("bad integer value for " + key + ": `" + v + "`");
  return x;
}

inline std::uint64_t cfg_u64(const std::string& key, const std::string& v) {
  long x = cfg_int(key, v);
  if (x < 0) throw ConfigError(key + " must be non-negative");
  return static_cast<std::uint64_t>(x);
}

inline bool cfg_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean value for " + key + ": `" + v + "`");
}

}  // namespace detail

inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::string tok;
  std::istringstream in(text);
  while (std::getline(in, tok, ',')) {
    tok = detail::trim(tok);
    if (tok.empty()) continue;
    seeds.push_back(detail::cfg_u64("seeds", tok));
  }
  if (seeds.empty()) throw ConfigError("empty seed list: `" + text + "`");
  return seeds;
}

inline void apply_train_key(TrainConfig& t, const std::string& key,
                            const std::string& v) {
  using detail::cfg_bool;
  using detail::cfg_double;
  using detail::cfg_int;
  if (key == "variant") {
    t.variant = variant_from_name(v);
  } else if (key == "objective") {
    if (v == "ppo") t.variant.objective = Objective::Ppo;
    else if (v == "reinforce") t.variant.objective = Objective::Reinforce;
    else throw ConfigError("objective must be ppo|reinforce, got `" + v + "`");
  } else if (key == "schedule") {
    if (v == "interleaved") t.variant.schedule = Schedule::Interleaved;
    else if (v == "alternating") t.variant.schedule = Schedule::Alternating;
    else throw ConfigError("schedule must be interleaved|alternating, got `" + v + "`");
  } else if (key == "sampler") {
    if (v == "gumbel") t.variant.sampler = SamplerKind::Gumbel;
    else if (v == "plain") t.variant.sampler = SamplerKind::Plain;
    else throw ConfigError("sampler must be gumbel|plain, got `" + v + "`");
  } else if (key == "lr_generator") {
    t.lr_generator = cfg_double(key, v);
  } else if (key == "lr_discriminator") {
    t.lr_discriminator = cfg_double(key, v);
  } else if (key == "l2_generator") {
    t.l2_generator = cfg_double(key, v);
  } else if (key == "l2_discriminator") {
    t.l2_discriminator = cfg_double(key, v);
  } else if (key == "epsilon") {
    t.clip.epsilon = cfg_double(key, v);
  } else if (key == "tau") {
    t.temperature.tau = cfg_double(key, v);
  } else if (key == "tau_anneal") {
    t.temperature.anneal = cfg_bool(key, v);
  } else if (key == "tau_start") {
    t.temperature.tau_start = cfg_double(key, v);
  } else if (key == "tau_end") {
    t.temperature.tau_end = cfg_double(key, v);
  } else if (key == "tau_decay_per_epoch") {
    t.temperature.decay_per_epoch = cfg_double(key, v);
  } else if (key == "k_sync") {
    t.k_sync = static_cast<int>(cfg_int(key, v));
  } else if (key == "k_samples") {
    t.k_samples = static_cast<int>(cfg_int(key, v));
  } else if (key == "neg_pos_ratio") {
    t.neg_pos_ratio = cfg_double(key, v);
  } else if (key == "gen_inner_epochs") {
    t.gen_inner_epochs = static_cast<int>(cfg_int(key, v));
  } else if (key == "disc_inner_epochs") {
    t.disc_inner_epochs = static_cast<int>(cfg_int(key, v));
  } else if (key == "warmup_discriminator") {
    t.warmup_discriminator = static_cast<int>(cfg_int(key, v));
  } else if (key == "max_iterations") {
    t.max_iterations = static_cast<int>(cfg_int(key, v));
  } else if (key == "eval_every") {
    t.eval_every = static_cast<int>(cfg_int(key, v));
  } else if (key == "patience") {
    t.patience = static_cast<int>(cfg_int(key, v));
  } else if (key == "probe_every") {
    t.probe_every = static_cast<int>(cfg_int(key, v));
  } else if (key == "latent_dim") {
    t.latent_dim = static_cast<int>(cfg_int(key, v));
  } else if (key == "init_scheme") {
    if (v == "uniform") t.init.kind = InitScheme::Uniform;
    else if (v == "gaussian") t.init.kind = InitScheme::Gaussian;
    else throw ConfigError("init_scheme must be uniform|gaussian, got `" + v + "`");
  } else if (key == "init_param") {
    t.init.param = cfg_double(key, v);
  } else if (key == "query_batch_size") {
    t.query_batch_size = static_cast<int>(cfg_int(key, v));
  } else if (key == "positives_per_query") {
    t.positives_per_query = static_cast<int>(cfg_int(key, v));
  } else {
    throw ConfigError("unknown [train] key: " + key);
  }
}

inline void apply_dataset_key(DatasetSpec& d, const std::string& key,
                              const std::string& v) {
  using detail::cfg_double;
  using detail::cfg_int;
  using detail::cfg_u64;
  if (key == "kind") {
    if (v == "letor") d.kind = DatasetSpec::Letor;
    else if (v == "movielens") d.kind = DatasetSpec::Movielens;
    else if (v == "canonical") d.kind = DatasetSpec::Canonical;
    else if (v == "synthetic") d.kind = DatasetSpec::Synthetic;
    else throw ConfigError("dataset kind must be letor|movielens|canonical|synthetic");
  } else if (key == "path") {
    d.path = v;
  } else if (key == "split_fraction") {
    d.split_fraction = cfg_double(key, v);
  } else if (key == "split_seed") {
    d.split_seed = cfg_u64(key, v);
  } else if (key == "queries") {
    d.queries = static_cast<int>(cfg_int(key, v));
  } else if (key == "docs") {
    d.docs = static_cast<int>(cfg_int(key, v));
  } else if (key == "sharpness") {
    d.sharpness = cfg_double(key, v);
  } else if (key == "top_t") {
    d.top_t = static_cast<int>(cfg_int(key, v));
  } else if (key == "world_seed") {
    d.world_seed = cfg_u64(key, v);
  } else {
    throw ConfigError("unknown [dataset] key: " + key);
  }
}

inline void apply_experiment_key(ExperimentConfig& c, const std::string& key,
                                 const std::string& v) {
  if (key == "seeds") c.seeds = parse_seed_list(v);
  else if (key == "out") c.out_dir = v;
  else if (key == "jobs") c.jobs = static_cast<int>(detail::cfg_int(key, v));
  else if (key == "fair_budget") c.fair_budget = detail::cfg_bool(key, v);
  else throw ConfigError("unknown [experiment] key: " + key);
}

inline ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string section;
  std::string raw;
  long line_no = 0;
  // [train] keys are deferred so synthetic runs can start from the lab study
  // configuration (the dataset kind may be declared after the [train] block).
  std::vector<std::tuple<std::string, std::string, long>> train_keys;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = detail::trim(raw);
    if (auto hash = line.find('#'); hash != std::string::npos)
      line = detail::trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section != "dataset" && section != "train" && section != "experiment")
        throw ConfigError("unknown config section [" + section + "] at line " +
                          std::to_string(line_no));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " + std::to_string(line_no));
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("empty key or value at line " + std::to_string(line_no));
    try {
      if (section == "dataset") apply_dataset_key(cfg.dataset, key, value);
      else if (section == "train") train_keys.emplace_back(key, value, line_no);
      else if (section == "experiment") apply_experiment_key(cfg, key, value);
      else throw ConfigError("key outside any section: " + key);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (line " +
                        std::to_string(line_no) + ")");
    }
  }
  if (cfg.dataset.kind == DatasetSpec::Synthetic) cfg.train = lab_study_config();
  for (const auto& [key, value, at_line] : train_keys) {
    try {
      apply_train_key(cfg.train, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (line " +
                        std::to_string(at_line) + ")");
    }
  }
  if (const char* env_out = std::getenv("IRGAN_OUT"); env_out && *env_out)
    cfg.out_dir = env_out;
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_experiment_config(in);
}

inline nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  nlohmann::json d;
  switch (c.dataset.kind) {
    case DatasetSpec::Letor: d["kind"] = "letor"; break;
    case DatasetSpec::Movielens: d["kind"] = "movielens"; break;
    case DatasetSpec::Canonical: d["kind"] = "canonical"; break;
    case DatasetSpec::Synthetic: d["kind"] = "synthetic"; break;
  }
  if (c.dataset.kind == DatasetSpec::Synthetic) {
    d["queries"] = c.dataset.queries;
    d["docs"] = c.dataset.docs;
    d["sharpness"] = c.dataset.sharpness;
    d["top_t"] = c.dataset.top_t;
    d["world_seed"] = c.dataset.world_seed;
  } else {
    d["path"] = c.dataset.path;
    if (c.dataset.kind != DatasetSpec::Canonical) {
      d["split_fraction"] = c.dataset.split_fraction;
      d["split_seed"] = c.dataset.split_seed;
    }
  }
  j["dataset"] = std::move(d);
  j["train"] = train_config_to_json(c.train);
  j["seeds"] = c.seeds;
  j["out"] = c.out_dir;
  j["jobs"] = c.jobs;
  j["fair_budget"] = c.fair_budget;
  return j;
}

inline SyntheticWorld world_from_spec(const DatasetSpec& d) {
  return make_world(d.queries, d.docs, d.sharpness, d.world_seed, d.top_t);
}

// Materializes the dataset a config refers to, applying the split for raw
// text formats. Canonical datasets are loaded as stored (already split or
// not); synthetic worlds become all-train datasets.
inline Dataset dataset_from_spec(const DatasetSpec& d,
                                 std::vector<std::string>* warnings = nullptr) {
  switch (d.kind) {
    case DatasetSpec::Synthetic:
      return world_to_dataset(world_from_spec(d));
    case DatasetSpec::Canonical:
      return load_dataset(d.path);
    case DatasetSpec::Letor: {
      std::ifstream in(d.path, std::ios::binary);
      if (!in) throw DataError("cannot open dataset: " + d.path);
      return split_dataset(parse_letor(in), d.split_fraction, d.split_seed,
                           warnings);
    }
    case DatasetSpec::Movielens: {
      std::ifstream in(d.path, std::ios::binary);
      if (!in) throw DataError("cannot open dataset: " + d.path);
      return split_dataset(parse_movielens(in), d.split_fraction, d.split_seed,
                           warnings);
    }
  }
  throw ConfigError("unhandled dataset kind");
}

}  // namespace irgan
