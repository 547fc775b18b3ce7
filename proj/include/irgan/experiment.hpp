// Experiment orchestration: per-(variant, seed) training runs with on-disk
// artifacts, ablation grids over the four canonical arms, aggregate tables
// in the reported column layout, and divergence traces on synthetic worlds.
// All artifacts are deterministic; wall-clock timestamps live only in a
// sidecar file.
#pragma once

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "irgan/config.hpp"
#include "irgan/core.hpp"
#include "irgan/dataset.hpp"
#include "irgan/evaluation.hpp"
#include "irgan/lab.hpp"
#include "irgan/scorers.hpp"
#include "irgan/trainer.hpp"

namespace irgan {

inline void write_text(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for write: " + path.string());
  out << content;
  if (!out) throw DataError("write failed: " + path.string());
}

inline std::filesystem::path run_dir(const std::string& out_dir,
                                     const std::string& variant,
                                     std::uint64_t seed) {
  return std::filesystem::path(out_dir) / variant / std::to_string(seed);
}

struct RunOutcome {
  std::string variant;
  std::uint64_t seed = 0;
  bool ok = false;
  bool aborted = false;
  std::string error;
  bool has_reports = false;
  MetricReport generator_report;
  MetricReport discriminator_report;
  bool has_trace = false;
  DivergenceTrace trace;
};

// Resolves the per-run training config: variant, seed, a default probe
// cadence on synthetic worlds, and the fair-budget doubling for
// alternating-schedule arms (one update per iteration vs. two).
inline TrainConfig effective_train_config(const ExperimentConfig& cfg,
                                          const Variant& v, std::uint64_t seed,
                                          bool synthetic) {
  TrainConfig t = cfg.train;
  t.variant = v;
  t.seed = seed;
  if (synthetic && t.probe_every == 0) t.probe_every = 25;
  if (synthetic) t.eval_every = 0;
  if (cfg.fair_budget && v.schedule == Schedule::Alternating) {
    t.max_iterations *= 2;
    t.warmup_discriminator *= 2;
    if (t.eval_every > 0) t.eval_every *= 2;
    if (t.probe_every > 0) t.probe_every *= 2;
  }
  return t;
}

inline RunOutcome run_single(const Dataset& ds, const ExperimentConfig& cfg,
                             const std::string& variant_name,
                             std::uint64_t seed,
                             const SyntheticWorld* world = nullptr) {
  RunOutcome out;
  out.variant = variant_name;
  out.seed = seed;
  try {
    auto started = std::chrono::system_clock::now();
    std::filesystem::path dir = run_dir(cfg.out_dir, variant_name, seed);
    std::filesystem::create_directories(dir);

    TrainConfig tcfg = effective_train_config(cfg, variant_from_name(variant_name),
                                              seed, world != nullptr);
    Trainer tr(ds, tcfg);

    CheckpointSink on_checkpoint = [&](int, const Scorer& theta,
                                       const Scorer& phi) {
      write_text(dir / "checkpoint_generator.json",
                 scorer_to_json(theta).dump() + "\n");
      write_text(dir / "checkpoint_discriminator.json",
                 scorer_to_json(phi).dump() + "\n");
    };
    ProbeSink on_probe = nullptr;
    if (world) {
      out.trace.variant = variant_name;
      out.trace.seed = seed;
      on_probe = [&](int iteration, const Scorer& theta, const Scorer& phi) {
        TraceEntry e;
        e.iteration = iteration;
        e.js = mean_js_to_truth(theta, ds, *world);
        e.drift = discriminator_drift_exact(phi, *world, ds, theta);
        e.entropy = mean_policy_entropy(theta, ds, world->n_queries);
        out.trace.entries.push_back(e);
      };
    }

    TrainResult res = tr.run(on_checkpoint, on_probe);
    out.aborted = res.aborted;
    out.has_trace = world != nullptr;

    write_text(dir / "config.json", train_config_to_json(tcfg).dump() + "\n");
    write_text(dir / "runlog.jsonl", res.log.to_jsonl());
    write_text(dir / "generator.json",
               scorer_to_json(*res.generator).dump() + "\n");
    write_text(dir / "generator_target.json",
               scorer_to_json(*res.generator_target).dump() + "\n");
    write_text(dir / "discriminator.json",
               scorer_to_json(*res.discriminator).dump() + "\n");
    if (world) {
      write_text(dir / "trace.csv", trace_csv_header() + "\n" +
                                        trace_csv_rows(out.trace));
    }

    if (!res.aborted && !ds.test_queries().empty()) {
      EvalPair ev = evaluate(*res.generator, *res.discriminator, ds, seed);
      out.generator_report = ev.generator;
      out.discriminator_report = ev.discriminator;
      out.has_reports = true;
      write_text(dir / "report_generator.json",
                 report_to_json(ev.generator).dump() + "\n");
      write_text(dir / "report_discriminator.json",
                 report_to_json(ev.discriminator).dump() + "\n");
    }

    // Sidecar with wall-clock times; everything above is deterministic.
    auto ended = std::chrono::system_clock::now();
    auto t0 = std::chrono::system_clock::to_time_t(started);
    auto t1 = std::chrono::system_clock::to_time_t(ended);
    write_text(dir / "meta.txt", "started_unix " + std::to_string(t0) +
                                     "\nended_unix " + std::to_string(t1) + "\n");
    out.ok = !res.aborted;
    if (res.aborted) out.error = "training aborted on non-finite loss";
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

// Runs variants x seeds in a worker pool (default size: hardware
// concurrency); outcomes keep the fixed variant-major order regardless of
// scheduling, so all combined artifacts are deterministic.
inline std::vector<RunOutcome> run_grid(const Dataset& ds,
                                        const ExperimentConfig& cfg,
                                        const std::vector<std::string>& variants,
                                        const SyntheticWorld* world = nullptr) {
  struct Job {
    std::string variant;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const std::string& v : variants)
    for (std::uint64_t s : cfg.seeds) jobs.push_back({v, s});
  std::vector<RunOutcome> outcomes(jobs.size());

  unsigned workers = cfg.jobs > 0 ? static_cast<unsigned>(cfg.jobs)
                                  : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(jobs.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      outcomes[i] = run_single(ds, cfg, jobs[i].variant, jobs[i].seed, world);
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return outcomes;
}

// Aggregate table over outcomes: two rows per variant (generator- and
// discriminator-ranked), columns in the reported order.
inline std::string grid_table_csv(const std::vector<std::string>& variants,
                                  const std::vector<RunOutcome>& outcomes) {
  std::string csv = metrics_csv_header() + "\n";
  for (const std::string& v : variants) {
    std::vector<MetricReport> gen, disc;
    for (const RunOutcome& o : outcomes)
      if (o.variant == v && o.ok && o.has_reports) {
        gen.push_back(o.generator_report);
        disc.push_back(o.discriminator_report);
      }
    if (gen.empty()) continue;
    csv += metrics_csv_row(v + "/generator", aggregate_seeds(gen).mean) + "\n";
    csv += metrics_csv_row(v + "/discriminator", aggregate_seeds(disc).mean) + "\n";
  }
  return csv;
}

inline nlohmann::json grid_summary_json(const std::vector<std::string>& variants,
                                        const std::vector<RunOutcome>& outcomes) {
  nlohmann::json summary;
  summary["variants"] = nlohmann::json::array();
  for (const std::string& v : variants) {
    nlohmann::json entry;
    entry["variant"] = v;
    std::vector<MetricReport> gen, disc;
    nlohmann::json failures = nlohmann::json::array();
    std::vector<double> final_js;
    for (const RunOutcome& o : outcomes) {
      if (o.variant != v) continue;
      if (!o.ok) {
        nlohmann::json f;
        f["seed"] = o.seed;
        f["error"] = o.error;
        failures.push_back(std::move(f));
        continue;
      }
      if (o.has_reports) {
        gen.push_back(o.generator_report);
        disc.push_back(o.discriminator_report);
      }
      if (o.has_trace && !o.trace.entries.empty())
        final_js.push_back(o.trace.final_entry().js);
    }
    entry["failures"] = std::move(failures);
    auto arm_json = [](const MetricSummary& s) {
      nlohmann::json a;
      a["runs"] = s.runs;
      for (int i = 0; i < 7; ++i) {
        a["mean"][MetricValues::names[i]] = s.mean[i];
        a["sd"][MetricValues::names[i]] = s.sd[i];
      }
      return a;
    };
    if (!gen.empty()) {
      entry["generator"] = arm_json(aggregate_seeds(gen));
      entry["discriminator"] = arm_json(aggregate_seeds(disc));
    }
    if (!final_js.empty()) {
      entry["final_js_mean"] = mean_of(final_js);
      entry["final_js_sd"] = stddev_of(final_js);
    }
    summary["variants"].push_back(std::move(entry));
  }
  return summary;
}

inline void write_grid_artifacts(const ExperimentConfig& cfg,
                                 const std::vector<std::string>& variants,
                                 const std::vector<RunOutcome>& outcomes,
                                 bool synthetic) {
  std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);
  write_text(out / "table.csv", grid_table_csv(variants, outcomes));
  write_text(out / "summary.json",
             grid_summary_json(variants, outcomes).dump(2) + "\n");
  if (synthetic) {
    std::string csv = trace_csv_header() + "\n";
    std::string jsonl;
    for (const RunOutcome& o : outcomes) {
      if (!o.has_trace) continue;
      csv += trace_csv_rows(o.trace);
      for (const auto& line : trace_to_jsonl_lines(o.trace))
        jsonl += line.dump() + "\n";
    }
    write_text(out / "traces.csv", csv);
    write_text(out / "traces.jsonl", jsonl);
  }
}

// Rebuilds per-seed reports from final checkpoints on disk (the standalone
// `evaluate` path); throws DataError naming any missing checkpoint.
inline std::vector<RunOutcome> evaluate_grid(
    const Dataset& ds, const ExperimentConfig& cfg,
    const std::vector<std::string>& variants) {
  std::vector<RunOutcome> outcomes;
  for (const std::string& v : variants) {
    for (std::uint64_t seed : cfg.seeds) {
      std::filesystem::path dir = run_dir(cfg.out_dir, v, seed);
      for (const char* name : {"generator.json", "discriminator.json"})
        if (!std::filesystem::exists(dir / name))
          throw DataError("missing checkpoint: " + (dir / name).string());
      RunOutcome o;
      o.variant = v;
      o.seed = seed;
      auto load = [&](const char* name) {
        std::ifstream in(dir / name, std::ios::binary);
        nlohmann::json j;
        in >> j;
        return scorer_from_json(j);
      };
      auto gen = load("generator.json");
      auto disc = load("discriminator.json");
      EvalPair ev = evaluate(*gen, *disc, ds, seed);
      o.generator_report = ev.generator;
      o.discriminator_report = ev.discriminator;
      o.has_reports = true;
      o.ok = true;
      write_text(dir / "report_generator.json",
                 report_to_json(ev.generator).dump() + "\n");
      write_text(dir / "report_discriminator.json",
                 report_to_json(ev.discriminator).dump() + "\n");
      outcomes.push_back(std::move(o));
    }
  }
  return outcomes;
}

}  // namespace irgan
