// Experiment front door: ingest / train / evaluate / ablate / lab.
// Exit codes: 0 success, 1 usage or config error, 2 data error,
// 3 runtime failure.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "irgan/irgan.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
  std::string config_path;
  std::string variant;
  std::string seeds;
  std::string out;
  int max_iterations = -1;
  int jobs = -1;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_variant = true) {
  cmd->add_option("--config", a.config_path, "experiment config file")->required();
  if (with_variant) cmd->add_option("--variant", a.variant, "variant name");
  cmd->add_option("--seeds", a.seeds, "comma-separated seed list");
  cmd->add_option("--out", a.out, "output directory");
  cmd->add_option("--max-iterations", a.max_iterations, "iteration cap override");
  cmd->add_option("--jobs", a.jobs, "worker pool size for grids");
  cmd->add_option("--format", a.format, "table format: csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
}

irgan::ExperimentConfig resolve_config(const CommonArgs& a) {
  irgan::ExperimentConfig cfg = irgan::load_experiment_config(a.config_path);
  if (!a.variant.empty()) cfg.train.variant = irgan::variant_from_name(a.variant);
  if (!a.seeds.empty()) cfg.seeds = irgan::parse_seed_list(a.seeds);
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (a.max_iterations >= 0) cfg.train.max_iterations = a.max_iterations;
  if (a.jobs >= 0) cfg.jobs = a.jobs;
  cfg.validate();
  return cfg;
}

void echo_config(const irgan::ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  irgan::write_text(std::filesystem::path(cfg.out_dir) / "config.json",
                    irgan::experiment_config_to_json(cfg).dump(2) + "\n");
}

int report_failures(const std::vector<irgan::RunOutcome>& outcomes) {
  int failures = 0;
  for (const auto& o : outcomes) {
    if (o.ok) {
      std::cout << "run " << o.variant << " seed " << o.seed << ": ok\n";
    } else {
      ++failures;
      std::cout << "run " << o.variant << " seed " << o.seed
                << ": FAILED (" << o.error << ")\n";
    }
  }
  return failures;
}

void print_table(const irgan::ExperimentConfig& cfg,
                 const std::vector<std::string>& variants,
                 const std::vector<irgan::RunOutcome>& outcomes,
                 const std::string& format) {
  if (format == "json")
    std::cout << irgan::grid_summary_json(variants, outcomes).dump(2) << "\n";
  else
    std::cout << irgan::grid_table_csv(variants, outcomes);
  (void)cfg;
}

int cmd_ingest(const std::string& format, const std::string& in_path,
               const std::string& out_path, double split_fraction,
               std::uint64_t split_seed, bool do_split) {
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw irgan::DataError("cannot open input: " + in_path);
  irgan::Dataset ds;
  if (format == "letor")
    ds = irgan::parse_letor(in);
  else if (format == "movielens")
    ds = irgan::parse_movielens(in);
  else
    throw irgan::ConfigError("ingest format must be letor|movielens");
  std::vector<std::string> warnings;
  if (do_split) ds = irgan::split_dataset(ds, split_fraction, split_seed, &warnings);
  irgan::write_dataset(ds, out_path);
  irgan::DatasetSummary s = irgan::summarize(ds);
  std::cout << "queries " << s.queries << "\ndocs " << s.docs << "\njudgments "
            << s.judgments << "\npositives " << s.positives << "\n";
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "wrote " << out_path << "\n";
  return kExitOk;
}

int cmd_train(const CommonArgs& args) {
  irgan::ExperimentConfig cfg = resolve_config(args);
  std::vector<std::string> warnings;
  irgan::Dataset ds = irgan::dataset_from_spec(cfg.dataset, &warnings);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
  echo_config(cfg);
  bool synthetic = cfg.dataset.kind == irgan::DatasetSpec::Synthetic;
  irgan::SyntheticWorld world;
  if (synthetic) world = irgan::world_from_spec(cfg.dataset);
  std::string vname = irgan::variant_name(cfg.train.variant);
  auto outcomes = irgan::run_grid(ds, cfg, {vname}, synthetic ? &world : nullptr);
  int failures = report_failures(outcomes);
  return failures == 0 ? kExitOk : kExitRuntime;
}

int cmd_evaluate(const CommonArgs& args) {
  irgan::ExperimentConfig cfg = resolve_config(args);
  irgan::Dataset ds = irgan::dataset_from_spec(cfg.dataset);
  std::vector<std::string> variants;
  if (!args.variant.empty()) {
    variants.push_back(args.variant);
  } else {
    // evaluate whichever canonical variant directories exist
    for (const std::string& v : irgan::canonical_variants())
      if (std::filesystem::exists(std::filesystem::path(cfg.out_dir) / v))
        variants.push_back(v);
    if (variants.empty())
      throw irgan::DataError("no variant run directories under " + cfg.out_dir);
  }
  auto outcomes = irgan::evaluate_grid(ds, cfg, variants);
  irgan::write_text(std::filesystem::path(cfg.out_dir) / "table.csv",
                    irgan::grid_table_csv(variants, outcomes));
  print_table(cfg, variants, outcomes, args.format);
  return kExitOk;
}

int cmd_ablate(const CommonArgs& args) {
  irgan::ExperimentConfig cfg = resolve_config(args);
  std::vector<std::string> warnings;
  irgan::Dataset ds = irgan::dataset_from_spec(cfg.dataset, &warnings);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
  echo_config(cfg);
  bool synthetic = cfg.dataset.kind == irgan::DatasetSpec::Synthetic;
  irgan::SyntheticWorld world;
  if (synthetic) world = irgan::world_from_spec(cfg.dataset);
  const std::vector<std::string>& variants = irgan::canonical_variants();
  auto outcomes = irgan::run_grid(ds, cfg, variants, synthetic ? &world : nullptr);
  irgan::write_grid_artifacts(cfg, variants, outcomes, synthetic);
  int failures = report_failures(outcomes);
  print_table(cfg, variants, outcomes, args.format);
  return failures == 0 ? kExitOk : kExitRuntime;
}

int cmd_lab(const CommonArgs& args) {
  irgan::ExperimentConfig cfg = resolve_config(args);
  if (cfg.dataset.kind != irgan::DatasetSpec::Synthetic)
    throw irgan::ConfigError("lab requires a synthetic dataset section");
  irgan::SyntheticWorld world = irgan::world_from_spec(cfg.dataset);
  irgan::Dataset ds = irgan::world_to_dataset(world);
  echo_config(cfg);
  std::vector<std::string> variants;
  if (!args.variant.empty()) variants.push_back(args.variant);
  else variants = irgan::canonical_variants();
  auto outcomes = irgan::run_grid(ds, cfg, variants, &world);
  irgan::write_grid_artifacts(cfg, variants, outcomes, true);
  int failures = report_failures(outcomes);
  for (const std::string& v : variants) {
    std::vector<double> finals;
    for (const auto& o : outcomes)
      if (o.variant == v && o.ok && !o.trace.entries.empty())
        finals.push_back(o.trace.final_entry().js);
    if (finals.empty()) continue;
    std::printf("%s final_js mean %.6f sd %.6f\n", v.c_str(),
                irgan::mean_of(finals), irgan::stddev_of(finals));
  }
  return failures == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial retrieval training experiments"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "parse a raw dataset into canonical JSON");
  std::string ingest_format, ingest_in, ingest_out;
  double ingest_fraction = 0.8;
  std::uint64_t ingest_seed = 13;
  bool ingest_split = false;
  ingest->add_option("--format", ingest_format, "letor|movielens")->required();
  ingest->add_option("--in", ingest_in, "input path")->required();
  ingest->add_option("--out", ingest_out, "output path")->required();
  ingest->add_flag("--split", ingest_split, "apply the train/test split");
  ingest->add_option("--split-fraction", ingest_fraction, "train fraction");
  ingest->add_option("--split-seed", ingest_seed, "split seed");

  CommonArgs train_args, eval_args, ablate_args, lab_args;
  auto* train = app.add_subcommand("train", "train one variant across seeds");
  add_common(train, train_args);
  auto* evaluate = app.add_subcommand("evaluate", "evaluate checkpoints into tables");
  add_common(evaluate, eval_args);
  auto* ablate = app.add_subcommand("ablate", "run the full 4-variant grid");
  add_common(ablate, ablate_args, false);
  auto* lab = app.add_subcommand("lab", "synthetic equilibrium study");
  add_common(lab, lab_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (ingest->parsed())
      return cmd_ingest(ingest_format, ingest_in, ingest_out, ingest_fraction,
                        ingest_seed, ingest_split);
    if (train->parsed()) return cmd_train(train_args);
    if (evaluate->parsed()) return cmd_evaluate(eval_args);
    if (ablate->parsed()) return cmd_ablate(ablate_args);
    if (lab->parsed()) return cmd_lab(lab_args);
  } catch (const irgan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const irgan::ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const irgan::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
