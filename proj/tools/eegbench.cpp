// eegbench: ingest EEG recordings, run cross-validated experiments, grids
// of experiments, and tables from finished runs.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "eegbench/errors.hpp"
#include "eegbench/experiment/config.hpp"
#include "eegbench/experiment/run.hpp"
#include "eegbench/log.hpp"

namespace fs = std::filesystem;
using namespace eegbench;

namespace {

constexpr int kOk = 0, kRuntime = 1, kUsage = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  bool allow_raw = false;
  bool subject_split = false;
  bool reduced = false;
  std::string out;

  experiment::Overrides overrides() const {
    experiment::Overrides o;
    o.seed = seed;
    if (!out.empty()) o.out = fs::path(out);
    o.allow_raw = allow_raw;
    o.subject_split = subject_split;
    o.reduced = reduced;
    return o;
  }
};

void add_run_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file")->required();
  cmd->add_option("--seed", c.seed, "Override the config seed");
  cmd->add_option("--jobs", c.jobs, "Parallel workers (folds for run, configs for grid)")->check(CLI::PositiveNumber);
  cmd->add_flag("--allow-raw", c.allow_raw, "Allow deep models on raw (unnormalized) frames");
  cmd->add_flag("--subject-split", c.subject_split, "Keep all frames of a subject in one fold");
  cmd->add_flag("--reduced", c.reduced, "Use every 5th frame (smoke runs)");
  cmd->add_option("--out", c.out, "Output directory");
}

int cmd_ingest(const std::string& config, std::string dataset, std::string manifest, std::string cache,
               std::size_t frame_len) {
  if (!config.empty()) {
    const auto c = experiment::load_config(config);
    if (dataset.empty() && c.dataset) dataset = c.dataset->string();
    if (manifest.empty() && c.manifest) manifest = c.manifest->string();
    if (cache.empty() && c.cache) cache = c.cache->string();
    frame_len = c.frame_len;
  }
  if (dataset.empty()) {
    const char* env = std::getenv(experiment::kDatasetRootEnv);
    if (!env || !*env) throw ParameterError("ingest: no dataset directory (use --dataset or set EEGBENCH_DATASET_ROOT)");
    dataset = env;
  }
  const fs::path dir(dataset);
  const fs::path man = manifest.empty() ? dir / "manifest.json" : fs::path(manifest);
  const fs::path out = cache.empty() ? dir / "frames.cache" : fs::path(cache);
  const auto r = experiment::ingest(dir, man, out, frame_len);
  std::cout << r.summary.dump(2) << "\n";
  std::cout << "wrote " << out.string() << "\n";
  return kOk;
}

int cmd_run(const Common& c) {
  auto cfg = experiment::load_config(c.config);
  experiment::finalize(cfg, c.overrides());
  const auto out = experiment::run_experiment(cfg, c.jobs);
  std::cout << eval::to_text(eval::aggregate_report({out.report}));
  for (const auto& f : out.report.folds)
    for (const auto& w : f.output.warnings) std::cerr << "warning: fold " << f.fold + 1 << ": " << w << "\n";
  std::cerr << "results: " << out.results_path.string() << "\n";
  return kOk;
}

int cmd_grid(const Common& c) {
  const fs::path path(c.config);
  const auto grid = experiment::read_json_file(path, "grid");
  const auto g = experiment::run_grid(grid, path.parent_path(), c.overrides(), c.jobs, &std::cerr);
  if (g.table) std::cout << eval::to_text(*g.table);
  for (const auto& r : g.runs)
    if (!r.report) std::cout << "FAILED run " << r.index + 1 << " (" << r.label << "): " << r.error << "\n";
  return g.failures() ? kRuntime : kOk;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<fs::path> paths(inputs.begin(), inputs.end());
  const auto table = experiment::collect_report(paths);
  std::cout << eval::to_text(table);
  if (!out.empty()) {
    const fs::path dir(out);
    eval::write_text(dir / "report.txt", eval::to_text(table));
    eval::write_text(dir / "report.json", eval::to_json(table).dump(2) + "\n");
    eval::write_text(dir / "report.svg", eval::svg_grouped_bars("Results (%)", table));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  log::set_warning_sink([](const std::string& m) { std::cerr << "warning: " << m << "\n"; });

  CLI::App app{"Cross-validated EEG schizophrenia classification benchmarks"};
  app.require_subcommand(1);

  std::string ing_config, ing_dataset, ing_manifest, ing_out;
  std::size_t ing_frame_len = data::kFrameLength;
  auto* ingest = app.add_subcommand("ingest", "Parse a dataset into a binary frame cache");
  ingest->add_option("--config", ing_config, "Take dataset, manifest and cache paths from a config");
  ingest->add_option("--dataset", ing_dataset, "Dataset directory");
  ingest->add_option("--manifest", ing_manifest, "Manifest (default <dataset>/manifest.json)");
  ingest->add_option("--out", ing_out, "Cache file (default <dataset>/frames.cache)");
  ingest->add_option("--frame-len", ing_frame_len, "Samples per frame")->check(CLI::PositiveNumber);

  Common run_opts, grid_opts;
  auto* run = app.add_subcommand("run", "Cross-validate one configuration");
  add_run_flags(run, run_opts);
  auto* grid = app.add_subcommand("grid", "Run a list of configurations");
  add_run_flags(grid, grid_opts);

  std::vector<std::string> rep_inputs;
  std::string rep_out;
  auto* report = app.add_subcommand("report", "Tabulate finished runs");
  report->add_option("inputs", rep_inputs, "results.json files, run or grid directories")->required();
  report->add_option("--out", rep_out, "Also write report.txt/json/svg here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*ingest) return cmd_ingest(ing_config, ing_dataset, ing_manifest, ing_out, ing_frame_len);
    if (*run) return cmd_run(run_opts);
    if (*grid) return cmd_grid(grid_opts);
    if (*report) return cmd_report(rep_inputs, rep_out);
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
