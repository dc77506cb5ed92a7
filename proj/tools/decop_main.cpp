#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "decop/cli.hpp"
#include "decop/errors.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> cache_dir;
  std::optional<int> parallelism;
  std::optional<std::string> prompt_style;
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::optional<double> paraphrase_temperature;
  std::optional<double> eval_temperature;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON run configuration");
  cmd->add_option("--cache-dir", flags.cache_dir, "response cache directory (empty disables)");
  cmd->add_option("--parallelism", flags.parallelism, "provider worker count");
  cmd->add_option("--prompt-style", flags.prompt_style, "chat or system_user");
  cmd->add_option("--seed", flags.seed, "bootstrap / extraction seed");
  cmd->add_option("--iterations", flags.iterations, "bootstrap iterations");
  cmd->add_option("--paraphrase-temperature", flags.paraphrase_temperature,
                  "override the 0.1 paraphrasing temperature (warns)");
  cmd->add_option("--eval-temperature", flags.eval_temperature,
                  "override the 0 evaluation temperature (warns)");
}

decop::RunConfig resolve_config(const CommonFlags& flags) {
  decop::RunConfig config =
      flags.config_path.empty() ? decop::default_run_config() : decop::load_run_config(flags.config_path);
  if (flags.cache_dir) config.cache_dir = *flags.cache_dir;
  if (flags.parallelism) config.parallelism = *flags.parallelism;
  if (flags.prompt_style) config.prompt_style = decop::prompt_style_from_string(*flags.prompt_style);
  if (flags.seed) {
    config.bootstrap.seed = *flags.seed;
    config.extract_seed = *flags.seed;
    config.simulation.seed = *flags.seed;
  }
  if (flags.iterations) {
    config.bootstrap.iterations = *flags.iterations;
    config.simulation.bootstrap_iterations = *flags.iterations;
  }
  if (flags.paraphrase_temperature) {
    config.paraphrase_temperature = *flags.paraphrase_temperature;
    std::cerr << "warning: paraphrase temperature overridden to " << *flags.paraphrase_temperature
              << " (default 0.1)\n";
  }
  if (flags.eval_temperature) {
    config.eval_temperature = *flags.eval_temperature;
    std::cerr << "warning: evaluation temperature overridden to " << *flags.eval_temperature
              << " (default 0)\n";
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DE-COP training-data detection toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* extract = app.add_subcommand("extract", "extract passages from a corpus manifest");
  decop::ExtractArgs extract_args;
  add_common(extract, flags);
  extract->add_option("--manifest", extract_args.manifest, "corpus manifest (jsonl)")->required();
  extract->add_option("--out", extract_args.out, "passages output (jsonl)")->required();
  extract->add_option("--status-out", extract_args.status_out, "status record path");

  auto* paraphrase = app.add_subcommand("paraphrase", "generate the three paraphrases per passage");
  decop::ParaphraseArgs paraphrase_args;
  add_common(paraphrase, flags);
  paraphrase->add_option("--passages", paraphrase_args.passages, "passages input (jsonl)")->required();
  paraphrase->add_option("--out", paraphrase_args.out, "benchmark output (jsonl)")->required();
  paraphrase->add_option("--status-out", paraphrase_args.status_out, "status record path");

  auto* probe = app.add_subcommand("probe", "run the 24-permutation multiple-choice probe");
  decop::ProbeArgs probe_args;
  add_common(probe, flags);
  probe->add_option("--benchmark", probe_args.benchmark, "benchmark input (jsonl)")->required();
  probe->add_option("--scores-out", probe_args.scores_out, "per-document scores output")->required();
  probe->add_option("--transcripts-out", probe_args.transcripts_out, "trial transcript output");
  probe->add_option("--calibration", probe_args.calibration, "calibration vector (json)");
  probe->add_option("--status-out", probe_args.status_out, "status record path");

  auto* calibrate = app.add_subcommand("calibrate", "estimate label adjustments on clean books");
  decop::CalibrateArgs calibrate_args;
  add_common(calibrate, flags);
  calibrate->add_option("--benchmark", calibrate_args.benchmark, "clean benchmark (jsonl)")->required();
  calibrate->add_option("--out", calibrate_args.out, "calibration vector output (json)")->required();
  calibrate->add_option("--status-out", calibrate_args.status_out, "status record path");

  auto* baseline = app.add_subcommand("baseline", "run a comparison method");
  decop::BaselineArgs baseline_args;
  add_common(baseline, flags);
  baseline->add_option("--benchmark", baseline_args.benchmark, "benchmark input (jsonl)")->required();
  baseline
      ->add_option("--method", baseline_args.method,
                   "perplexity | zlib | lowercase | min_k | prefix32 | prefix50 | name_cloze")
      ->required();
  baseline->add_option("--scores-out", baseline_args.scores_out, "per-document scores output")
      ->required();
  baseline->add_option("--outcomes-out", baseline_args.outcomes_out, "per-passage outcomes output");
  baseline->add_option("--status-out", baseline_args.status_out, "status record path");

  auto* evaluate = app.add_subcommand("evaluate", "bootstrap AUC / t-test over score files");
  decop::EvaluateArgs evaluate_args;
  add_common(evaluate, flags);
  evaluate->add_option("--scores", evaluate_args.scores, "score files (jsonl)")->required();
  evaluate->add_option("--report-json", evaluate_args.report_json, "report output (json)")->required();
  evaluate->add_option("--report-text", evaluate_args.report_text, "report output (text)");
  evaluate->add_option("--status-out", evaluate_args.status_out, "status record path");

  auto* simulate = app.add_subcommand("simulate", "offline end-to-end audit with the simulated model");
  decop::SimulateArgs simulate_args;
  add_common(simulate, flags);
  simulate->add_option("--report-json", simulate_args.report_json, "report output (json)")->required();
  simulate->add_option("--report-text", simulate_args.report_text, "report output (text)");
  simulate->add_option("--status-out", simulate_args.status_out, "status record path");

  auto* report = app.add_subcommand("report", "render a saved report");
  decop::ReportArgs report_args;
  report->add_option("--json", report_args.report_json, "report JSON path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*extract) return decop::cmd_extract(resolve_config(flags), extract_args);
    if (*paraphrase) return decop::cmd_paraphrase(resolve_config(flags), paraphrase_args);
    if (*probe) return decop::cmd_probe(resolve_config(flags), probe_args);
    if (*calibrate) return decop::cmd_calibrate(resolve_config(flags), calibrate_args);
    if (*baseline) return decop::cmd_baseline(resolve_config(flags), baseline_args);
    if (*evaluate) return decop::cmd_evaluate(resolve_config(flags), evaluate_args);
    if (*simulate) return decop::cmd_simulate(resolve_config(flags), simulate_args);
    if (*report) return decop::cmd_report(report_args);
  } catch (const decop::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const decop::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
