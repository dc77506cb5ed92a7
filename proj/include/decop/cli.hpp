#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "decop/baselines.hpp"
#include "decop/probe.hpp"
#include "decop/providers.hpp"
#include "decop/simulate.hpp"
#include "decop/stats.hpp"
#include "decop/types.hpp"

namespace decop {

struct ProviderConfig {
  std::string kind = "simulated";  // or "openai_compat"
  RemoteProviderConfig remote;
  SimulatedModelConfig simulated;
  std::string simulated_model_name = "simulated";
};

/// Everything a run needs; file values are overridable by CLI flags.
/// Credentials never live here: remote providers read them from the
/// environment variable named in their config.
struct RunConfig {
  ProviderConfig provider;
  ProviderConfig paraphrase_provider;
  std::string cache_dir;  // empty disables caching
  int parallelism = 1;
  PromptStyle prompt_style = PromptStyle::chat;
  LengthSetting length_setting = LengthSetting::medium128;
  int passages_per_doc = 30;
  std::uint64_t extract_seed = 1;
  double paraphrase_temperature = 0.1;
  double eval_temperature = 0.0;
  int paraphrase_retries = 3;
  double min_k_percent = 20.0;
  BootstrapOptions bootstrap;
  SimulationConfig simulation;
  std::string raw_json;  // canonical config text, hashed into reports
};

RunConfig load_run_config(const std::string& path);
RunConfig default_run_config();
std::string config_hash(const RunConfig& config);

/// Provider wired per config: remote or simulated, wrapped in the response
/// cache when cache_dir is set. The cache pointer (when present) exposes
/// hit/miss stats for the status record.
struct ProviderHandle {
  std::shared_ptr<Provider> provider;
  std::shared_ptr<ResponseCache> cache;  // null when caching is off
};

ProviderHandle make_provider(const ProviderConfig& config, const std::string& cache_dir);

/// Per-document score record shared by the probe and baseline commands.
struct ScoreRecord {
  std::string doc_id;
  std::string title;
  GroupLabel group = GroupLabel::clean;
  std::string method;  // "decop" or baseline name
  double value = 0.0;
  ScoreDirection direction = ScoreDirection::higher_is_member;
  int n_trials = 0;
  int refusals = 0;
};

void save_scores(const std::vector<ScoreRecord>& scores, const std::string& path);
std::vector<ScoreRecord> load_scores(const std::string& path);

struct CommandStatus {
  std::string command;
  bool ok = true;
  std::string error;
  std::vector<std::string> outputs;
  std::vector<std::string> incomplete_docs;
  std::vector<std::string> warnings;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::string config_hash;
};

void write_status(const CommandStatus& status, const std::string& path);

// Subcommand entry points. Each validates inputs before any provider call,
// writes its artifact plus a status record, and returns a process exit code.

struct ExtractArgs {
  std::string manifest;
  std::string out;
  std::optional<std::string> status_out;
};
int cmd_extract(const RunConfig& config, const ExtractArgs& args);

struct ParaphraseArgs {
  std::string passages;
  std::string out;
  std::optional<std::string> status_out;
};
int cmd_paraphrase(const RunConfig& config, const ParaphraseArgs& args);

struct ProbeArgs {
  std::string benchmark;
  std::string scores_out;
  std::string transcripts_out;  // empty disables the audit transcript
  std::string calibration;     // optional calibration vector path
  std::optional<std::string> status_out;
};
int cmd_probe(const RunConfig& config, const ProbeArgs& args);

struct CalibrateArgs {
  std::string benchmark;
  std::string out;
  std::optional<std::string> status_out;
};
int cmd_calibrate(const RunConfig& config, const CalibrateArgs& args);

struct BaselineArgs {
  std::string benchmark;
  std::string method;
  std::string scores_out;
  std::string outcomes_out;  // per-passage outcomes; empty disables
  std::optional<std::string> status_out;
};
int cmd_baseline(const RunConfig& config, const BaselineArgs& args);

struct EvaluateArgs {
  std::vector<std::string> scores;
  std::string report_json;
  std::string report_text;
  std::optional<std::string> status_out;
};
int cmd_evaluate(const RunConfig& config, const EvaluateArgs& args);

struct SimulateArgs {
  std::string report_json;
  std::string report_text;
  std::optional<std::string> status_out;
};
int cmd_simulate(const RunConfig& config, const SimulateArgs& args);

struct ReportArgs {
  std::string report_json;
};
int cmd_report(const ReportArgs& args);

}  // namespace decop
