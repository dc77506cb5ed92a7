#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "decop/calibration.hpp"
#include "decop/probe.hpp"
#include "decop/providers.hpp"
#include "decop/report.hpp"
#include "decop/stats.hpp"
#include "decop/types.hpp"

namespace decop {

/// Deterministic synthetic MCQA items for offline runs: pseudo-text originals
/// with three word-substituted paraphrase variants, valid per the item
/// invariants.
std::vector<MCQAItem> make_synthetic_benchmark(int n_docs, int items_per_doc, GroupLabel group,
                                               std::uint64_t seed, const std::string& doc_prefix);

struct SimulationConfig {
  int suspect_docs = 30;
  int clean_docs = 30;
  int items_per_doc = 30;
  double memorization_suspect = 0.85;
  double memorization_clean = 0.0;
  std::array<double, 4> position_bias = {0.25, 0.25, 0.25, 0.25};
  std::uint64_t seed = 42;
  bool calibrate = false;
  int calibration_docs = 30;
  int calibration_items_per_doc = 10;
  int bootstrap_iterations = 10;
  TTestMode ttest_mode = TTestMode::original_scores;
  int parallelism = 1;
  PromptStyle style = PromptStyle::chat;
};

struct SimulationOutcome {
  DetectionReport report;
  std::vector<DocumentScore> suspect_scores;
  std::vector<DocumentScore> clean_scores;
  std::optional<CalibrationResult> calibration;
};

/// End-to-end offline audit against the simulated model: builds synthetic
/// benchmarks for both groups (plus a disjoint calibration set when asked),
/// probes every document, bootstraps, and assembles the report. Fully
/// deterministic; no network.
SimulationOutcome run_simulation(const SimulationConfig& config,
                                 const std::string& config_hash = "");

}  // namespace decop
