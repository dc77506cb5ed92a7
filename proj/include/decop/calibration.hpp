#pragma once

#include <array>
#include <string>
#include <vector>

#include "decop/providers.hpp"
#include "decop/types.hpp"

namespace decop {

enum class PromptStyle;  // probe.hpp

/// Per-label additive adjustments estimated on clean books: delta = 0.25 minus
/// the average observed label probability. Zero-sum by construction.
struct CalibrationVector {
  std::array<double, 4> delta = {0.0, 0.0, 0.0, 0.0};
  int source_doc_count = 0;
  int source_trial_count = 0;
};

struct CalibrationOptions {
  int min_docs = 5;        // hard floor
  int recommended_docs = 30;
  int parallelism = 1;
};

struct DocLabelMeans {
  std::string doc_id;
  std::array<double, 4> means = {0.25, 0.25, 0.25, 0.25};
};

struct CalibrationResult {
  CalibrationVector vector;
  int excluded_trials = 0;  // trials dropped for missing logprobs
  std::vector<DocLabelMeans> per_doc_means;
  std::vector<std::string> warnings;
};

/// Runs the full permutation probe over clean-book items collecting label
/// probabilities, averages per document and then across documents, and
/// returns delta = 0.25 - mean. Items are grouped by doc_id internally.
/// Throws InsufficientCleanDocs below the hard floor; warns below the
/// recommended count. Trials with missing logprobs are excluded and counted.
CalibrationResult compute_calibration(Provider& provider, const std::vector<MCQAItem>& clean_items,
                                      PromptStyle style, const CalibrationOptions& options = {});

struct AppliedCalibration {
  std::array<double, 4> adjusted;
  char predicted = 'A';
};

/// adjusted = probs + delta; predicted = argmax with ties broken A < B < C < D.
/// No renormalization (argmax is invariant to it and negative values are fine).
AppliedCalibration apply_calibration(const std::array<double, 4>& label_probs,
                                     const std::array<double, 4>& delta);

struct CalibrationCheck {
  std::vector<bool> well_calibrated;  // per document
  double proportion = 0.0;
};

/// A document counts as well calibrated when all four adjusted mean label
/// probabilities lie inside [lo, hi] (the [0.15, 0.35] target band).
CalibrationCheck check_calibration(const std::vector<std::array<double, 4>>& per_doc_label_means,
                                   double lo = 0.15, double hi = 0.35);

void save_calibration(const CalibrationVector& cal, const std::string& model,
                      const std::string& path);
CalibrationVector load_calibration(const std::string& path);

}  // namespace decop
