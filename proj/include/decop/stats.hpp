#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "decop/baselines.hpp"

namespace decop {

struct DocScore {
  std::string doc_id;
  double score = 0.0;
};

struct GroupScores {
  std::vector<DocScore> suspect;
  std::vector<DocScore> clean;
  ScoreDirection direction = ScoreDirection::higher_is_member;
};

/// Mann-Whitney AUC: over all (pos, neg) pairs, 1 for pos > neg, 0.5 for a
/// tie, averaged. Callers pre-apply orientation so pos should score higher.
double roc_auc(const std::vector<double>& pos, const std::vector<double>& neg);

struct ThresholdResult {
  double threshold = 0.0;
  double balanced_accuracy = 0.5;
};

/// Threshold maximizing balanced accuracy, scanned over midpoints between
/// adjacent distinct pooled scores plus the two all-one-side extremes; ties
/// resolve to the smallest threshold. Predicted member iff score > threshold.
ThresholdResult best_threshold(const std::vector<double>& pos, const std::vector<double>& neg);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  bool degenerate = false;  // both samples constant
};

/// Two-sided Welch's t-test. Two constant equal samples give p = 1, constant
/// unequal samples give p = 0; both carry the degenerate flag.
WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

/// Regularized incomplete beta function I_x(a, b) (continued fraction).
double incomplete_beta(double a, double b, double x);

/// Which samples feed the t-test: the original per-document scores (default),
/// every resampled score pooled across iterations, or per-iteration resample
/// means.
enum class TTestMode { original_scores, pooled_resamples, iteration_means };

TTestMode ttest_mode_from_string(const std::string& s);
std::string to_string(TTestMode m);

struct BootstrapOptions {
  int iterations = 10;
  std::uint64_t seed = 42;
  TTestMode ttest_mode = TTestMode::original_scores;
};

struct EvaluationResult {
  double auc_mean = 0.0;
  double auc_std = 0.0;
  double suspect_acc_mean = 0.0;
  double suspect_acc_std = 0.0;
  double clean_acc_mean = 0.0;
  double clean_acc_std = 0.0;
  double threshold_mean = 0.0;  // original score scale
  double p_value = 1.0;
  bool p_degenerate = false;
  int iterations = 0;
  std::uint64_t seed = 0;
  TTestMode ttest_mode = TTestMode::original_scores;
};

/// Resamples each group with replacement `iterations` times; per iteration
/// computes AUC and the separation threshold, then reports means and sample
/// standard deviations across iterations plus the Welch p-value for
/// H0: mu_suspect = mu_clean. Deterministic given (groups, iterations, seed).
EvaluationResult bootstrap_evaluate(const GroupScores& groups, const BootstrapOptions& options = {});

}  // namespace decop
