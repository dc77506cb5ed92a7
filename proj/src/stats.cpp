#include "decop/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "decop/errors.hpp"
#include "decop/rng.hpp"

namespace decop {

double roc_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  if (pos.empty() || neg.empty()) throw EmptyGroup();
  // Integer numerator (wins doubled so ties stay exact), divided once.
  long long twice_wins = 0;
  for (double p : pos) {
    for (double n : neg) {
      if (p > n)
        twice_wins += 2;
      else if (p == n)
        twice_wins += 1;
    }
  }
  return static_cast<double>(twice_wins) /
         (2.0 * static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

ThresholdResult best_threshold(const std::vector<double>& pos, const std::vector<double>& neg) {
  if (pos.empty() || neg.empty()) throw EmptyGroup();
  std::vector<double> pooled;
  pooled.reserve(pos.size() + neg.size());
  pooled.insert(pooled.end(), pos.begin(), pos.end());
  pooled.insert(pooled.end(), neg.begin(), neg.end());
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  std::vector<double> candidates;
  candidates.push_back(pooled.front() - 1.0);  // everything predicted member
  for (std::size_t i = 0; i + 1 < pooled.size(); ++i)
    candidates.push_back((pooled[i] + pooled[i + 1]) / 2.0);
  candidates.push_back(pooled.back() + 1.0);  // nothing predicted member

  ThresholdResult best;
  best.balanced_accuracy = -1.0;
  for (double theta : candidates) {
    int tp = 0, tn = 0;
    for (double p : pos)
      if (p > theta) ++tp;
    for (double n : neg)
      if (!(n > theta)) ++tn;
    double ba = (static_cast<double>(tp) / static_cast<double>(pos.size()) +
                 static_cast<double>(tn) / static_cast<double>(neg.size())) /
                2.0;
    if (ba > best.balanced_accuracy) {
      best.balanced_accuracy = ba;
      best.threshold = theta;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Welch's t-test
// ---------------------------------------------------------------------------

namespace {

double continued_fraction_beta(double a, double b, double x) {
  // Lentz's algorithm for the incomplete beta continued fraction.
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-15;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                    b * std::log(1.0 - x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * continued_fraction_beta(a, b, x) / a;
  return 1.0 - front * continued_fraction_beta(b, a, 1.0 - x) / b;
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

double sample_stddev(const std::vector<double>& v) {
  return std::sqrt(sample_variance(v, mean_of(v)));
}

}  // namespace

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw Error("t-test needs at least 2 scores per group");
  WelchResult result;
  double ma = mean_of(a), mb = mean_of(b);
  double va = sample_variance(a, ma), vb = sample_variance(b, mb);
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());

  if (va == 0.0 && vb == 0.0) {
    result.degenerate = true;
    result.p_value = (ma == mb) ? 1.0 : 0.0;
    result.t = (ma == mb) ? 0.0 : std::numeric_limits<double>::infinity();
    return result;
  }

  double se2 = va / na + vb / nb;
  result.t = (ma - mb) / std::sqrt(se2);
  result.df = se2 * se2 / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
  double x = result.df / (result.df + result.t * result.t);
  result.p_value = incomplete_beta(result.df / 2.0, 0.5, x);
  return result;
}

// ---------------------------------------------------------------------------
// Bootstrap evaluation
// ---------------------------------------------------------------------------

TTestMode ttest_mode_from_string(const std::string& s) {
  if (s == "original_scores") return TTestMode::original_scores;
  if (s == "pooled_resamples") return TTestMode::pooled_resamples;
  if (s == "iteration_means") return TTestMode::iteration_means;
  throw Error("unknown t-test mode: " + s);
}

std::string to_string(TTestMode m) {
  switch (m) {
    case TTestMode::original_scores: return "original_scores";
    case TTestMode::pooled_resamples: return "pooled_resamples";
    case TTestMode::iteration_means: return "iteration_means";
  }
  return "original_scores";
}

EvaluationResult bootstrap_evaluate(const GroupScores& groups, const BootstrapOptions& options) {
  if (groups.suspect.empty() || groups.clean.empty()) throw EmptyGroup();
  if (options.iterations < 1) throw Error("bootstrap needs at least one iteration");

  const double sign = groups.direction == ScoreDirection::higher_is_member ? 1.0 : -1.0;
  std::vector<double> suspect, clean;  // oriented
  for (const auto& d : groups.suspect) suspect.push_back(sign * d.score);
  for (const auto& d : groups.clean) clean.push_back(sign * d.score);

  Rng master(options.seed);
  std::vector<double> aucs, thresholds, suspect_means, clean_means;
  std::vector<double> pooled_suspect, pooled_clean;

  for (int it = 0; it < options.iterations; ++it) {
    Rng rng = master.fork(static_cast<std::uint64_t>(it));
    std::vector<double> rs, rc;
    rs.reserve(suspect.size());
    rc.reserve(clean.size());
    for (std::size_t i = 0; i < suspect.size(); ++i)
      rs.push_back(suspect[static_cast<std::size_t>(rng.next_below(suspect.size()))]);
    for (std::size_t i = 0; i < clean.size(); ++i)
      rc.push_back(clean[static_cast<std::size_t>(rng.next_below(clean.size()))]);

    aucs.push_back(roc_auc(rs, rc));
    thresholds.push_back(best_threshold(rs, rc).threshold);
    suspect_means.push_back(mean_of(rs));
    clean_means.push_back(mean_of(rc));
    pooled_suspect.insert(pooled_suspect.end(), rs.begin(), rs.end());
    pooled_clean.insert(pooled_clean.end(), rc.begin(), rc.end());
  }

  EvaluationResult result;
  result.auc_mean = mean_of(aucs);
  result.auc_std = sample_stddev(aucs);
  // Report group means on the original score scale.
  result.suspect_acc_mean = sign * mean_of(suspect_means);
  result.suspect_acc_std = sample_stddev(suspect_means);
  result.clean_acc_mean = sign * mean_of(clean_means);
  result.clean_acc_std = sample_stddev(clean_means);
  result.threshold_mean = sign * mean_of(thresholds);
  result.iterations = options.iterations;
  result.seed = options.seed;
  result.ttest_mode = options.ttest_mode;

  WelchResult welch;
  switch (options.ttest_mode) {
    case TTestMode::original_scores:
      welch = welch_t_test(suspect, clean);
      break;
    case TTestMode::pooled_resamples:
      welch = welch_t_test(pooled_suspect, pooled_clean);
      break;
    case TTestMode::iteration_means:
      welch = welch_t_test(suspect_means, clean_means);
      break;
  }
  result.p_value = welch.p_value;
  result.p_degenerate = welch.degenerate;
  return result;
}

}  // namespace decop
