#include "decop/calibration.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "decop/errors.hpp"
#include "decop/probe.hpp"

namespace decop {

using nlohmann::json;

CalibrationResult compute_calibration(Provider& provider, const std::vector<MCQAItem>& clean_items,
                                      PromptStyle style, const CalibrationOptions& options) {
  if (!provider.capabilities().label_probs)
    throw Unsupported("calibration needs a provider with label probabilities");

  std::map<std::string, std::vector<MCQAItem>> by_doc;
  for (const auto& item : clean_items) {
    if (item.group != GroupLabel::clean)
      throw Error("calibration set contains a non-clean document: " + item.doc_id);
    by_doc[item.doc_id].push_back(item);
  }
  if (by_doc.size() < static_cast<std::size_t>(options.min_docs))
    throw InsufficientCleanDocs(by_doc.size(), static_cast<std::size_t>(options.min_docs));

  CalibrationResult result;
  if (by_doc.size() < static_cast<std::size_t>(options.recommended_docs))
    result.warnings.push_back("calibration uses " + std::to_string(by_doc.size()) +
                              " clean documents; " + std::to_string(options.recommended_docs) +
                              " recommended");

  ProbeOptions probe_options;
  probe_options.style = style;
  probe_options.parallelism = options.parallelism;
  probe_options.calibration_delta = std::array<double, 4>{0.0, 0.0, 0.0, 0.0};

  std::array<double, 4> sums{};
  for (const auto& [doc_id, items] : by_doc) {
    DocumentScore score = score_document(provider, items, probe_options);
    result.excluded_trials += score.refusal_count;  // missing-logprob trials
    if (!score.mean_label_probs)
      throw MissingLogprobs("document " + doc_id + " produced no usable label probabilities");
    DocLabelMeans doc_means;
    doc_means.doc_id = doc_id;
    doc_means.means = *score.mean_label_probs;
    for (int k = 0; k < 4; ++k) sums[static_cast<std::size_t>(k)] += doc_means.means[static_cast<std::size_t>(k)];
    result.per_doc_means.push_back(std::move(doc_means));
    result.vector.source_trial_count += score.n_trials - score.refusal_count;
  }

  result.vector.source_doc_count = static_cast<int>(by_doc.size());
  for (int k = 0; k < 4; ++k) {
    double mean = sums[static_cast<std::size_t>(k)] / static_cast<double>(by_doc.size());
    result.vector.delta[static_cast<std::size_t>(k)] = 0.25 - mean;
  }
  return result;
}

AppliedCalibration apply_calibration(const std::array<double, 4>& label_probs,
                                     const std::array<double, 4>& delta) {
  AppliedCalibration applied;
  int best = 0;
  for (int k = 0; k < 4; ++k) {
    applied.adjusted[static_cast<std::size_t>(k)] =
        label_probs[static_cast<std::size_t>(k)] + delta[static_cast<std::size_t>(k)];
    if (applied.adjusted[static_cast<std::size_t>(k)] > applied.adjusted[static_cast<std::size_t>(best)])
      best = k;
  }
  applied.predicted = static_cast<char>('A' + best);
  return applied;
}

CalibrationCheck check_calibration(const std::vector<std::array<double, 4>>& per_doc_label_means,
                                   double lo, double hi) {
  CalibrationCheck check;
  int passing = 0;
  for (const auto& means : per_doc_label_means) {
    bool ok = true;
    for (double m : means) ok = ok && m >= lo && m <= hi;
    check.well_calibrated.push_back(ok);
    if (ok) ++passing;
  }
  check.proportion = per_doc_label_means.empty()
                         ? 0.0
                         : static_cast<double>(passing) / static_cast<double>(per_doc_label_means.size());
  return check;
}

void save_calibration(const CalibrationVector& cal, const std::string& model,
                      const std::string& path) {
  json j;
  j["model"] = model;
  j["delta"] = cal.delta;
  j["source_doc_count"] = cal.source_doc_count;
  j["source_trial_count"] = cal.source_trial_count;
  j["created_at"] = static_cast<std::int64_t>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write calibration file: " + path);
  out << j.dump(2) << '\n';
}

CalibrationVector load_calibration(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open calibration file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("invalid calibration file " + path + ": " + e.what());
  }
  CalibrationVector cal;
  auto delta = j.at("delta").get<std::vector<double>>();
  if (delta.size() != 4) throw Error("calibration delta must have 4 components");
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    cal.delta[static_cast<std::size_t>(k)] = delta[static_cast<std::size_t>(k)];
    if (delta[static_cast<std::size_t>(k)] < -0.75 || delta[static_cast<std::size_t>(k)] > 0.25)
      throw Error("calibration delta component outside [-0.75, 0.25]");
    sum += delta[static_cast<std::size_t>(k)];
  }
  if (std::abs(sum) > 1e-9) throw Error("calibration delta must sum to zero");
  cal.source_doc_count = j.value("source_doc_count", 0);
  cal.source_trial_count = j.value("source_trial_count", 0);
  return cal;
}

}  // namespace decop
