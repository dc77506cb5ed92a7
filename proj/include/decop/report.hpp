#pragma once

#include <optional>
#include <string>
#include <vector>

#include "decop/calibration.hpp"
#include "decop/probe.hpp"
#include "decop/stats.hpp"

namespace decop {

struct ReportDocument {
  std::string doc_id;
  std::string title;
  GroupLabel group = GroupLabel::clean;
  double score = 0.0;
  int n_trials = 0;
  int refusals = 0;
};

struct CalibrationSummary {
  CalibrationVector vector;
  std::optional<double> well_calibrated_proportion;  // Appendix-style [0.15, 0.35] check
};

struct DetectionReport {
  std::string provider;
  std::string model;
  std::string method;  // "decop" or a baseline name
  ScoreDirection direction = ScoreDirection::higher_is_member;
  std::string config_hash;
  std::vector<ReportDocument> documents;
  EvaluationResult evaluation;
  int refusal_count = 0;
  std::optional<CalibrationSummary> calibration;
  std::int64_t timestamp = 0;
};

DetectionReport make_report(const std::string& provider, const std::string& model,
                            const std::string& method, ScoreDirection direction,
                            const std::string& config_hash, std::vector<ReportDocument> documents,
                            const EvaluationResult& evaluation,
                            std::optional<CalibrationSummary> calibration);

/// Structured form; stable field order, timestamp isolated in one field.
std::string report_to_json(const DetectionReport& report);
DetectionReport report_from_json(const std::string& json_text);

/// Human-readable table; the timestamp appears on a single "generated:" line.
std::string report_to_text(const DetectionReport& report);

void save_report(const DetectionReport& report, const std::string& json_path,
                 const std::string& text_path);

/// The report minus its timestamp line/field, for replay comparisons.
std::string strip_timestamp(const std::string& rendered);

}  // namespace decop
