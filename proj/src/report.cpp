#include "decop/report.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "decop/errors.hpp"

namespace decop {

using nlohmann::json;

DetectionReport make_report(const std::string& provider, const std::string& model,
                            const std::string& method, ScoreDirection direction,
                            const std::string& config_hash, std::vector<ReportDocument> documents,
                            const EvaluationResult& evaluation,
                            std::optional<CalibrationSummary> calibration) {
  DetectionReport report;
  report.provider = provider;
  report.model = model;
  report.method = method;
  report.direction = direction;
  report.config_hash = config_hash;
  report.documents = std::move(documents);
  report.evaluation = evaluation;
  report.calibration = std::move(calibration);
  for (const auto& doc : report.documents) report.refusal_count += doc.refusals;
  report.timestamp = static_cast<std::int64_t>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  return report;
}

std::string report_to_json(const DetectionReport& report) {
  json j;
  j["version"] = 1;
  j["provider"] = report.provider;
  j["model"] = report.model;
  j["method"] = report.method;
  j["direction"] = report.direction == ScoreDirection::higher_is_member ? "higher_is_member"
                                                                        : "lower_is_member";
  j["config_hash"] = report.config_hash;
  json docs = json::array();
  for (const auto& d : report.documents) {
    json dj;
    dj["doc_id"] = d.doc_id;
    dj["title"] = d.title;
    dj["group"] = to_string(d.group);
    dj["score"] = d.score;
    dj["n_trials"] = d.n_trials;
    dj["refusals"] = d.refusals;
    docs.push_back(dj);
  }
  j["documents"] = docs;
  json ev;
  ev["auc_mean"] = report.evaluation.auc_mean;
  ev["auc_std"] = report.evaluation.auc_std;
  ev["suspect_acc_mean"] = report.evaluation.suspect_acc_mean;
  ev["suspect_acc_std"] = report.evaluation.suspect_acc_std;
  ev["clean_acc_mean"] = report.evaluation.clean_acc_mean;
  ev["clean_acc_std"] = report.evaluation.clean_acc_std;
  ev["threshold_mean"] = report.evaluation.threshold_mean;
  ev["p_value"] = report.evaluation.p_value;
  ev["p_degenerate"] = report.evaluation.p_degenerate;
  ev["iterations"] = report.evaluation.iterations;
  ev["seed"] = report.evaluation.seed;
  ev["ttest_mode"] = to_string(report.evaluation.ttest_mode);
  j["evaluation"] = ev;
  j["refusal_count"] = report.refusal_count;
  if (report.calibration) {
    json cj;
    cj["delta"] = report.calibration->vector.delta;
    cj["source_doc_count"] = report.calibration->vector.source_doc_count;
    cj["source_trial_count"] = report.calibration->vector.source_trial_count;
    if (report.calibration->well_calibrated_proportion)
      cj["well_calibrated_proportion"] = *report.calibration->well_calibrated_proportion;
    j["calibration"] = cj;
  } else {
    j["calibration"] = nullptr;
  }
  j["timestamp"] = report.timestamp;
  return j.dump(2) + "\n";
}

DetectionReport report_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(std::string("invalid report JSON: ") + e.what());
  }
  DetectionReport report;
  report.provider = j.at("provider").get<std::string>();
  report.model = j.at("model").get<std::string>();
  report.method = j.at("method").get<std::string>();
  report.direction = j.at("direction").get<std::string>() == "lower_is_member"
                         ? ScoreDirection::lower_is_member
                         : ScoreDirection::higher_is_member;
  report.config_hash = j.at("config_hash").get<std::string>();
  for (const auto& dj : j.at("documents")) {
    ReportDocument d;
    d.doc_id = dj.at("doc_id").get<std::string>();
    d.title = dj.at("title").get<std::string>();
    d.group = group_from_string(dj.at("group").get<std::string>());
    d.score = dj.at("score").get<double>();
    d.n_trials = dj.at("n_trials").get<int>();
    d.refusals = dj.at("refusals").get<int>();
    report.documents.push_back(std::move(d));
  }
  const auto& ev = j.at("evaluation");
  report.evaluation.auc_mean = ev.at("auc_mean").get<double>();
  report.evaluation.auc_std = ev.at("auc_std").get<double>();
  report.evaluation.suspect_acc_mean = ev.at("suspect_acc_mean").get<double>();
  report.evaluation.suspect_acc_std = ev.at("suspect_acc_std").get<double>();
  report.evaluation.clean_acc_mean = ev.at("clean_acc_mean").get<double>();
  report.evaluation.clean_acc_std = ev.at("clean_acc_std").get<double>();
  report.evaluation.threshold_mean = ev.at("threshold_mean").get<double>();
  report.evaluation.p_value = ev.at("p_value").get<double>();
  report.evaluation.p_degenerate = ev.at("p_degenerate").get<bool>();
  report.evaluation.iterations = ev.at("iterations").get<int>();
  report.evaluation.seed = ev.at("seed").get<std::uint64_t>();
  report.evaluation.ttest_mode = ttest_mode_from_string(ev.at("ttest_mode").get<std::string>());
  report.refusal_count = j.at("refusal_count").get<int>();
  if (!j.at("calibration").is_null()) {
    CalibrationSummary cs;
    auto delta = j.at("calibration").at("delta").get<std::vector<double>>();
    for (int k = 0; k < 4; ++k) cs.vector.delta[static_cast<std::size_t>(k)] = delta.at(static_cast<std::size_t>(k));
    cs.vector.source_doc_count = j.at("calibration").at("source_doc_count").get<int>();
    cs.vector.source_trial_count = j.at("calibration").at("source_trial_count").get<int>();
    if (j.at("calibration").contains("well_calibrated_proportion"))
      cs.well_calibrated_proportion =
          j.at("calibration").at("well_calibrated_proportion").get<double>();
    report.calibration = std::move(cs);
  }
  report.timestamp = j.at("timestamp").get<std::int64_t>();
  return report;
}

namespace {

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

std::string report_to_text(const DetectionReport& report) {
  std::ostringstream out;
  out << "=== detection report ===\n";
  out << "provider: " << report.provider << "  model: " << report.model << "\n";
  out << "method: " << report.method << "  direction: "
      << (report.direction == ScoreDirection::higher_is_member ? "higher_is_member"
                                                               : "lower_is_member")
      << "\n";
  out << "config: " << report.config_hash << "\n";
  out << "generated: " << report.timestamp << "\n";
  out << "\n";

  out << "doc_id                          group    score       trials  refusals\n";
  out << "------------------------------  -------  ----------  ------  --------\n";
  for (const auto& d : report.documents) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-30s  %-7s  %10.6f  %6d  %8d\n", d.doc_id.c_str(),
                  to_string(d.group).c_str(), d.score, d.n_trials, d.refusals);
    out << line;
  }
  out << "\n";

  const auto& ev = report.evaluation;
  out << "suspect mean: " << fmt(ev.suspect_acc_mean) << " +/- " << fmt(ev.suspect_acc_std)
      << "   clean mean: " << fmt(ev.clean_acc_mean) << " +/- " << fmt(ev.clean_acc_std) << "\n";
  out << "AUC: " << fmt(ev.auc_mean) << " +/- " << fmt(ev.auc_std)
      << "   threshold: " << fmt(ev.threshold_mean) << "\n";
  out << "p-value (" << to_string(ev.ttest_mode) << "): " << fmt(ev.p_value, "%.6g")
      << (ev.p_degenerate ? " [degenerate]" : "") << "\n";
  out << "bootstrap: " << ev.iterations << " iterations, seed " << ev.seed << "\n";
  out << "refusals: " << report.refusal_count << "\n";
  if (report.calibration) {
    const auto& cal = *report.calibration;
    out << "calibration delta: [" << fmt(cal.vector.delta[0]) << ", " << fmt(cal.vector.delta[1])
        << ", " << fmt(cal.vector.delta[2]) << ", " << fmt(cal.vector.delta[3]) << "] from "
        << cal.vector.source_doc_count << " docs / " << cal.vector.source_trial_count
        << " trials\n";
    if (cal.well_calibrated_proportion)
      out << "well calibrated (target [0.15, 0.35]): "
          << fmt(*cal.well_calibrated_proportion * 100.0, "%.1f") << "%\n";
  }
  return out.str();
}

void save_report(const DetectionReport& report, const std::string& json_path,
                 const std::string& text_path) {
  {
    std::ofstream out(json_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write report: " + json_path);
    out << report_to_json(report);
  }
  if (!text_path.empty()) {
    std::ofstream out(text_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write report: " + text_path);
    out << report_to_text(report);
  }
}

std::string strip_timestamp(const std::string& rendered) {
  std::istringstream in(rendered);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    auto pos = line.find("\"timestamp\":");
    if (pos != std::string::npos) continue;
    if (line.rfind("generated: ", 0) == 0) continue;
    out << line << '\n';
  }
  return out.str();
}

}  // namespace decop
