#include "decop/simulate.hpp"

#include <array>

#include "decop/errors.hpp"
#include "decop/rng.hpp"

namespace decop {

namespace {

constexpr std::array<const char*, 40> kLexicon = {
    "river",   "stone",  "lantern", "meadow", "harbor",  "winter",  "garden", "letter",
    "window",  "shadow", "market",  "bridge", "evening", "morning", "copper", "silver",
    "anchor",  "forest", "candle",  "valley", "hollow",  "summer",  "temple", "castle",
    "autumn",  "orchard","harvest", "thunder","quiet",   "golden",  "narrow", "distant",
    "weary",   "bright", "ancient", "gentle", "crooked", "silent",  "amber",  "violet"};

std::string synth_sentence(Rng& rng, int words) {
  std::string s;
  for (int w = 0; w < words; ++w) {
    if (w) s.push_back(' ');
    s += kLexicon[static_cast<std::size_t>(rng.next_below(kLexicon.size()))];
  }
  s.push_back('.');
  return s;
}

}  // namespace

std::vector<MCQAItem> make_synthetic_benchmark(int n_docs, int items_per_doc, GroupLabel group,
                                               std::uint64_t seed, const std::string& doc_prefix) {
  std::vector<MCQAItem> items;
  Rng rng(seed);
  for (int d = 0; d < n_docs; ++d) {
    std::string doc_id = doc_prefix + std::to_string(d);
    for (int i = 0; i < items_per_doc; ++i) {
      MCQAItem item;
      item.doc_id = doc_id;
      item.passage_id = doc_id + "-p" + std::to_string(i);
      item.title = "Synthetic Volume " + std::to_string(d);
      item.author = "Nobody in Particular";
      item.group = group;
      item.length_setting = LengthSetting::short64;
      item.original = synth_sentence(rng, 12);
      for (int p = 0; p < 3; ++p) {
        std::string variant = synth_sentence(rng, 12);
        // regenerate on the (vanishingly rare) collision
        while (variant == item.original || variant == item.paraphrases[0] ||
               variant == item.paraphrases[1])
          variant = synth_sentence(rng, 12);
        item.paraphrases[static_cast<std::size_t>(p)] = variant;
      }
      validate_item(item);
      items.push_back(std::move(item));
    }
  }
  return items;
}

SimulationOutcome run_simulation(const SimulationConfig& config, const std::string& config_hash) {
  SimulationOutcome outcome;

  auto suspect_items = make_synthetic_benchmark(config.suspect_docs, config.items_per_doc,
                                                GroupLabel::suspect, config.seed ^ 0x5u, "suspect-");
  auto clean_items = make_synthetic_benchmark(config.clean_docs, config.items_per_doc,
                                              GroupLabel::clean, config.seed ^ 0xcu, "clean-");

  SimulatedModelConfig model;
  model.seed = config.seed;
  model.position_bias = config.position_bias;
  for (int d = 0; d < config.suspect_docs; ++d)
    model.doc_memorization["suspect-" + std::to_string(d)] = config.memorization_suspect;
  for (int d = 0; d < config.clean_docs; ++d)
    model.doc_memorization["clean-" + std::to_string(d)] = config.memorization_clean;

  ProbeOptions probe_options;
  probe_options.style = config.style;
  probe_options.parallelism = config.parallelism;

  std::optional<CalibrationSummary> calibration_summary;
  if (config.calibrate) {
    auto calib_items =
        make_synthetic_benchmark(config.calibration_docs, config.calibration_items_per_doc,
                                 GroupLabel::clean, config.seed ^ 0xca1u, "calib-");
    SimulatedModelConfig calib_model = model;
    for (int d = 0; d < config.calibration_docs; ++d)
      calib_model.doc_memorization["calib-" + std::to_string(d)] = config.memorization_clean;
    SimulatedProvider calib_provider(calib_model);
    auto calibration = compute_calibration(calib_provider, calib_items, config.style,
                                           CalibrationOptions{5, 30, config.parallelism});
    // Appendix-style success check on the calibration documents themselves.
    std::vector<std::array<double, 4>> adjusted;
    for (const auto& doc : calibration.per_doc_means) {
      auto a = doc.means;
      for (int k = 0; k < 4; ++k)
        a[static_cast<std::size_t>(k)] += calibration.vector.delta[static_cast<std::size_t>(k)];
      adjusted.push_back(a);
    }
    auto check = check_calibration(adjusted);
    calibration_summary = CalibrationSummary{calibration.vector, check.proportion};
    probe_options.calibration_delta = calibration.vector.delta;
    outcome.calibration = std::move(calibration);
  }

  SimulatedProvider provider(model);

  auto score_group = [&](const std::vector<MCQAItem>& items, int n_docs, const std::string& prefix,
                         std::vector<DocumentScore>& scores) {
    for (int d = 0; d < n_docs; ++d) {
      std::string doc_id = prefix + std::to_string(d);
      std::vector<MCQAItem> doc_items;
      for (const auto& item : items)
        if (item.doc_id == doc_id) doc_items.push_back(item);
      scores.push_back(score_document(provider, doc_items, probe_options));
    }
  };
  score_group(suspect_items, config.suspect_docs, "suspect-", outcome.suspect_scores);
  score_group(clean_items, config.clean_docs, "clean-", outcome.clean_scores);

  GroupScores groups;
  groups.direction = ScoreDirection::higher_is_member;
  for (const auto& s : outcome.suspect_scores) groups.suspect.push_back({s.doc_id, s.accuracy});
  for (const auto& s : outcome.clean_scores) groups.clean.push_back({s.doc_id, s.accuracy});

  BootstrapOptions bootstrap;
  bootstrap.iterations = config.bootstrap_iterations;
  bootstrap.seed = config.seed;
  bootstrap.ttest_mode = config.ttest_mode;
  auto evaluation = bootstrap_evaluate(groups, bootstrap);

  std::vector<ReportDocument> docs;
  auto add_docs = [&](const std::vector<DocumentScore>& scores, GroupLabel group) {
    for (const auto& s : scores) {
      ReportDocument d;
      d.doc_id = s.doc_id;
      d.title = "Synthetic Volume";
      d.group = group;
      d.score = s.accuracy;
      d.n_trials = s.n_trials;
      d.refusals = s.refusal_count;
      docs.push_back(std::move(d));
    }
  };
  add_docs(outcome.suspect_scores, GroupLabel::suspect);
  add_docs(outcome.clean_scores, GroupLabel::clean);

  outcome.report = make_report("simulated", "simulated", "decop", ScoreDirection::higher_is_member,
                               config_hash, std::move(docs), evaluation, calibration_summary);
  return outcome;
}

}  // namespace decop
