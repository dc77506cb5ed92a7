#include <doctest.h>

#include <cmath>
#include <random>

#include "decop/calibration.hpp"
#include "decop/errors.hpp"
#include "decop/probe.hpp"
#include "decop/simulate.hpp"
#include "support/test_support.hpp"

using namespace decop;
using namespace decop::test;

namespace {

/// Provider that reports the same label probabilities for every trial.
class ConstantProbsProvider : public Provider {
 public:
  explicit ConstantProbsProvider(std::array<double, 4> probs) : probs_(probs) {}
  std::string name() const override { return "constant"; }
  std::string model() const override { return "constant-1"; }
  ProviderCapabilities capabilities() const override { return {true, true, false}; }
  std::string complete(const CompletionRequest&) override { return "A"; }
  std::array<double, 4> label_probs(const CompletionRequest&) override { return probs_; }

 private:
  std::array<double, 4> probs_;
};

std::vector<MCQAItem> clean_items(int docs, int items_per_doc) {
  return make_synthetic_benchmark(docs, items_per_doc, GroupLabel::clean, 7, "cal-");
}

}  // namespace

TEST_CASE("uniform label probabilities calibrate to zero adjustments") {
  ConstantProbsProvider provider({0.25, 0.25, 0.25, 0.25});
  auto result = compute_calibration(provider, clean_items(6, 2), PromptStyle::chat);
  for (double d : result.vector.delta) CHECK(d == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(result.vector.source_doc_count == 6);
  CHECK(result.vector.source_trial_count == 6 * 2 * 24);
}

TEST_CASE("constant biased probabilities give delta = 0.25 - mean") {
  ConstantProbsProvider provider({0.55, 0.15, 0.15, 0.15});
  auto result = compute_calibration(provider, clean_items(6, 2), PromptStyle::chat);
  CHECK(result.vector.delta[0] == doctest::Approx(-0.30).epsilon(1e-12));
  CHECK(result.vector.delta[1] == doctest::Approx(0.10).epsilon(1e-12));
  CHECK(result.vector.delta[2] == doctest::Approx(0.10).epsilon(1e-12));
  CHECK(result.vector.delta[3] == doctest::Approx(0.10).epsilon(1e-12));
}

TEST_CASE("simulated biased provider recovers 0.25 - bias") {
  SimulatedModelConfig config;
  config.default_memorization = 0.0;
  config.position_bias = {0.4, 0.3, 0.2, 0.1};
  config.seed = 17;
  SimulatedProvider provider(config);
  auto result = compute_calibration(provider, clean_items(30, 10), PromptStyle::chat);
  CHECK(result.vector.delta[0] == doctest::Approx(-0.15).epsilon(0.02));
  CHECK(result.vector.delta[1] == doctest::Approx(-0.05).epsilon(0.02));
  CHECK(result.vector.delta[2] == doctest::Approx(0.05).epsilon(0.02));
  CHECK(result.vector.delta[3] == doctest::Approx(0.15).epsilon(0.02));
}

TEST_CASE("delta is always zero-sum and inside [-0.75, 0.25]") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::array<double, 4> probs{};
    double total = 0;
    for (auto& p : probs) {
      p = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
      total += p;
    }
    for (auto& p : probs) p /= total;
    ConstantProbsProvider provider(probs);
    auto result = compute_calibration(provider, clean_items(5, 1), PromptStyle::chat);
    double sum = 0;
    for (double d : result.vector.delta) {
      sum += d;
      CHECK(d >= -0.75);
      CHECK(d <= 0.25);
    }
    CHECK(std::abs(sum) < 1e-9);
  }
}

TEST_CASE("too few clean documents is an error; below recommended warns") {
  ConstantProbsProvider provider({0.25, 0.25, 0.25, 0.25});
  CHECK_THROWS_AS(compute_calibration(provider, clean_items(4, 1), PromptStyle::chat),
                  InsufficientCleanDocs);
  auto result = compute_calibration(provider, clean_items(5, 1), PromptStyle::chat);
  REQUIRE(result.warnings.size() == 1);
  CHECK(result.warnings[0].find("30 recommended") != std::string::npos);
}

TEST_CASE("calibration rejects suspect documents") {
  ConstantProbsProvider provider({0.25, 0.25, 0.25, 0.25});
  auto items = make_synthetic_benchmark(6, 1, GroupLabel::suspect, 3, "sus-");
  CHECK_THROWS_AS(compute_calibration(provider, items, PromptStyle::chat), Error);
}

TEST_CASE("apply_calibration breaks ties toward A and shifts argmax") {
  auto tie = apply_calibration({0.25, 0.25, 0.25, 0.25}, {0, 0, 0, 0});
  CHECK(tie.predicted == 'A');

  auto shifted = apply_calibration({0.4, 0.3, 0.2, 0.1}, {-0.2, 0, 0, 0});
  CHECK(shifted.adjusted[0] == doctest::Approx(0.2));
  CHECK(shifted.predicted == 'B');
}

TEST_CASE("a certain answer survives any valid calibration") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    // deltas of the form 0.25 - normalized bias stay within [-0.75, 0.25]
    std::array<double, 4> bias{};
    double total = 0;
    for (auto& b : bias) {
      b = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      total += b;
    }
    std::array<double, 4> delta{};
    for (int k = 0; k < 4; ++k) delta[static_cast<std::size_t>(k)] = 0.25 - bias[static_cast<std::size_t>(k)] / total;
    int correct = static_cast<int>(rng() % 4);
    std::array<double, 4> onehot{};
    onehot[static_cast<std::size_t>(correct)] = 1.0;
    auto applied = apply_calibration(onehot, delta);
    CHECK(applied.predicted == static_cast<char>('A' + correct));
  }
}

TEST_CASE("zero delta never changes the argmax") {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    std::array<double, 4> probs{};
    double total = 0;
    for (auto& p : probs) {
      p = std::uniform_real_distribution<double>(0.001, 1.0)(rng);
      total += p;
    }
    for (auto& p : probs) p /= total;
    int argmax = 0;
    for (int k = 1; k < 4; ++k)
      if (probs[static_cast<std::size_t>(k)] > probs[static_cast<std::size_t>(argmax)]) argmax = k;
    auto applied = apply_calibration(probs, {0, 0, 0, 0});
    CHECK(applied.predicted == static_cast<char>('A' + argmax));
  }
}

TEST_CASE("check_calibration applies the [0.15, 0.35] band per document") {
  CHECK(check_calibration({{0.25, 0.25, 0.25, 0.25}}).well_calibrated[0]);
  CHECK_FALSE(check_calibration({{0.40, 0.20, 0.20, 0.20}}).well_calibrated[0]);
  auto check = check_calibration({{0.25, 0.25, 0.25, 0.25},
                                  {0.40, 0.20, 0.20, 0.20},
                                  {0.15, 0.35, 0.25, 0.25},
                                  {0.30, 0.30, 0.20, 0.20}});
  CHECK(check.proportion == doctest::Approx(0.75));
}

TEST_CASE("calibrated biased provider passes the band check on fresh documents") {
  SimulatedModelConfig config;
  config.default_memorization = 0.0;
  config.position_bias = {0.4, 0.3, 0.2, 0.1};
  config.seed = 21;
  SimulatedProvider provider(config);
  auto calibration = compute_calibration(provider, clean_items(30, 5), PromptStyle::chat);

  auto fresh = make_synthetic_benchmark(60, 5, GroupLabel::clean, 99, "fresh-");
  auto check_result = compute_calibration(provider, fresh, PromptStyle::chat);
  std::vector<std::array<double, 4>> adjusted;
  for (const auto& doc : check_result.per_doc_means) {
    auto a = doc.means;
    for (int k = 0; k < 4; ++k)
      a[static_cast<std::size_t>(k)] += calibration.vector.delta[static_cast<std::size_t>(k)];
    adjusted.push_back(a);
  }
  auto check = check_calibration(adjusted);
  CHECK(check.proportion >= 0.90);
}

TEST_CASE("calibration vector round-trips through disk") {
  TempDir dir("cal");
  CalibrationVector cal;
  cal.delta = {-0.15, -0.05, 0.05, 0.15};
  cal.source_doc_count = 30;
  cal.source_trial_count = 7200;
  save_calibration(cal, "model-x", dir.str("cal.json"));
  auto loaded = load_calibration(dir.str("cal.json"));
  for (int k = 0; k < 4; ++k)
    CHECK(loaded.delta[static_cast<std::size_t>(k)] == doctest::Approx(cal.delta[static_cast<std::size_t>(k)]));
  CHECK(loaded.source_doc_count == 30);
  CHECK(loaded.source_trial_count == 7200);
}

TEST_CASE("loading rejects invalid calibration vectors") {
  TempDir dir("cal_bad");
  write_file(dir.str("bad_sum.json"), R"({"delta":[0.1,0.1,0.1,0.1],"model":"m"})");
  CHECK_THROWS_AS(load_calibration(dir.str("bad_sum.json")), Error);
  write_file(dir.str("bad_range.json"), R"({"delta":[-0.9,0.3,0.3,0.3],"model":"m"})");
  CHECK_THROWS_AS(load_calibration(dir.str("bad_range.json")), Error);
}

TEST_CASE("knowledge preservation: a perfect memorizer stays perfect under calibration") {
  SimulatedModelConfig config;
  config.default_memorization = 1.0;
  config.position_bias = {0.4, 0.3, 0.2, 0.1};
  config.seed = 31;
  SimulatedProvider provider(config);
  auto items = make_synthetic_benchmark(1, 10, GroupLabel::suspect, 3, "mem-");
  ProbeOptions options;
  options.calibration_delta = std::array<double, 4>{-0.15, -0.05, 0.05, 0.15};
  auto score = score_document(provider, items, options);
  CHECK(score.accuracy == 1.0);
}
