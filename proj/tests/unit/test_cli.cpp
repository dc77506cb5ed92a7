#include <doctest.h>

#include <filesystem>

#include <nlohmann/json.hpp>

#include <cmath>

#include "decop/cli.hpp"
#include "decop/corpus.hpp"
#include "decop/errors.hpp"
#include "decop/paraphrase.hpp"
#include "decop/report.hpp"
#include "support/test_support.hpp"

using namespace decop;
using namespace decop::test;
using nlohmann::json;

namespace {

RunConfig simulated_config(const std::string& cache_dir = "") {
  RunConfig config = default_run_config();
  config.cache_dir = cache_dir;
  config.provider.kind = "simulated";
  config.provider.simulated.default_memorization = 0.6;
  config.provider.simulated.seed = 5;
  return config;
}

}  // namespace

TEST_CASE("cmd_simulate writes a full report offline") {
  TempDir dir("cli_sim");
  RunConfig config = default_run_config();
  config.simulation.suspect_docs = 4;
  config.simulation.clean_docs = 4;
  config.simulation.items_per_doc = 3;
  config.simulation.seed = 11;

  SimulateArgs args;
  args.report_json = dir.str("report.json");
  args.report_text = dir.str("report.txt");
  CHECK(cmd_simulate(config, args) == 0);
  CHECK(std::filesystem::exists(args.report_json));
  CHECK(std::filesystem::exists(args.report_text));

  auto status = json::parse(read_file(args.report_json + ".status.json"));
  CHECK(status.at("ok").get<bool>());
  CHECK(status.at("cache").at("misses").get<int>() == 0);  // no network at all

  auto report = report_from_json(read_file(args.report_json));
  CHECK(report.documents.size() == 8);
  CHECK(report.evaluation.auc_mean > 0.9);
}

TEST_CASE("extract -> paraphrase -> probe -> evaluate runs end to end offline") {
  TempDir dir("cli_pipeline");

  // two suspect and two clean documents (the t-test needs two per group)
  write_file(dir.str("old1.txt"), make_prose(160, 21));
  write_file(dir.str("old2.txt"), make_prose(160, 23));
  write_file(dir.str("new1.txt"), make_prose(160, 22));
  write_file(dir.str("new2.txt"), make_prose(160, 24));
  write_file(dir.str("manifest.jsonl"),
             R"({"doc_id":"old1","title":"Old I","author":"A","publication_year":2019,"group":"suspect","file":"old1.txt"})"
             "\n"
             R"({"doc_id":"old2","title":"Old II","author":"A","publication_year":2020,"group":"suspect","file":"old2.txt"})"
             "\n"
             R"({"doc_id":"new1","title":"New I","author":"B","publication_year":2023,"group":"clean","file":"new1.txt"})"
             "\n"
             R"({"doc_id":"new2","title":"New II","author":"B","publication_year":2024,"group":"clean","file":"new2.txt"})"
             "\n");

  RunConfig config = simulated_config();
  config.length_setting = LengthSetting::short64;
  config.passages_per_doc = 3;
  config.extract_seed = 2;

  ExtractArgs extract_args;
  extract_args.manifest = dir.str("manifest.jsonl");
  extract_args.out = dir.str("passages.jsonl");
  REQUIRE(cmd_extract(config, extract_args) == 0);
  auto passages = load_passages(dir.str("passages.jsonl"));
  CHECK(passages.size() == 12);

  // paraphrase with a callback provider: swap words deterministically so the
  // three bodies are distinct, long enough, and far from the original
  config.paraphrase_provider.kind = "simulated";
  // the simulated provider cannot paraphrase; feed cmd_paraphrase through a
  // scripted provider by calling the library path instead
  std::vector<MCQAItem> items;
  for (const auto& passage : passages) {
    ScriptedProvider provider(
        std::function<std::string(const CompletionRequest&)>([&](const CompletionRequest&) {
          auto mutate = [&](int salt) {
            auto words = passage.text;
            std::string out;
            int w = 0;
            for (char c : words) {
              if (c == ' ') {
                ++w;
                out += (w % 3 == salt) ? " thereafter" : "";
                out += ' ';
              } else {
                out += c;
              }
            }
            return out;
          };
          return "Example B: " + mutate(0) + "\nExample C: " + mutate(1) +
                 "\nExample D: " + mutate(2);
        }));
    items.push_back(generate_paraphrases(provider, passage));
  }
  save_benchmark(items, dir.str("benchmark.jsonl"));

  ProbeArgs probe_args;
  probe_args.benchmark = dir.str("benchmark.jsonl");
  probe_args.scores_out = dir.str("scores.jsonl");
  probe_args.transcripts_out = dir.str("transcripts.jsonl");
  REQUIRE(cmd_probe(config, probe_args) == 0);
  auto scores = load_scores(dir.str("scores.jsonl"));
  REQUIRE(scores.size() == 4);
  CHECK(scores[0].n_trials == 72);

  EvaluateArgs evaluate_args;
  evaluate_args.scores = {dir.str("scores.jsonl")};
  evaluate_args.report_json = dir.str("report.json");
  evaluate_args.report_text = dir.str("report.txt");
  REQUIRE(cmd_evaluate(config, evaluate_args) == 0);
  auto report = report_from_json(read_file(dir.str("report.json")));
  CHECK(report.documents.size() == 4);
}

TEST_CASE("cmd_probe reruns entirely from cache") {
  TempDir dir("cli_cache");
  auto items = make_synthetic_benchmark(2, 2, GroupLabel::suspect, 3, "doc-");
  save_benchmark(items, dir.str("benchmark.jsonl"));

  RunConfig config = simulated_config(dir.str("cache"));

  ProbeArgs args;
  args.benchmark = dir.str("benchmark.jsonl");
  args.scores_out = dir.str("scores1.jsonl");
  REQUIRE(cmd_probe(config, args) == 0);
  auto status1 = json::parse(read_file(dir.str("scores1.jsonl") + ".status.json"));
  CHECK(status1.at("cache").at("misses").get<int>() == 96);
  CHECK(status1.at("cache").at("hits").get<int>() == 0);

  args.scores_out = dir.str("scores2.jsonl");
  REQUIRE(cmd_probe(config, args) == 0);
  auto status2 = json::parse(read_file(dir.str("scores2.jsonl") + ".status.json"));
  CHECK(status2.at("cache").at("misses").get<int>() == 0);
  CHECK(status2.at("cache").at("hits").get<int>() == 96);

  CHECK(read_file(dir.str("scores1.jsonl")) == read_file(dir.str("scores2.jsonl")));
}

TEST_CASE("cmd_evaluate reports missing inputs as config errors before any work") {
  TempDir dir("cli_missing");
  RunConfig config = default_run_config();
  EvaluateArgs args;
  args.scores = {dir.str("nope.jsonl")};
  args.report_json = dir.str("report.json");
  CHECK(cmd_evaluate(config, args) == 1);
  auto status = json::parse(read_file(dir.str("report.json") + ".status.json"));
  CHECK_FALSE(status.at("ok").get<bool>());
  auto error = status.at("error").get<std::string>();
  CHECK(error.find("nope.jsonl") != std::string::npos);
}

TEST_CASE("cmd_calibrate writes a loadable vector") {
  TempDir dir("cli_cal");
  auto items = make_synthetic_benchmark(6, 2, GroupLabel::clean, 3, "cal-");
  save_benchmark(items, dir.str("benchmark.jsonl"));

  RunConfig config = default_run_config();
  config.provider.kind = "simulated";
  config.provider.simulated.default_memorization = 0.0;
  config.provider.simulated.position_bias = {0.4, 0.3, 0.2, 0.1};
  config.provider.simulated.seed = 9;

  CalibrateArgs args;
  args.benchmark = dir.str("benchmark.jsonl");
  args.out = dir.str("cal.json");
  REQUIRE(cmd_calibrate(config, args) == 0);
  auto cal = load_calibration(dir.str("cal.json"));
  CHECK(cal.delta[0] == doctest::Approx(-0.15).epsilon(1e-9));
  CHECK(cal.source_doc_count == 6);
}

TEST_CASE("cmd_baseline computes token-logprob methods against the simulated provider") {
  TempDir dir("cli_base");
  auto items = make_synthetic_benchmark(2, 2, GroupLabel::suspect, 3, "doc-");
  save_benchmark(items, dir.str("benchmark.jsonl"));

  RunConfig config = simulated_config();

  BaselineArgs args;
  args.benchmark = dir.str("benchmark.jsonl");
  args.method = "perplexity";
  args.scores_out = dir.str("ppl.jsonl");
  args.outcomes_out = dir.str("ppl_outcomes.jsonl");
  REQUIRE(cmd_baseline(config, args) == 0);
  auto scores = load_scores(dir.str("ppl.jsonl"));
  REQUIRE(scores.size() == 2);
  CHECK(scores[0].value == doctest::Approx(2.0));  // -ln 2 per token
  CHECK(scores[0].direction == ScoreDirection::lower_is_member);

  auto outcomes = read_file(dir.str("ppl_outcomes.jsonl"));
  CHECK(outcomes.find("\"method\":\"perplexity\"") != std::string::npos);

  args.method = "min_k";
  args.scores_out = dir.str("mink.jsonl");
  args.outcomes_out = "";
  REQUIRE(cmd_baseline(config, args) == 0);
  auto mink = load_scores(dir.str("mink.jsonl"));
  CHECK(mink[0].value == doctest::Approx(-std::log(2.0)));
}

TEST_CASE("run config loads from JSON with overrides") {
  TempDir dir("cli_config");
  write_file(dir.str("config.json"), R"({
    "provider": {"kind": "simulated", "simulated": {"seed": 3, "default_memorization": 0.5}},
    "cache_dir": "",
    "parallelism": 2,
    "prompt_style": "system_user",
    "length_setting": "long256",
    "passages_per_doc": 7,
    "bootstrap": {"iterations": 12, "seed": 99, "ttest_mode": "iteration_means"},
    "simulate": {"suspect_docs": 3, "clean_docs": 3, "items_per_doc": 2, "seed": 4}
  })");
  auto config = load_run_config(dir.str("config.json"));
  CHECK(config.parallelism == 2);
  CHECK(config.prompt_style == PromptStyle::system_user);
  CHECK(config.length_setting == LengthSetting::long256);
  CHECK(config.passages_per_doc == 7);
  CHECK(config.bootstrap.iterations == 12);
  CHECK(config.bootstrap.seed == 99);
  CHECK(config.bootstrap.ttest_mode == TTestMode::iteration_means);
  CHECK(config.simulation.suspect_docs == 3);
  CHECK(config.provider.simulated.default_memorization == doctest::Approx(0.5));
  CHECK_FALSE(config_hash(config).empty());

  CHECK_THROWS_AS(load_run_config(dir.str("missing.json")), ConfigError);
  write_file(dir.str("broken.json"), "{nope");
  CHECK_THROWS_AS(load_run_config(dir.str("broken.json")), ConfigError);
}
