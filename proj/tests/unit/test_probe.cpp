#include <doctest.h>

#include <map>
#include <set>

#include "decop/errors.hpp"
#include "decop/probe.hpp"
#include "support/test_support.hpp"

using namespace decop;
using namespace decop::test;

TEST_CASE("enumerate_permutations yields 24 distinct lexicographic orderings") {
  auto item = make_item("p1", "d1");
  auto trials = enumerate_permutations(item);
  REQUIRE(trials.size() == 24);

  std::set<std::array<int, 4>> seen;
  std::map<char, int> histogram;
  for (const auto& t : trials) {
    seen.insert(t.ordering);
    ++histogram[t.correct_label];
  }
  CHECK(seen.size() == 24);
  CHECK(histogram['A'] == 6);
  CHECK(histogram['B'] == 6);
  CHECK(histogram['C'] == 6);
  CHECK(histogram['D'] == 6);

  // lexicographic order
  CHECK(std::is_sorted(trials.begin(), trials.end(),
                       [](const auto& a, const auto& b) { return a.ordering < b.ordering; }));

  // identity ordering puts the original at A
  CHECK(trials.front().ordering == std::array<int, 4>{0, 1, 2, 3});
  CHECK(trials.front().correct_label == 'A');
  CHECK(trials.front().options[0] == item.original);

  // ordering (2,3,0,1) puts the original at position 2 -> label C
  for (const auto& t : trials) {
    if (t.ordering == std::array<int, 4>{2, 3, 0, 1}) {
      CHECK(t.correct_label == 'C');
      CHECK(t.options[2] == item.original);
    }
  }
}

TEST_CASE("mcqa prompts match the golden fixtures") {
  auto item = make_item("p1", "d1");
  auto trials = enumerate_permutations(item);
  const auto& identity = trials.front();

  auto chat = build_mcqa_prompt(identity, item.title, item.author, PromptStyle::chat);
  CHECK(chat.system.empty());
  CHECK(chat.user == read_file(fixture_path("golden_mcqa_chat.txt")));

  auto split = build_mcqa_prompt(identity, item.title, item.author, PromptStyle::system_user);
  CHECK(split.system == read_file(fixture_path("golden_mcqa_system.txt")));
  CHECK(split.user == read_file(fixture_path("golden_mcqa_user.txt")));

  std::string suffix = "Format your answer as '<put correct answer here>'.";
  CHECK(split.system.substr(split.system.size() - suffix.size()) == suffix);
}

TEST_CASE("two orderings differ only in their option lines") {
  auto item = make_item("p1", "d1");
  auto trials = enumerate_permutations(item);
  auto a = build_mcqa_prompt(trials[0], item.title, item.author, PromptStyle::chat).user;
  auto b = build_mcqa_prompt(trials[5], item.title, item.author, PromptStyle::chat).user;
  CHECK(a != b);
  auto strip_options = [](const std::string& s) {
    std::string out;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) {
      if (line.size() > 2 && line[1] == '.' && line[0] >= 'A' && line[0] <= 'D') continue;
      out += line + "\n";
    }
    return out;
  };
  CHECK(strip_options(a) == strip_options(b));
}

TEST_CASE("parse_answer tolerates common answer shapes") {
  CHECK(parse_answer("B") == Answer::B);
  CHECK(parse_answer("b") == Answer::B);
  CHECK(parse_answer("A.") == Answer::A);
  CHECK(parse_answer("(A)") == Answer::A);
  CHECK(parse_answer("Answer: A") == Answer::A);
  CHECK(parse_answer("Example A") == Answer::A);
  CHECK(parse_answer("The correct answer is (C).") == Answer::C);
  CHECK(parse_answer("I'd say B") == Answer::B);
  CHECK(parse_answer("I cannot reproduce copyrighted text.") == Answer::Refusal);
  CHECK(parse_answer("") == Answer::Refusal);
}

namespace {

std::vector<MCQAItem> make_items(int n, const std::string& doc_id) {
  std::vector<MCQAItem> items;
  for (int i = 0; i < n; ++i) {
    auto item = make_item("p" + std::to_string(i), doc_id);
    item.original += " (" + std::to_string(i) + ")";
    items.push_back(std::move(item));
  }
  return items;
}

SimulatedProvider make_sim(double m, std::array<double, 4> bias, std::uint64_t seed,
                           const std::string& doc_id = "d1") {
  SimulatedModelConfig config;
  config.doc_memorization[doc_id] = m;
  config.position_bias = bias;
  config.seed = seed;
  return SimulatedProvider(config);
}

}  // namespace

TEST_CASE("a perfect memorizer scores 1.0") {
  auto provider = make_sim(1.0, {0.25, 0.25, 0.25, 0.25}, 1);
  auto items = make_items(30, "d1");
  auto score = score_document(provider, items);
  CHECK(score.accuracy == 1.0);
  CHECK(score.n_trials == 720);
  CHECK(score.n_correct == 720);
  CHECK(score.refusal_count == 0);
}

TEST_CASE("a uniform random responder scores near 0.25") {
  auto provider = make_sim(0.0, {0.25, 0.25, 0.25, 0.25}, 99);
  auto items = make_items(30, "d1");
  auto score = score_document(provider, items);
  CHECK(score.n_trials == 720);
  CHECK(score.accuracy == doctest::Approx(0.25).epsilon(0.2));
  CHECK(std::abs(score.accuracy - 0.25) <= 0.05);
}

TEST_CASE("fixed-position responders score exactly 0.25") {
  for (int pos = 0; pos < 4; ++pos) {
    std::array<double, 4> bias{};
    bias[static_cast<std::size_t>(pos)] = 1.0;
    auto provider = make_sim(0.0, bias, 7);
    auto items = make_items(5, "d1");
    auto score = score_document(provider, items);
    CHECK(score.accuracy == 0.25);  // exact: 6 of every 24 permutations
    CHECK(score.n_correct == 30);
  }
}

TEST_CASE("score_document is invariant to worker count") {
  auto items = make_items(8, "d1");
  auto p1 = make_sim(0.4, {0.4, 0.3, 0.2, 0.1}, 5);
  auto p4 = make_sim(0.4, {0.4, 0.3, 0.2, 0.1}, 5);
  ProbeOptions serial;
  serial.parallelism = 1;
  ProbeOptions parallel;
  parallel.parallelism = 4;
  auto a = score_document(p1, items, serial);
  auto b = score_document(p4, items, parallel);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.n_correct == b.n_correct);
  CHECK(a.refusal_count == b.refusal_count);
}

TEST_CASE("score_document rejects mixed documents") {
  auto items = make_items(2, "d1");
  items[1].doc_id = "d2";
  auto provider = make_sim(1.0, {0.25, 0.25, 0.25, 0.25}, 1);
  CHECK_THROWS_AS(score_document(provider, items), Error);
}

TEST_CASE("refusals count as incorrect") {
  ScriptedProvider provider(
      std::function<std::string(const CompletionRequest&)>([](const CompletionRequest&) {
        return "I cannot help with that.";
      }));
  auto items = make_items(1, "d1");
  auto score = score_document(provider, items);
  CHECK(score.accuracy == 0.0);
  CHECK(score.refusal_count == 24);
}

TEST_CASE("transcripts carry one record per trial") {
  TempDir dir("transcripts");
  auto provider = make_sim(1.0, {0.25, 0.25, 0.25, 0.25}, 1);
  auto items = make_items(2, "d1");
  FileTranscriptWriter writer(dir.str("t.jsonl"));
  ProbeOptions options;
  options.transcript = &writer;
  score_document(provider, items, options);

  auto content = read_file(dir.str("t.jsonl"));
  int lines = 0;
  for (char c : content)
    if (c == '\n') ++lines;
  CHECK(lines == 48);
  CHECK(content.find("\"trial_id\"") != std::string::npos);
  CHECK(content.find("\"ordering\"") != std::string::npos);
  CHECK(content.find("\"correct_label\"") != std::string::npos);
  CHECK(content.find("\"predicted_label\"") != std::string::npos);
  CHECK(content.find("\"model\"") != std::string::npos);
}
