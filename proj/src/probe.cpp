#include "decop/probe.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "decop/calibration.hpp"
#include "decop/errors.hpp"

namespace decop {

using nlohmann::json;

PromptStyle prompt_style_from_string(const std::string& s) {
  if (s == "chat") return PromptStyle::chat;
  if (s == "system_user") return PromptStyle::system_user;
  throw Error("unknown prompt style: " + s);
}

std::string to_string(PromptStyle s) { return s == PromptStyle::chat ? "chat" : "system_user"; }

std::vector<PermutationTrial> enumerate_permutations(const MCQAItem& item) {
  std::array<int, 4> ordering = {0, 1, 2, 3};
  std::vector<PermutationTrial> trials;
  trials.reserve(24);
  int index = 0;
  do {
    PermutationTrial trial;
    trial.passage_id = item.passage_id;
    trial.doc_id = item.doc_id;
    trial.ordering = ordering;
    char id[16];
    std::snprintf(id, sizeof(id), "#%02d", index);
    trial.trial_id = item.passage_id + id;
    for (int pos = 0; pos < 4; ++pos) {
      int source = ordering[static_cast<std::size_t>(pos)];
      trial.options[static_cast<std::size_t>(pos)] =
          source == 0 ? item.original : item.paraphrases[static_cast<std::size_t>(source - 1)];
      if (source == 0) trial.correct_label = static_cast<char>('A' + pos);
    }
    trials.push_back(std::move(trial));
    ++index;
  } while (std::next_permutation(ordering.begin(), ordering.end()));
  return trials;
}

namespace {

constexpr const char* kExamInstruction =
    "You are entering a multiple choice questions exam. You should directly answer each "
    "question by choosing the correct option. Be concise and straight to the point in your "
    "answer. Output only the letter corresponding to the correct answer.";

constexpr const char* kAnswerFormat = "Format your answer as '<put correct answer here>'.";

std::string question_block(const PermutationTrial& trial, const std::string& title,
                           const std::string& author) {
  std::string q;
  q += "Question: Which of the following passages is verbatim from the \"" + title +
       "\" book by " + author + "?\n";
  q += "Options:\n";
  for (int pos = 0; pos < 4; ++pos) {
    q += static_cast<char>('A' + pos);
    q += ". ";
    q += trial.options[static_cast<std::size_t>(pos)];
    q += "\n";
  }
  q += "Answer:";
  return q;
}

}  // namespace

McqaPrompt build_mcqa_prompt(const PermutationTrial& trial, const std::string& title,
                             const std::string& author, PromptStyle style) {
  McqaPrompt prompt;
  if (style == PromptStyle::chat) {
    prompt.user = std::string(kExamInstruction) + "\n" + question_block(trial, title, author);
  } else {
    prompt.system = std::string(kExamInstruction) + "\n\n" + kAnswerFormat;
    prompt.user = question_block(trial, title, author);
  }
  return prompt;
}

Answer parse_answer(const std::string& raw) {
  // Apostrophes and any multi-byte UTF-8 sequence bind to the word, so
  // contractions like "I'd" never read as an answer of D.
  auto is_word_char = [](unsigned char c) {
    return std::isalnum(c) != 0 || c == '\'' || c >= 0x80;
  };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    char c = raw[i];
    char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (upper < 'A' || upper > 'D') continue;
    bool left_ok = (i == 0) || !is_word_char(static_cast<unsigned char>(raw[i - 1]));
    bool right_ok = (i + 1 >= raw.size()) || !is_word_char(static_cast<unsigned char>(raw[i + 1]));
    if (left_ok && right_ok) return static_cast<Answer>(upper - 'A');
  }
  return Answer::Refusal;
}

FileTranscriptWriter::FileTranscriptWriter(const std::string& path) : path_(path) {
  std::ofstream out(path_, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open transcript file: " + path_);
}

void FileTranscriptWriter::write(const PermutationTrial& trial, const TrialResult& result,
                                 const std::string& model) {
  json j;
  j["trial_id"] = trial.trial_id;
  j["passage_id"] = trial.passage_id;
  j["ordering"] = trial.ordering;
  j["correct_label"] = std::string(1, trial.correct_label);
  j["predicted_label"] = result.predicted == Answer::Refusal
                             ? "REFUSAL"
                             : std::string(1, answer_to_char(result.predicted));
  if (result.label_probs) j["label_probs"] = *result.label_probs;
  j["raw_response"] = result.raw_response;
  j["model"] = model;
  j["timestamp"] = static_cast<std::int64_t>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  out << j.dump() << '\n';
}

DocumentScore score_document(Provider& provider, const std::vector<MCQAItem>& items,
                             const ProbeOptions& options) {
  if (items.empty()) throw Error("score_document needs at least one item");
  const std::string doc_id = items.front().doc_id;
  for (const auto& item : items) {
    if (item.doc_id != doc_id)
      throw Error("score_document items span documents: " + doc_id + " vs " + item.doc_id);
  }
  if (!provider.capabilities().chat) throw Unsupported("scoring needs a chat provider");
  const bool calibrated = options.calibration_delta.has_value();
  if (calibrated && !provider.capabilities().label_probs)
    throw Unsupported("calibrated scoring needs label probabilities");

  std::vector<PermutationTrial> trials;
  std::vector<const MCQAItem*> trial_items;
  for (const auto& item : items) {
    for (auto& trial : enumerate_permutations(item)) {
      auto prompt = build_mcqa_prompt(trial, item.title, item.author, options.style);
      trial.prompt = prompt.system.empty() ? prompt.user : prompt.system + "\n\n" + prompt.user;
      trials.push_back(std::move(trial));
      trial_items.push_back(&item);
    }
  }

  std::vector<TrialResult> results(trials.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto run_trial = [&](std::size_t idx) {
    const auto& trial = trials[idx];
    const MCQAItem* item = trial_items[idx];
    auto prompt = build_mcqa_prompt(trial, item->title, item->author, options.style);
    CompletionRequest request;
    request.system = prompt.system;
    request.user = prompt.user;
    request.temperature = 0.0;
    request.max_tokens = options.answer_max_tokens;
    request.trial = TrialRef{trial.trial_id, trial.doc_id, trial.correct_label};

    TrialResult result;
    result.trial_id = trial.trial_id;
    try {
      if (calibrated) {
        try {
          auto probs = provider.label_probs(request);
          result.label_probs = probs;
          auto applied = apply_calibration(probs, *options.calibration_delta);
          result.predicted = static_cast<Answer>(applied.predicted - 'A');
          result.raw_response = std::string(1, applied.predicted);
        } catch (const MissingLogprobs& e) {
          result.predicted = Answer::Refusal;  // scored as incorrect
          result.raw_response = e.what();
        }
      } else {
        result.raw_response = provider.complete(request);
        result.predicted = parse_answer(result.raw_response);
      }
    } catch (const AuthError&) {
      throw;
    } catch (const Error& e) {
      throw ProviderError(trial.trial_id, e.what());
    }
    result.correct =
        result.predicted != Answer::Refusal && answer_to_char(result.predicted) == trial.correct_label;
    results[idx] = std::move(result);
  };

  auto worker = [&] {
    for (;;) {
      std::size_t idx = next.fetch_add(1);
      if (idx >= trials.size()) return;
      {
        std::lock_guard lock(error_mutex);
        if (first_error) return;
      }
      try {
        run_trial(idx);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  int workers = std::max(1, options.parallelism);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  DocumentScore score;
  score.doc_id = doc_id;
  score.n_trials = static_cast<int>(trials.size());
  std::array<double, 4> prob_sums{};
  int prob_trials = 0;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& r = results[i];
    if (r.correct) ++score.n_correct;
    if (r.predicted == Answer::Refusal) ++score.refusal_count;
    if (r.label_probs) {
      for (int k = 0; k < 4; ++k)
        prob_sums[static_cast<std::size_t>(k)] += (*r.label_probs)[static_cast<std::size_t>(k)];
      ++prob_trials;
    }
    if (options.transcript) options.transcript->write(trials[i], r, provider.model());
  }
  score.accuracy = static_cast<double>(score.n_correct) / static_cast<double>(score.n_trials);
  if (prob_trials > 0) {
    std::array<double, 4> means{};
    for (int k = 0; k < 4; ++k)
      means[static_cast<std::size_t>(k)] = prob_sums[static_cast<std::size_t>(k)] / prob_trials;
    score.mean_label_probs = means;
  }
  return score;
}

}  // namespace decop
