#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "decop/providers.hpp"
#include "decop/types.hpp"

namespace decop {

enum class PromptStyle { chat, system_user };

PromptStyle prompt_style_from_string(const std::string& s);
std::string to_string(PromptStyle s);

enum class Answer { A, B, C, D, Refusal };

inline char answer_to_char(Answer a) {
  switch (a) {
    case Answer::A: return 'A';
    case Answer::B: return 'B';
    case Answer::C: return 'C';
    case Answer::D: return 'D';
    case Answer::Refusal: return '-';
  }
  return '-';
}

struct PermutationTrial {
  std::string trial_id;
  std::string passage_id;
  std::string doc_id;
  std::array<int, 4> ordering = {0, 1, 2, 3};  // source index shown at each position
  char correct_label = 'A';                    // position of source index 0
  std::array<std::string, 4> options;          // texts in presented order
  std::string prompt;                          // filled by the scoring loop
};

struct TrialResult {
  std::string trial_id;
  Answer predicted = Answer::Refusal;
  std::optional<std::array<double, 4>> label_probs;
  std::string raw_response;
  bool correct = false;
};

struct DocumentScore {
  std::string doc_id;
  int n_trials = 0;
  int n_correct = 0;
  double accuracy = 0.0;
  int refusal_count = 0;
  /// Mean observed label probability per label across trials (present only on
  /// label-prob runs); feeds the calibration check.
  std::optional<std::array<double, 4>> mean_label_probs;
};

/// All 24 orderings of an item, in lexicographic order of `ordering`; each of
/// A/B/C/D is the correct label in exactly 6 of them.
std::vector<PermutationTrial> enumerate_permutations(const MCQAItem& item);

struct McqaPrompt {
  std::string system;  // empty for PromptStyle::chat
  std::string user;
};

/// Multiple-choice evaluation prompt, byte-deterministic. chat renders one
/// message carrying the exam instruction; system_user splits the instruction
/// (plus the answer-format line) into the system text.
McqaPrompt build_mcqa_prompt(const PermutationTrial& trial, const std::string& title,
                             const std::string& author, PromptStyle style);

/// First standalone A-D token, case-insensitive; tolerates "A.", "(A)",
/// "Answer: A", "Example A". Apostrophes bind to words so "I'd" is not a D.
/// Returns Refusal when no label is found.
Answer parse_answer(const std::string& raw);

/// Sink for per-trial audit records; implementations must be thread safe.
class TranscriptWriter {
 public:
  virtual ~TranscriptWriter() = default;
  virtual void write(const PermutationTrial& trial, const TrialResult& result,
                     const std::string& model) = 0;
};

/// Appends line-delimited JSON transcript records to a file.
class FileTranscriptWriter : public TranscriptWriter {
 public:
  explicit FileTranscriptWriter(const std::string& path);
  void write(const PermutationTrial& trial, const TrialResult& result,
             const std::string& model) override;

 private:
  std::string path_;
  std::mutex mutex_;
};

struct ProbeOptions {
  PromptStyle style = PromptStyle::chat;
  int parallelism = 1;
  std::optional<std::array<double, 4>> calibration_delta;  // argmax over probs + delta
  TranscriptWriter* transcript = nullptr;
  int answer_max_tokens = 16;
};

/// Runs the full 24-permutation probe over a document's items at temperature 0
/// and aggregates accuracy. With calibration, predictions are the argmax of
/// adjusted label probabilities; otherwise the parsed text answer. Trials are
/// issued in deterministic order; results are keyed by trial so execution
/// order never affects the score.
DocumentScore score_document(Provider& provider, const std::vector<MCQAItem>& items,
                             const ProbeOptions& options = {});

}  // namespace decop
