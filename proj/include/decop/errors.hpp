#pragma once

#include <stdexcept>
#include <string>

namespace decop {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// corpus
struct EmptyAfterCleaning : Error {
  EmptyAfterCleaning() : Error("nothing survived cleaning") {}
};

struct InsufficientText : Error {
  int max_achievable;
  InsufficientText(int requested, int achievable)
      : Error("document cannot yield " + std::to_string(requested) +
              " valid passages (max achievable: " + std::to_string(achievable) + ")"),
        max_achievable(achievable) {}
};

struct SchemaError : Error {
  std::size_t record;
  std::string field;
  SchemaError(std::size_t record_number, std::string field_name, const std::string& detail)
      : Error("record " + std::to_string(record_number) + ": field '" + field_name +
              "': " + detail),
        record(record_number),
        field(std::move(field_name)) {}
};

struct DuplicateId : Error {
  std::string id;
  explicit DuplicateId(std::string duplicate)
      : Error("duplicate id: " + duplicate), id(std::move(duplicate)) {}
};

// paraphrase
struct MissingMarker : Error {
  char which;
  explicit MissingMarker(char label)
      : Error(std::string("response is missing marker 'Example ") + label + ":'"), which(label) {}
};

struct EmptyParaphrase : Error {
  char which;
  explicit EmptyParaphrase(char label)
      : Error(std::string("empty paraphrase body for 'Example ") + label + ":'"), which(label) {}
};

struct ParaphraseFailure : Error {
  std::string last_response;
  ParaphraseFailure(int attempts, std::string last)
      : Error("paraphrase generation failed after " + std::to_string(attempts) + " attempts"),
        last_response(std::move(last)) {}
};

// providers
struct RateLimited : Error {
  using Error::Error;
};
struct AuthError : Error {
  using Error::Error;
};
struct TransportError : Error {
  using Error::Error;
};
struct MissingLogprobs : Error {
  using Error::Error;
};
struct Unsupported : Error {
  using Error::Error;
};

struct ProviderError : Error {
  std::string trial_id;
  ProviderError(const std::string& trial, const std::string& detail)
      : Error("trial " + trial + ": " + detail), trial_id(trial) {}
};

// calibration
struct InsufficientCleanDocs : Error {
  InsufficientCleanDocs(std::size_t got, std::size_t minimum)
      : Error("calibration needs at least " + std::to_string(minimum) +
              " clean documents, got " + std::to_string(got)) {}
};

// baselines
struct EmptySequence : Error {
  EmptySequence() : Error("empty token sequence") {}
};
struct DegenerateLogRatio : Error {
  DegenerateLogRatio() : Error("ln(ppl_original) is zero; ratio undefined") {}
};
struct PassageTooShort : Error {
  PassageTooShort(std::size_t words, std::size_t needed)
      : Error("passage has " + std::to_string(words) + " words, prefix/suffix split needs " +
              std::to_string(needed)) {}
};
struct Unmaskable : Error {
  Unmaskable() : Error("text contains only stopwords; nothing to mask") {}
};

// stats
struct EmptyGroup : Error {
  EmptyGroup() : Error("score group is empty") {}
};

// cli
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace decop
