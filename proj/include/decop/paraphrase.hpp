#pragma once

#include <array>
#include <string>

#include "decop/providers.hpp"
#include "decop/types.hpp"

namespace decop {

/// Paraphrasing prompt for the passage's length setting. short64/medium128
/// use the three-paraphrases template; long256 uses the rewrite-everything
/// variant (the short template truncates long inputs). Byte-deterministic.
std::string build_paraphrase_prompt(const Passage& passage);

/// Extracts the bodies following "Example B:", "Example C:", "Example D:" in
/// that order, trimming surrounding whitespace. Prose before the first marker
/// is tolerated. Throws MissingMarker / EmptyParaphrase.
std::array<std::string, 3> parse_paraphrase_response(const std::string& response);

struct ParaphraseOptions {
  int max_attempts = 3;  // total provider calls budget
  double temperature = 0.1;
  /// Quality gate: reject near-copies closer than this normalized edit
  /// distance to the original.
  double min_edit_distance = 0.15;
  std::string paraphrase_model;  // recorded in item metadata
};

/// Calls the provider with the built prompt, parses and validates; retries the
/// same prompt on parse/validation failure up to the attempt budget. Throws
/// ParaphraseFailure (carrying the last raw response) when exhausted.
MCQAItem generate_paraphrases(Provider& provider, const Passage& passage,
                              const ParaphraseOptions& options = {});

}  // namespace decop
