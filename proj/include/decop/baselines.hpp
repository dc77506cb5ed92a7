#pragma once

#include <string>
#include <vector>

#include "decop/providers.hpp"
#include "decop/types.hpp"

namespace decop {

enum class BaselineMethod { perplexity, zlib, lowercase, min_k, prefix32, prefix50, name_cloze };
enum class ScoreDirection { higher_is_member, lower_is_member };

std::string to_string(BaselineMethod m);
BaselineMethod baseline_method_from_string(const std::string& s);

/// Fixed orientation per method: low perplexity / low zlib ratio is membership
/// evidence; high lowercase ratio, high min-k mean, and high completion /
/// cloze hit rates are.
ScoreDirection direction_of(BaselineMethod m);

struct BaselineScore {
  std::string doc_id;
  BaselineMethod method = BaselineMethod::perplexity;
  double value = 0.0;
  ScoreDirection direction = ScoreDirection::higher_is_member;
};

/// exp(-mean logprob). Always >= 1 for logprobs <= 0; throws EmptySequence.
double perplexity(const std::vector<TokenLogprob>& tokens);

/// ln(ppl) divided by the zlib entropy of the text in bits (8x the byte length
/// of the zlib-compressed UTF-8 text at the default compression level).
double zlib_score(const std::string& text, double ppl);

std::size_t zlib_compressed_size(const std::string& text);

/// ln(ppl_lowercased) / ln(ppl_original); throws DegenerateLogRatio when the
/// original's perplexity is exactly 1.
double lowercase_score(double ppl_original, double ppl_lowercased);

/// Mean of the ceil(n*k/100) smallest logprobs, k in (0, 100].
double min_k_prob(const std::vector<TokenLogprob>& tokens, double k_percent);

/// Order-invariant fuzzy similarity in [0, 100]: lowercase, sort whitespace
/// tokens, rejoin, then normalized edit-distance similarity with substitution
/// cost 2. Two empty strings compare at 100.
double token_sort_ratio(const std::string& a, const std::string& b);

struct PrefixProbeOutcome {
  bool memorized = false;
  double similarity = 0.0;
  std::string completion;
};

/// Splits the passage into a prefix and suffix of `prefix_tokens` whitespace
/// words each, submits the prefix at temperature 0, and reports a hit when the
/// completion matches the suffix above 80 on the token-sort scale.
PrefixProbeOutcome prefix_probe(Provider& provider, const Passage& passage, int prefix_tokens);

struct MaskedPassage {
  std::string masked_text;
  std::vector<std::string> answers;
};

/// Masks the most plausible proper name (a capitalized non-stopword,
/// preferring tokens that also appear mid-sentence) with [MASK]; falls back to
/// the most frequent non-stopword token of >= 4 characters. Throws Unmaskable.
MaskedPassage mask_passage(const std::string& text);

/// Single fixed instruction asking for the masked word only.
std::string build_name_cloze_prompt(const std::string& masked_text);

struct NameClozeOutcome {
  bool correct = false;
  std::string expected;
  std::string reply;
};

/// Masks the passage (or uses the explicit override), asks the provider to
/// fill the blank at temperature 0, and compares case-insensitively after
/// trimming punctuation.
NameClozeOutcome name_cloze(Provider& provider, const Passage& passage,
                            const std::string& mask_override = "");

/// Document-level aggregation: mean for continuous methods, fraction of true
/// outcomes for the boolean ones.
BaselineScore baseline_document_score(BaselineMethod method, const std::string& doc_id,
                                      const std::vector<double>& per_passage_values);

}  // namespace decop
