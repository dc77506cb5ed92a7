#include "decop/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <zlib.h>

#include "decop/errors.hpp"

namespace decop {

std::string to_string(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::perplexity: return "perplexity";
    case BaselineMethod::zlib: return "zlib";
    case BaselineMethod::lowercase: return "lowercase";
    case BaselineMethod::min_k: return "min_k";
    case BaselineMethod::prefix32: return "prefix32";
    case BaselineMethod::prefix50: return "prefix50";
    case BaselineMethod::name_cloze: return "name_cloze";
  }
  std::abort();
}

BaselineMethod baseline_method_from_string(const std::string& s) {
  if (s == "perplexity") return BaselineMethod::perplexity;
  if (s == "zlib") return BaselineMethod::zlib;
  if (s == "lowercase") return BaselineMethod::lowercase;
  if (s == "min_k") return BaselineMethod::min_k;
  if (s == "prefix32") return BaselineMethod::prefix32;
  if (s == "prefix50") return BaselineMethod::prefix50;
  if (s == "name_cloze") return BaselineMethod::name_cloze;
  throw Error("unknown baseline method: " + s);
}

ScoreDirection direction_of(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::perplexity:
    case BaselineMethod::zlib:
      return ScoreDirection::lower_is_member;
    default:
      return ScoreDirection::higher_is_member;
  }
}

double perplexity(const std::vector<TokenLogprob>& tokens) {
  if (tokens.empty()) throw EmptySequence();
  double sum = 0.0;
  for (const auto& t : tokens) sum += t.logprob;
  return std::exp(-sum / static_cast<double>(tokens.size()));
}

std::size_t zlib_compressed_size(const std::string& text) {
  uLongf bound = compressBound(static_cast<uLong>(text.size()));
  std::vector<Bytef> buffer(bound);
  uLongf out_len = bound;
  int rc = compress2(buffer.data(), &out_len, reinterpret_cast<const Bytef*>(text.data()),
                     static_cast<uLong>(text.size()), Z_DEFAULT_COMPRESSION);
  if (rc != Z_OK) throw Error("zlib compression failed: " + std::to_string(rc));
  return static_cast<std::size_t>(out_len);
}

double zlib_score(const std::string& text, double ppl) {
  if (text.empty()) throw EmptySequence();
  if (ppl < 1.0) throw Error("perplexity below 1 is not meaningful here");
  double entropy_bits = 8.0 * static_cast<double>(zlib_compressed_size(text));
  return std::log(ppl) / entropy_bits;
}

double lowercase_score(double ppl_original, double ppl_lowercased) {
  if (ppl_original < 1.0 || ppl_lowercased < 1.0)
    throw Error("perplexities below 1 are not meaningful here");
  double denom = std::log(ppl_original);
  if (denom == 0.0) throw DegenerateLogRatio();
  return std::log(ppl_lowercased) / denom;
}

double min_k_prob(const std::vector<TokenLogprob>& tokens, double k_percent) {
  if (tokens.empty()) throw EmptySequence();
  if (k_percent <= 0.0 || k_percent > 100.0) throw Error("k percent must be in (0, 100]");
  std::vector<double> logprobs;
  logprobs.reserve(tokens.size());
  for (const auto& t : tokens) logprobs.push_back(t.logprob);
  auto take = static_cast<std::size_t>(
      std::ceil(static_cast<double>(tokens.size()) * k_percent / 100.0));
  take = std::min(take, logprobs.size());
  std::nth_element(logprobs.begin(), logprobs.begin() + static_cast<std::ptrdiff_t>(take - 1),
                   logprobs.end());
  double sum = std::accumulate(logprobs.begin(), logprobs.begin() + static_cast<std::ptrdiff_t>(take), 0.0);
  return sum / static_cast<double>(take);
}

namespace {

std::vector<std::string> whitespace_tokens(const std::string& s) {
  std::vector<std::string> tokens;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

std::string lowercase_ascii(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string normalize_for_token_sort(const std::string& s) {
  auto tokens = whitespace_tokens(lowercase_ascii(s));
  std::sort(tokens.begin(), tokens.end());
  std::string joined;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) joined.push_back(' ');
    joined += tokens[i];
  }
  return joined;
}

/// Edit distance with insertion/deletion cost 1 and substitution cost 2
/// (equivalently: la + lb - 2 * LCS).
std::size_t indel_distance(const std::string& a, const std::string& b) {
  const std::size_t la = a.size(), lb = b.size();
  std::vector<std::size_t> prev(lb + 1), cur(lb + 1);
  for (std::size_t j = 0; j <= lb; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= la; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= lb; ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 2);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[lb];
}

}  // namespace

double token_sort_ratio(const std::string& a, const std::string& b) {
  std::string na = normalize_for_token_sort(a);
  std::string nb = normalize_for_token_sort(b);
  std::size_t la = na.size(), lb = nb.size();
  if (la + lb == 0) return 100.0;
  std::size_t d = indel_distance(na, nb);
  return 100.0 * static_cast<double>(la + lb - d) / static_cast<double>(la + lb);
}

PrefixProbeOutcome prefix_probe(Provider& provider, const Passage& passage, int prefix_tokens) {
  if (prefix_tokens != 32 && prefix_tokens != 50)
    throw Error("prefix length must be 32 or 50 tokens");
  if (!provider.capabilities().chat) throw Unsupported("prefix probing needs a chat provider");
  auto words = whitespace_tokens(passage.text);
  auto needed = static_cast<std::size_t>(2 * prefix_tokens);
  if (words.size() < needed) throw PassageTooShort(words.size(), needed);

  auto join = [](auto begin, auto end) {
    std::string s;
    for (auto it = begin; it != end; ++it) {
      if (!s.empty()) s.push_back(' ');
      s += *it;
    }
    return s;
  };
  std::string prefix = join(words.begin(), words.begin() + prefix_tokens);
  std::string suffix = join(words.begin() + prefix_tokens, words.begin() + 2 * prefix_tokens);

  CompletionRequest request;
  request.user = prefix;
  request.temperature = 0.0;
  request.max_tokens = 2 * prefix_tokens;  // margin over the suffix length

  PrefixProbeOutcome outcome;
  outcome.completion = provider.complete(request);
  outcome.similarity = token_sort_ratio(outcome.completion, suffix);
  outcome.memorized = outcome.similarity > 80.0;
  return outcome;
}

namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "a",     "about", "above", "after",  "again", "all",   "an",    "and",   "any",   "are",
      "as",    "at",    "be",    "been",   "being", "below", "both",  "but",   "by",    "can",
      "did",   "do",    "does",  "down",   "each",  "few",   "for",   "from",  "had",   "has",
      "have",  "he",    "her",   "here",   "him",   "his",   "how",   "i",     "if",    "in",
      "into",  "is",    "it",    "its",    "just",  "me",    "more",  "most",  "my",    "no",
      "not",   "now",   "of",    "off",    "on",    "once",  "only",  "or",    "other", "our",
      "out",   "over",  "own",   "same",   "she",   "should","so",    "some",  "such",  "than",
      "that",  "the",   "their", "them",   "then",  "there", "these", "they",  "this",  "those",
      "to",    "too",   "under", "up",     "us",    "very",  "was",   "we",    "were",  "what",
      "when",  "where", "which", "who",    "whom",  "why",   "will",  "with",  "you",   "your"};
  return words;
}

struct TokenOccurrence {
  std::string word;      // as written
  std::size_t begin = 0;
  std::size_t end = 0;
  bool sentence_initial = false;
};

std::vector<TokenOccurrence> scan_tokens(const std::string& text) {
  std::vector<TokenOccurrence> tokens;
  bool at_sentence_start = true;
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char c = text[i];
    if (std::isalpha(c) != 0) {
      std::size_t start = i;
      while (i < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[i])) != 0 || text[i] == '\''))
        ++i;
      TokenOccurrence tok;
      tok.word = text.substr(start, i - start);
      tok.begin = start;
      tok.end = i;
      tok.sentence_initial = at_sentence_start;
      tokens.push_back(std::move(tok));
      at_sentence_start = false;
    } else {
      if (c == '.' || c == '!' || c == '?' || c == '\n') at_sentence_start = true;
      ++i;
    }
  }
  return tokens;
}

}  // namespace

MaskedPassage mask_passage(const std::string& text) {
  if (text.empty()) throw Error("cannot mask empty text");
  auto tokens = scan_tokens(text);

  struct Candidate {
    int count = 0;
    bool non_initial = false;
    std::size_t first_pos = 0;
  };

  // Proper-name pass: capitalized tokens whose lowercase form is not a stopword.
  std::map<std::string, Candidate> names;
  for (const auto& tok : tokens) {
    if (std::isupper(static_cast<unsigned char>(tok.word[0])) == 0) continue;
    if (stopwords().count(lowercase_ascii(tok.word)) > 0) continue;
    auto [it, inserted] = names.try_emplace(tok.word);
    if (inserted) it->second.first_pos = tok.begin;
    ++it->second.count;
    if (!tok.sentence_initial) it->second.non_initial = true;
  }

  std::string chosen;
  bool have = false;
  Candidate best;
  for (const auto& [word, cand] : names) {
    bool better = !have ||
                  std::tuple(cand.non_initial, cand.count, -static_cast<long long>(cand.first_pos)) >
                      std::tuple(best.non_initial, best.count, -static_cast<long long>(best.first_pos));
    if (better) {
      chosen = word;
      best = cand;
      have = true;
    }
  }

  if (!have) {
    // Common-noun fallback: most frequent non-stopword token of >= 4 characters.
    std::map<std::string, Candidate> nouns;
    for (const auto& tok : tokens) {
      std::string lower = lowercase_ascii(tok.word);
      if (lower.size() < 4 || stopwords().count(lower) > 0) continue;
      auto [it, inserted] = nouns.try_emplace(lower);
      if (inserted) it->second.first_pos = tok.begin;
      ++it->second.count;
    }
    for (const auto& [word, cand] : nouns) {
      bool better = !have || std::tuple(cand.count, -static_cast<long long>(cand.first_pos)) >
                                 std::tuple(best.count, -static_cast<long long>(best.first_pos));
      if (better) {
        chosen = word;
        best = cand;
        have = true;
      }
    }
    if (!have) throw Unmaskable();
  }

  // Replace every occurrence of the chosen token (case-insensitive match so
  // the fallback noun also catches sentence-initial capitalizations).
  MaskedPassage masked;
  masked.answers.push_back(chosen);
  std::string lower_target = lowercase_ascii(chosen);
  std::string out;
  std::size_t prev = 0;
  for (const auto& tok : tokens) {
    if (lowercase_ascii(tok.word) != lower_target) continue;
    out += text.substr(prev, tok.begin - prev);
    out += "[MASK]";
    prev = tok.end;
  }
  out += text.substr(prev);
  masked.masked_text = std::move(out);
  return masked;
}

std::string build_name_cloze_prompt(const std::string& masked_text) {
  return "Fill in the [MASK] in the passage below. Output only the single word that belongs in "
         "place of [MASK], with no explanation.\n"
         "Passage: " +
         masked_text + "\nAnswer:";
}

namespace {

std::string strip_punct_and_fold(const std::string& s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) != 0 || c == '\'')
      out.push_back(static_cast<char>(std::tolower(c)));
    else if (c >= 0x80)
      out.push_back(static_cast<char>(c));  // keep non-ASCII bytes as-is
  }
  return out;
}

}  // namespace

NameClozeOutcome name_cloze(Provider& provider, const Passage& passage,
                            const std::string& mask_override) {
  if (!provider.capabilities().chat) throw Unsupported("name cloze needs a chat provider");
  MaskedPassage masked;
  if (!mask_override.empty()) {
    // Explicit override: mask the given token directly.
    std::string target = mask_override;
    auto tokens = scan_tokens(passage.text);
    std::string out;
    std::size_t prev = 0;
    bool found = false;
    for (const auto& tok : tokens) {
      if (tok.word != target) continue;
      out += passage.text.substr(prev, tok.begin - prev);
      out += "[MASK]";
      prev = tok.end;
      found = true;
    }
    if (!found) throw Error("mask override '" + target + "' not found in passage " + passage.passage_id);
    out += passage.text.substr(prev);
    masked.masked_text = std::move(out);
    masked.answers.push_back(target);
  } else {
    masked = mask_passage(passage.text);
  }

  CompletionRequest request;
  request.user = build_name_cloze_prompt(masked.masked_text);
  request.temperature = 0.0;
  request.max_tokens = 8;

  NameClozeOutcome outcome;
  outcome.expected = masked.answers.front();
  outcome.reply = provider.complete(request);
  outcome.correct = strip_punct_and_fold(outcome.reply) == strip_punct_and_fold(outcome.expected);
  return outcome;
}

BaselineScore baseline_document_score(BaselineMethod method, const std::string& doc_id,
                                      const std::vector<double>& per_passage_values) {
  if (per_passage_values.empty()) throw EmptySequence();
  BaselineScore score;
  score.doc_id = doc_id;
  score.method = method;
  score.direction = direction_of(method);
  double sum = std::accumulate(per_passage_values.begin(), per_passage_values.end(), 0.0);
  score.value = sum / static_cast<double>(per_passage_values.size());
  return score;
}

}  // namespace decop
