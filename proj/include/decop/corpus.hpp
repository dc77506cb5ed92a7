#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "decop/types.hpp"

namespace decop {

/// Strips <...> markup, drops control characters, collapses whitespace runs to
/// single spaces and paragraph breaks (runs containing a blank line) to single
/// newlines. Throws EmptyAfterCleaning if nothing survives.
std::string clean_text(const std::string& raw);

struct Sentence {
  std::size_t begin = 0;  // byte offset into the cleaned text
  std::size_t end = 0;    // one past the last byte
  int words = 0;
  bool terminal = true;  // ends with sentence-terminal punctuation
};

/// Splits cleaned text into sentences. A sentence ends after . ! or ?
/// optionally followed by closing quotes/brackets; a trailing fragment with no
/// terminal punctuation is kept but flagged non-terminal.
std::vector<Sentence> segment_sentences(const std::string& cleaned);

/// Extracts exactly `count` pairwise non-overlapping passages. Start sentences
/// are drawn uniformly at random without replacement (seeded); each passage
/// extends to the last sentence end whose cumulative word count lies inside
/// the setting's band. Pure function of (cleaned text, setting, count, seed).
/// Throws InsufficientText (with the achievable count) when the document
/// cannot yield `count` valid passages.
std::vector<Passage> extract_passages(const Document& doc, LengthSetting setting, int count,
                                      std::uint64_t seed);

struct CorpusLoad {
  std::vector<Document> documents;
  std::vector<std::string> warnings;  // 2022 publications, group/year mismatches
};

/// Loads a corpus manifest (one line-delimited JSON record per document:
/// {doc_id, title, author, publication_year, group, file}); document text is
/// read from `file` resolved against the manifest's directory.
CorpusLoad load_corpus(const std::string& manifest_path);

/// Benchmark records: {passage_id, doc_id, title, author, group,
/// length_setting, options: [4], label} with options[label] verbatim.
std::vector<MCQAItem> load_benchmark(const std::string& path);
void save_benchmark(const std::vector<MCQAItem>& items, const std::string& path);

std::vector<Passage> load_passages(const std::string& path);
void save_passages(const std::vector<Passage>& passages, const std::string& path);

}  // namespace decop
