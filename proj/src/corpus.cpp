#include "decop/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "decop/errors.hpp"
#include "decop/rng.hpp"

namespace decop {

using nlohmann::json;

namespace {

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Closing marks that may trail a sentence terminator: " ' ) ] and the UTF-8
// sequences for curly right quotes and guillemets.
std::size_t skip_closers(const std::string& s, std::size_t i) {
  while (i < s.size()) {
    unsigned char c = s[i];
    if (c == '"' || c == '\'' || c == ')' || c == ']') {
      ++i;
      continue;
    }
    if (i + 2 < s.size() && c == 0xe2 && (unsigned char)s[i + 1] == 0x80) {
      unsigned char third = s[i + 2];
      if (third == 0x99 || third == 0x9d) {  // ' "
        i += 3;
        continue;
      }
    }
    if (i + 1 < s.size() && c == 0xc2 && (unsigned char)s[i + 1] == 0xbb) {  // »
      i += 2;
      continue;
    }
    break;
  }
  return i;
}

}  // namespace

std::string clean_text(const std::string& raw) {
  // Pass 1: drop <...> tag spans and control characters.
  std::string stripped;
  stripped.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size();) {
    char c = raw[i];
    if (c == '<') {
      std::size_t close = raw.find('>', i + 1);
      if (close != std::string::npos) {
        i = close + 1;
        continue;
      }
      // unclosed '<' is prose, keep it
    }
    unsigned char uc = c;
    if (uc < 0x20 && c != '\n' && c != '\t' && c != '\r') {
      ++i;
      continue;
    }
    if (uc == 0x7f) {
      ++i;
      continue;
    }
    stripped.push_back(c);
    ++i;
  }

  // Pass 2: collapse whitespace. A run with a blank line (>= 2 newlines) is a
  // paragraph break and becomes one '\n'; any other run becomes one space.
  std::string out;
  out.reserve(stripped.size());
  std::size_t i = 0;
  while (i < stripped.size()) {
    if (is_space_byte(stripped[i])) {
      int newlines = 0;
      while (i < stripped.size() && is_space_byte(stripped[i])) {
        if (stripped[i] == '\n') ++newlines;
        ++i;
      }
      if (!out.empty() && i < stripped.size()) out.push_back(newlines >= 2 ? '\n' : ' ');
    } else {
      out.push_back(stripped[i]);
      ++i;
    }
  }
  if (out.empty()) throw EmptyAfterCleaning();
  return out;
}

std::vector<Sentence> segment_sentences(const std::string& cleaned) {
  std::vector<Sentence> sentences;
  std::size_t start = 0;
  std::size_t i = 0;
  auto flush = [&](std::size_t end, bool terminal) {
    while (start < end && is_space_byte(cleaned[start])) ++start;
    if (start >= end) return;
    Sentence s;
    s.begin = start;
    s.end = end;
    s.words = count_words(cleaned.substr(start, end - start));
    s.terminal = terminal;
    sentences.push_back(s);
    start = end;
  };
  while (i < cleaned.size()) {
    char c = cleaned[i];
    if (c == '.' || c == '!' || c == '?') {
      std::size_t after = skip_closers(cleaned, i + 1);
      if (after >= cleaned.size() || is_space_byte(cleaned[after])) {
        flush(after, true);
        i = after;
        continue;
      }
    }
    if (c == '\n') {
      // paragraph break without terminal punctuation: close a fragment
      flush(i, false);
      ++i;
      start = i;
      continue;
    }
    ++i;
  }
  flush(cleaned.size(), false);
  return sentences;
}

std::vector<Passage> extract_passages(const Document& doc, LengthSetting setting, int count,
                                      std::uint64_t seed) {
  if (count <= 0) throw Error("passage count must be positive");
  const std::string cleaned = clean_text(doc.raw_text);
  const auto sentences = segment_sentences(cleaned);
  const auto [min_words, max_words] = word_band(setting);

  std::vector<std::size_t> starts(sentences.size());
  for (std::size_t k = 0; k < starts.size(); ++k) starts[k] = k;
  Rng rng(seed);
  rng.shuffle(starts);

  struct Interval {
    std::size_t begin, end;
  };
  std::vector<Interval> used;
  std::vector<Passage> passages;

  for (std::size_t s : starts) {
    if (static_cast<int>(passages.size()) == count) break;
    int words = 0;
    std::ptrdiff_t last_fit = -1;
    for (std::size_t j = s; j < sentences.size(); ++j) {
      words += sentences[j].words;
      if (words > max_words) break;
      if (words >= min_words && sentences[j].terminal) last_fit = static_cast<std::ptrdiff_t>(j);
    }
    if (last_fit < 0) continue;
    std::size_t begin = sentences[s].begin;
    std::size_t end = sentences[static_cast<std::size_t>(last_fit)].end;
    bool overlaps = std::any_of(used.begin(), used.end(), [&](const Interval& iv) {
      return begin < iv.end && iv.begin < end;
    });
    if (overlaps) continue;
    used.push_back({begin, end});

    Passage p;
    p.doc_id = doc.doc_id;
    p.index = static_cast<int>(passages.size());
    p.text = cleaned.substr(begin, end - begin);
    p.length_setting = setting;
    p.word_count = count_words(p.text);
    p.title = doc.title;
    p.author = doc.author;
    p.group = doc.group;
    p.passage_id = doc.doc_id + "-" + to_string(setting) + "-" + std::to_string(p.index);
    passages.push_back(std::move(p));
  }

  if (static_cast<int>(passages.size()) < count)
    throw InsufficientText(count, static_cast<int>(passages.size()));
  return passages;
}

namespace {

json parse_record(const std::string& line, std::size_t record_number) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw SchemaError(record_number, "<record>", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError(record_number, "<record>", "not a JSON object");
  return j;
}

template <typename T>
T require_field(const json& j, const char* name, std::size_t record_number) {
  if (!j.contains(name)) throw SchemaError(record_number, name, "missing");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(record_number, name, "wrong type");
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::vector<std::string>& lines, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path);
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace

CorpusLoad load_corpus(const std::string& manifest_path) {
  CorpusLoad result;
  const auto base = std::filesystem::path(manifest_path).parent_path();
  std::size_t record_number = 0;
  std::vector<std::string> seen;
  for (const auto& line : read_lines(manifest_path)) {
    ++record_number;
    json j = parse_record(line, record_number);
    Document d;
    d.doc_id = require_field<std::string>(j, "doc_id", record_number);
    d.title = require_field<std::string>(j, "title", record_number);
    d.author = require_field<std::string>(j, "author", record_number);
    d.publication_year = require_field<int>(j, "publication_year", record_number);
    d.group = group_from_string(require_field<std::string>(j, "group", record_number));
    auto file = require_field<std::string>(j, "file", record_number);

    if (std::find(seen.begin(), seen.end(), d.doc_id) != seen.end()) throw DuplicateId(d.doc_id);
    seen.push_back(d.doc_id);

    std::ifstream text_in(base / file, std::ios::binary);
    if (!text_in) throw SchemaError(record_number, "file", "cannot open " + file);
    std::ostringstream ss;
    ss << text_in.rdbuf();
    d.raw_text = ss.str();
    if (d.raw_text.empty()) throw SchemaError(record_number, "file", file + " is empty");

    if (d.publication_year == 2022)
      result.warnings.push_back(d.doc_id + ": published 2022, membership ambiguous");
    bool should_be_clean = d.publication_year >= 2023;
    if (should_be_clean != (d.group == GroupLabel::clean))
      result.warnings.push_back(d.doc_id + ": group '" + to_string(d.group) +
                                "' does not match the publication-year convention (" +
                                std::to_string(d.publication_year) + ")");
    result.documents.push_back(std::move(d));
  }
  return result;
}

std::vector<MCQAItem> load_benchmark(const std::string& path) {
  std::vector<MCQAItem> items;
  std::vector<std::string> seen;
  std::size_t record_number = 0;
  for (const auto& line : read_lines(path)) {
    ++record_number;
    json j = parse_record(line, record_number);
    MCQAItem item;
    item.passage_id = require_field<std::string>(j, "passage_id", record_number);
    item.doc_id = require_field<std::string>(j, "doc_id", record_number);
    item.title = require_field<std::string>(j, "title", record_number);
    item.author = require_field<std::string>(j, "author", record_number);
    item.group = group_from_string(require_field<std::string>(j, "group", record_number));
    item.length_setting =
        length_setting_from_string(require_field<std::string>(j, "length_setting", record_number));
    auto options = require_field<std::vector<std::string>>(j, "options", record_number);
    if (options.size() != 4)
      throw SchemaError(record_number, "options", "expected 4 options, got " + std::to_string(options.size()));
    auto label = require_field<std::string>(j, "label", record_number);
    if (label.size() != 1 || label[0] < 'A' || label[0] > 'D')
      throw SchemaError(record_number, "label", "must be one of A, B, C, D");
    int verbatim = label[0] - 'A';
    item.original = options[static_cast<std::size_t>(verbatim)];
    int k = 0;
    for (int i = 0; i < 4; ++i) {
      if (i != verbatim) item.paraphrases[static_cast<std::size_t>(k++)] = options[static_cast<std::size_t>(i)];
    }
    if (j.contains("paraphrase_model")) item.paraphrase_model = j.at("paraphrase_model").get<std::string>();
    if (j.contains("mask_override")) item.mask_override = j.at("mask_override").get<std::string>();

    if (std::find(seen.begin(), seen.end(), item.passage_id) != seen.end())
      throw DuplicateId(item.passage_id);
    seen.push_back(item.passage_id);
    validate_item(item, record_number);
    items.push_back(std::move(item));
  }
  return items;
}

void save_benchmark(const std::vector<MCQAItem>& items, const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(items.size());
  for (const auto& item : items) {
    validate_item(item);
    json j;
    j["passage_id"] = item.passage_id;
    j["doc_id"] = item.doc_id;
    j["title"] = item.title;
    j["author"] = item.author;
    j["group"] = to_string(item.group);
    j["length_setting"] = to_string(item.length_setting);
    j["options"] = {item.original, item.paraphrases[0], item.paraphrases[1], item.paraphrases[2]};
    j["label"] = "A";
    if (item.paraphrase_model) j["paraphrase_model"] = *item.paraphrase_model;
    if (item.mask_override) j["mask_override"] = *item.mask_override;
    lines.push_back(j.dump());
  }
  write_lines(lines, path);
}

std::vector<Passage> load_passages(const std::string& path) {
  std::vector<Passage> passages;
  std::vector<std::string> seen;
  std::size_t record_number = 0;
  for (const auto& line : read_lines(path)) {
    ++record_number;
    json j = parse_record(line, record_number);
    Passage p;
    p.passage_id = require_field<std::string>(j, "passage_id", record_number);
    p.doc_id = require_field<std::string>(j, "doc_id", record_number);
    p.index = require_field<int>(j, "index", record_number);
    p.text = require_field<std::string>(j, "text", record_number);
    p.length_setting =
        length_setting_from_string(require_field<std::string>(j, "length_setting", record_number));
    p.word_count = require_field<int>(j, "word_count", record_number);
    p.title = require_field<std::string>(j, "title", record_number);
    p.author = require_field<std::string>(j, "author", record_number);
    p.group = group_from_string(require_field<std::string>(j, "group", record_number));
    if (p.word_count != count_words(p.text))
      throw SchemaError(record_number, "word_count", "does not match text");
    if (std::find(seen.begin(), seen.end(), p.passage_id) != seen.end())
      throw DuplicateId(p.passage_id);
    seen.push_back(p.passage_id);
    passages.push_back(std::move(p));
  }
  return passages;
}

void save_passages(const std::vector<Passage>& passages, const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(passages.size());
  for (const auto& p : passages) {
    json j;
    j["passage_id"] = p.passage_id;
    j["doc_id"] = p.doc_id;
    j["index"] = p.index;
    j["text"] = p.text;
    j["length_setting"] = to_string(p.length_setting);
    j["word_count"] = p.word_count;
    j["title"] = p.title;
    j["author"] = p.author;
    j["group"] = to_string(p.group);
    lines.push_back(j.dump());
  }
  write_lines(lines, path);
}

}  // namespace decop
