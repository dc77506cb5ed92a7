#include "decop/types.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include "decop/errors.hpp"

namespace decop {

std::string to_string(GroupLabel g) { return g == GroupLabel::clean ? "clean" : "suspect"; }

GroupLabel group_from_string(const std::string& s) {
  if (s == "clean") return GroupLabel::clean;
  if (s == "suspect") return GroupLabel::suspect;
  throw Error("unknown group label: " + s);
}

std::string to_string(LengthSetting s) {
  switch (s) {
    case LengthSetting::short64: return "short64";
    case LengthSetting::medium128: return "medium128";
    case LengthSetting::long256: return "long256";
  }
  std::abort();
}

LengthSetting length_setting_from_string(const std::string& s) {
  if (s == "short64") return LengthSetting::short64;
  if (s == "medium128") return LengthSetting::medium128;
  if (s == "long256") return LengthSetting::long256;
  throw Error("unknown length setting: " + s);
}

int target_words(LengthSetting s) {
  switch (s) {
    case LengthSetting::short64: return 48;
    case LengthSetting::medium128: return 96;
    case LengthSetting::long256: return 192;
  }
  std::abort();
}

std::pair<int, int> word_band(LengthSetting s) {
  int t = target_words(s);
  return {t - 10, t + 10};
}

int count_words(const std::string& text) {
  int n = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

void validate_item(const MCQAItem& item, std::size_t record_number) {
  if (item.passage_id.empty()) throw SchemaError(record_number, "passage_id", "must be non-empty");
  if (item.doc_id.empty()) throw SchemaError(record_number, "doc_id", "must be non-empty");
  if (item.original.empty()) throw SchemaError(record_number, "options", "original text is empty");
  for (std::size_t i = 0; i < 3; ++i) {
    if (item.paraphrases[i].empty())
      throw SchemaError(record_number, "options", "paraphrase " + std::to_string(i + 1) + " is empty");
    if (item.paraphrases[i] == item.original)
      throw SchemaError(record_number, "options",
                        "paraphrase " + std::to_string(i + 1) + " equals the original");
    for (std::size_t j = i + 1; j < 3; ++j) {
      if (item.paraphrases[i] == item.paraphrases[j])
        throw SchemaError(record_number, "options",
                          "paraphrases " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                              " are identical");
    }
  }
  int ow = count_words(item.original);
  for (std::size_t i = 0; i < 3; ++i) {
    int pw = count_words(item.paraphrases[i]);
    if (pw < 0.6 * ow || pw > 1.4 * ow)
      throw SchemaError(record_number, "options",
                        "paraphrase " + std::to_string(i + 1) + " word count " + std::to_string(pw) +
                            " outside +/-40% of original (" + std::to_string(ow) + ")");
  }
}

double normalized_edit_distance(const std::string& a, const std::string& b) {
  const std::size_t la = a.size(), lb = b.size();
  if (la == 0 && lb == 0) return 0.0;
  std::vector<std::size_t> prev(lb + 1), cur(lb + 1);
  for (std::size_t j = 0; j <= lb; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= la; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= lb; ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[lb]) / static_cast<double>(std::max(la, lb));
}

}  // namespace decop
