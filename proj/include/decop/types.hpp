#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace decop {

enum class GroupLabel { clean, suspect };

/// Target passage sizes; token counts are approximated by word counts at
/// tokens ~ words / 0.75, with a +/-10 word tolerance band.
enum class LengthSetting { short64, medium128, long256 };

std::string to_string(GroupLabel g);
GroupLabel group_from_string(const std::string& s);

std::string to_string(LengthSetting s);
LengthSetting length_setting_from_string(const std::string& s);

/// Target word count for a setting (48 / 96 / 192).
int target_words(LengthSetting s);
/// Inclusive word-count band [target-10, target+10].
std::pair<int, int> word_band(LengthSetting s);

int count_words(const std::string& text);

struct Document {
  std::string doc_id;
  std::string title;
  std::string author;
  int publication_year = 0;
  GroupLabel group = GroupLabel::clean;
  std::string raw_text;
};

struct Passage {
  std::string passage_id;
  std::string doc_id;
  int index = 0;  // 0-based extraction index
  std::string text;
  LengthSetting length_setting = LengthSetting::medium128;
  int word_count = 0;

  // Carried along so downstream stages do not need the corpus manifest.
  std::string title;
  std::string author;
  GroupLabel group = GroupLabel::clean;
};

/// One original passage plus exactly three paraphrases; the atomic probe unit.
/// Stored canonically with the original first (benchmark label "A"); the probe
/// stage assigns presented positions at permutation time.
struct MCQAItem {
  std::string passage_id;
  std::string doc_id;
  std::string original;
  std::array<std::string, 3> paraphrases;
  std::string title;
  std::string author;
  GroupLabel group = GroupLabel::clean;
  LengthSetting length_setting = LengthSetting::medium128;
  std::optional<std::string> paraphrase_model;
  std::optional<std::string> mask_override;  // explicit name-cloze mask token

  bool operator==(const MCQAItem&) const = default;
};

/// Throws SchemaError (record number 0) if the item violates its invariants:
/// three paraphrases, none equal to the original, pairwise distinct, each
/// within +/-40% of the original's word count.
void validate_item(const MCQAItem& item, std::size_t record_number = 0);

/// Levenshtein distance normalized by max(len a, len b); 0 for two empties.
double normalized_edit_distance(const std::string& a, const std::string& b);

}  // namespace decop
