#include "decop/paraphrase.hpp"

#include <algorithm>

#include "decop/errors.hpp"

namespace decop {

namespace {

constexpr const char* kShortTemplate =
    "Generate always 3 possible paraphrases for the following text that is identified as "
    "Example A: <text>.\n"
    "Format your output as:\n"
    "Example B: <paraphrase 1>\n"
    "\n"
    "Example C: <paraphrase 2>\n"
    "\n"
    "Example D: <paraphrase 3>\n"
    "\n"
    "--\n"
    "Example A: ";

constexpr const char* kLongTemplate =
    "Rewrite this entire text (all sentences with no exception) expressing the same meaning "
    "using different words. Aim to keep the rewriting similar in length to the original text.\n"
    "Do it three times. The text to be rewritten is identified as <Example A>.\n"
    "Format your output as:\n"
    "Example B: <insert paraphrase B>\n"
    "\n"
    "Example C: <insert paraphrase C>\n"
    "\n"
    "Example D: <insert paraphrase D>\n"
    "\n"
    "--\n"
    "Example A: ";

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string build_paraphrase_prompt(const Passage& passage) {
  const char* tpl =
      passage.length_setting == LengthSetting::long256 ? kLongTemplate : kShortTemplate;
  return std::string(tpl) + passage.text;
}

std::array<std::string, 3> parse_paraphrase_response(const std::string& response) {
  static constexpr char kLabels[3] = {'B', 'C', 'D'};
  std::array<std::string, 3> out;
  std::size_t cursor = 0;
  std::size_t marker_pos[3];
  for (int i = 0; i < 3; ++i) {
    std::string marker = std::string("Example ") + kLabels[i] + ":";
    std::size_t pos = response.find(marker, cursor);
    if (pos == std::string::npos) throw MissingMarker(kLabels[i]);
    marker_pos[i] = pos + marker.size();
    cursor = marker_pos[i];
  }
  for (int i = 0; i < 3; ++i) {
    std::size_t body_end =
        (i < 2) ? response.find(std::string("Example ") + kLabels[i + 1] + ":", marker_pos[i])
                : response.size();
    out[i] = trim(response.substr(marker_pos[i], body_end - marker_pos[i]));
    if (out[i].empty()) throw EmptyParaphrase(kLabels[i]);
  }
  return out;
}

MCQAItem generate_paraphrases(Provider& provider, const Passage& passage,
                              const ParaphraseOptions& options) {
  if (!provider.capabilities().chat) throw Unsupported("paraphrasing needs a chat provider");
  const std::string prompt = build_paraphrase_prompt(passage);
  CompletionRequest request;
  request.user = prompt;
  request.temperature = options.temperature;
  request.max_tokens = std::max(256, 8 * passage.word_count);

  std::string last_response;
  for (int attempt = 0; attempt < std::max(1, options.max_attempts); ++attempt) {
    last_response = provider.complete(request);
    try {
      auto bodies = parse_paraphrase_response(last_response);
      MCQAItem item;
      item.passage_id = passage.passage_id;
      item.doc_id = passage.doc_id;
      item.original = passage.text;
      item.paraphrases = bodies;
      item.title = passage.title;
      item.author = passage.author;
      item.group = passage.group;
      item.length_setting = passage.length_setting;
      if (!options.paraphrase_model.empty()) item.paraphrase_model = options.paraphrase_model;
      validate_item(item);
      for (const auto& body : bodies) {
        if (normalized_edit_distance(body, passage.text) < options.min_edit_distance)
          throw Error("paraphrase too close to the original");
      }
      return item;
    } catch (const Error&) {
      // malformed or rejected; retry with the same prompt
    }
  }
  throw ParaphraseFailure(std::max(1, options.max_attempts), last_response);
}

}  // namespace decop
