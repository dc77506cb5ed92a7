#include "decop/cli.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "decop/calibration.hpp"
#include "decop/corpus.hpp"
#include "decop/errors.hpp"
#include "decop/paraphrase.hpp"
#include "decop/report.hpp"
#include "decop/sha256.hpp"

namespace decop {

using nlohmann::json;

namespace {

ProviderConfig provider_config_from_json(const json& j) {
  ProviderConfig config;
  config.kind = j.value("kind", std::string("simulated"));
  if (config.kind != "simulated" && config.kind != "openai_compat")
    throw ConfigError("provider.kind must be 'simulated' or 'openai_compat'");
  config.remote.base_url = j.value("base_url", config.remote.base_url);
  config.remote.path_prefix = j.value("path_prefix", config.remote.path_prefix);
  config.remote.model = j.value("model", config.remote.model);
  config.remote.api_key_env = j.value("api_key_env", config.remote.api_key_env);
  config.remote.requests_per_minute =
      j.value("requests_per_minute", config.remote.requests_per_minute);
  config.remote.max_attempts = j.value("max_attempts", config.remote.max_attempts);
  config.remote.backoff_initial_ms = j.value("backoff_initial_ms", config.remote.backoff_initial_ms);
  config.remote.supports_label_probs = j.value("label_probs", config.remote.supports_label_probs);
  config.remote.supports_token_logprobs =
      j.value("token_logprobs", config.remote.supports_token_logprobs);
  if (j.contains("simulated")) {
    const auto& s = j.at("simulated");
    config.simulated.seed = s.value("seed", std::uint64_t{0});
    if (s.contains("position_bias")) {
      auto bias = s.at("position_bias").get<std::vector<double>>();
      if (bias.size() != 4) throw ConfigError("simulated.position_bias must have 4 entries");
      for (int k = 0; k < 4; ++k)
        config.simulated.position_bias[static_cast<std::size_t>(k)] = bias[static_cast<std::size_t>(k)];
    }
    if (s.contains("default_memorization"))
      config.simulated.default_memorization = s.at("default_memorization").get<double>();
    if (s.contains("doc_memorization"))
      for (const auto& [doc, m] : s.at("doc_memorization").items())
        config.simulated.doc_memorization[doc] = m.get<double>();
    config.simulated.token_logprob = s.value("token_logprob", config.simulated.token_logprob);
    config.simulated_model_name = s.value("model_name", config.simulated_model_name);
  }
  return config;
}

}  // namespace

RunConfig default_run_config() {
  RunConfig config;
  config.provider.simulated.default_memorization = 0.0;
  config.paraphrase_provider.simulated.default_memorization = 0.0;
  config.raw_json = "{}";
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ConfigError("invalid config JSON in " + path + ": " + e.what());
  }

  RunConfig config = default_run_config();
  config.raw_json = j.dump();
  if (j.contains("provider")) config.provider = provider_config_from_json(j.at("provider"));
  if (j.contains("paraphrase_provider"))
    config.paraphrase_provider = provider_config_from_json(j.at("paraphrase_provider"));
  else
    config.paraphrase_provider = config.provider;
  config.cache_dir = j.value("cache_dir", config.cache_dir);
  config.parallelism = j.value("parallelism", config.parallelism);
  if (j.contains("prompt_style"))
    config.prompt_style = prompt_style_from_string(j.at("prompt_style").get<std::string>());
  if (j.contains("length_setting"))
    config.length_setting = length_setting_from_string(j.at("length_setting").get<std::string>());
  config.passages_per_doc = j.value("passages_per_doc", config.passages_per_doc);
  config.extract_seed = j.value("extract_seed", config.extract_seed);
  config.paraphrase_temperature = j.value("paraphrase_temperature", config.paraphrase_temperature);
  config.eval_temperature = j.value("eval_temperature", config.eval_temperature);
  config.paraphrase_retries = j.value("paraphrase_retries", config.paraphrase_retries);
  config.min_k_percent = j.value("min_k_percent", config.min_k_percent);
  if (j.contains("bootstrap")) {
    const auto& b = j.at("bootstrap");
    config.bootstrap.iterations = b.value("iterations", config.bootstrap.iterations);
    config.bootstrap.seed = b.value("seed", config.bootstrap.seed);
    if (b.contains("ttest_mode"))
      config.bootstrap.ttest_mode = ttest_mode_from_string(b.at("ttest_mode").get<std::string>());
  }
  if (j.contains("simulate")) {
    const auto& s = j.at("simulate");
    auto& sim = config.simulation;
    sim.suspect_docs = s.value("suspect_docs", sim.suspect_docs);
    sim.clean_docs = s.value("clean_docs", sim.clean_docs);
    sim.items_per_doc = s.value("items_per_doc", sim.items_per_doc);
    sim.memorization_suspect = s.value("memorization_suspect", sim.memorization_suspect);
    sim.memorization_clean = s.value("memorization_clean", sim.memorization_clean);
    if (s.contains("position_bias")) {
      auto bias = s.at("position_bias").get<std::vector<double>>();
      if (bias.size() != 4) throw ConfigError("simulate.position_bias must have 4 entries");
      for (int k = 0; k < 4; ++k) sim.position_bias[static_cast<std::size_t>(k)] = bias[static_cast<std::size_t>(k)];
    }
    sim.seed = s.value("seed", sim.seed);
    sim.calibrate = s.value("calibrate", sim.calibrate);
    sim.calibration_docs = s.value("calibration_docs", sim.calibration_docs);
    sim.calibration_items_per_doc =
        s.value("calibration_items_per_doc", sim.calibration_items_per_doc);
    sim.bootstrap_iterations = s.value("bootstrap_iterations", config.bootstrap.iterations);
    sim.ttest_mode = config.bootstrap.ttest_mode;
    sim.parallelism = config.parallelism;
    sim.style = config.prompt_style;
  }

  if (config.paraphrase_temperature != 0.1)
    std::cerr << "warning: paraphrase temperature overridden to " << config.paraphrase_temperature
              << " (default 0.1)\n";
  if (config.eval_temperature != 0.0)
    std::cerr << "warning: evaluation temperature overridden to " << config.eval_temperature
              << " (default 0)\n";
  return config;
}

std::string config_hash(const RunConfig& config) { return sha256_hex(config.raw_json); }

ProviderHandle make_provider(const ProviderConfig& config, const std::string& cache_dir) {
  ProviderHandle handle;
  std::shared_ptr<Provider> inner;
  if (config.kind == "simulated") {
    inner = std::make_shared<SimulatedProvider>(config.simulated, config.simulated_model_name);
  } else {
    inner = std::make_shared<OpenAICompatProvider>(config.remote);
  }
  if (cache_dir.empty()) {
    handle.provider = inner;
  } else {
    handle.cache = std::make_shared<ResponseCache>(cache_dir);
    handle.provider = std::make_shared<CachedProvider>(inner, handle.cache);
  }
  return handle;
}

void save_scores(const std::vector<ScoreRecord>& scores, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write scores file: " + path);
  for (const auto& s : scores) {
    json j;
    j["doc_id"] = s.doc_id;
    j["title"] = s.title;
    j["group"] = to_string(s.group);
    j["method"] = s.method;
    j["value"] = s.value;
    j["direction"] =
        s.direction == ScoreDirection::higher_is_member ? "higher_is_member" : "lower_is_member";
    j["n_trials"] = s.n_trials;
    j["refusals"] = s.refusals;
    out << j.dump() << '\n';
  }
}

std::vector<ScoreRecord> load_scores(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scores file: " + path);
  std::vector<ScoreRecord> scores;
  std::string line;
  std::size_t record_number = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++record_number;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(record_number, "<record>", std::string("invalid JSON: ") + e.what());
    }
    ScoreRecord s;
    s.doc_id = j.at("doc_id").get<std::string>();
    s.title = j.value("title", std::string{});
    s.group = group_from_string(j.at("group").get<std::string>());
    s.method = j.value("method", std::string("decop"));
    s.value = j.at("value").get<double>();
    s.direction = j.value("direction", std::string("higher_is_member")) == "lower_is_member"
                      ? ScoreDirection::lower_is_member
                      : ScoreDirection::higher_is_member;
    s.n_trials = j.value("n_trials", 0);
    s.refusals = j.value("refusals", 0);
    scores.push_back(std::move(s));
  }
  return scores;
}

void write_status(const CommandStatus& status, const std::string& path) {
  json j;
  j["command"] = status.command;
  j["ok"] = status.ok;
  if (!status.error.empty()) j["error"] = status.error;
  j["outputs"] = status.outputs;
  j["incomplete_docs"] = status.incomplete_docs;
  j["warnings"] = status.warnings;
  j["cache"] = {{"hits", status.cache_hits}, {"misses", status.cache_misses}};
  j["config_hash"] = status.config_hash;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (out) out << j.dump(2) << '\n';
}

namespace {

std::string status_path_for(const std::optional<std::string>& explicit_path,
                            const std::string& primary_output) {
  if (explicit_path) return *explicit_path;
  return primary_output + ".status.json";
}

void finish(CommandStatus& status, const ProviderHandle* handle, const std::string& path) {
  if (handle && handle->cache) {
    status.cache_hits = handle->cache->stats().hits;
    status.cache_misses = handle->cache->stats().misses;
  }
  write_status(status, path);
}

std::map<std::string, std::vector<MCQAItem>> group_items_by_doc(const std::vector<MCQAItem>& items) {
  std::map<std::string, std::vector<MCQAItem>> by_doc;
  for (const auto& item : items) by_doc[item.doc_id].push_back(item);
  return by_doc;
}

}  // namespace

int cmd_extract(const RunConfig& config, const ExtractArgs& args) {
  CommandStatus status;
  status.command = "extract";
  status.config_hash = config_hash(config);
  const std::string status_path = status_path_for(args.status_out, args.out);
  try {
    if (!std::filesystem::exists(args.manifest))
      throw ConfigError("manifest does not exist: " + args.manifest);
    auto corpus = load_corpus(args.manifest);
    status.warnings = corpus.warnings;
    for (const auto& w : corpus.warnings) std::cerr << "warning: " << w << "\n";
    std::vector<Passage> all;
    for (const auto& doc : corpus.documents) {
      try {
        auto passages =
            extract_passages(doc, config.length_setting, config.passages_per_doc, config.extract_seed);
        all.insert(all.end(), passages.begin(), passages.end());
      } catch (const InsufficientText& e) {
        status.incomplete_docs.push_back(doc.doc_id);
        std::cerr << "error: " << doc.doc_id << ": " << e.what() << "\n";
      }
    }
    save_passages(all, args.out);
    status.outputs.push_back(args.out);
    status.ok = status.incomplete_docs.empty();
    if (!status.ok) status.error = "some documents could not yield enough passages";
  } catch (const Error& e) {
    status.ok = false;
    status.error = e.what();
    std::cerr << "error: " << e.what() << "\n";
  }
  finish(status, nullptr, status_path);
  return status.ok ? 0 : 1;
}

int cmd_paraphrase(const RunConfig& config, const ParaphraseArgs& args) {
  CommandStatus status;
  status.command = "paraphrase";
  status.config_hash = config_hash(config);
  const std::string status_path = status_path_for(args.status_out, args.out);
  ProviderHandle handle;
  try {
    if (!std::filesystem::exists(args.passages))
      throw ConfigError("passages file does not exist: " + args.passages);
    auto passages = load_passages(args.passages);
    handle = make_provider(config.paraphrase_provider, config.cache_dir);

    ParaphraseOptions options;
    options.max_attempts = config.paraphrase_retries;
    options.temperature = config.paraphrase_temperature;
    options.paraphrase_model = handle.provider->model();

    std::vector<MCQAItem> items;
    for (const auto& passage : passages) {
      try {
        items.push_back(generate_paraphrases(*handle.provider, passage, options));
      } catch (const ParaphraseFailure& e) {
        status.incomplete_docs.push_back(passage.passage_id);
        std::cerr << "error: " << passage.passage_id << ": " << e.what() << "\n";
      }
    }
    save_benchmark(items, args.out);
    status.outputs.push_back(args.out);
    status.ok = status.incomplete_docs.empty();
    if (!status.ok) status.error = "some passages failed paraphrase generation";
  } catch (const Error& e) {
    status.ok = false;
    status.error = e.what();
    std::cerr << "error: " << e.what() << "\n";
  }
  finish(status, &handle, status_path);
  return status.ok ? 0 : 1;
}

int cmd_probe(const RunConfig& config, const ProbeArgs& args) {
  CommandStatus status;
  status.command = "probe";
  status.config_hash = config_hash(config);
  const std::string status_path = status_path_for(args.status_out, args.scores_out);
  ProviderHandle handle;
  try {
    if (!std::filesystem::exists(args.benchmark))
      throw ConfigError("benchmark file does not exist: " + args.benchmark);
    std::optional<CalibrationVector> calibration;
    if (!args.calibration.empty()) {
      if (!std::filesystem::exists(args.calibration))
        throw ConfigError("calibration file does not exist: " + args.calibration);
      calibration = load_calibration(args.calibration);
    }
    auto items = load_benchmark(args.benchmark);
    auto by_doc = group_items_by_doc(items);
    handle = make_provider(config.provider, config.cache_dir);

    std::unique_ptr<FileTranscriptWriter> transcript;
    if (!args.transcripts_out.empty())
      transcript = std::make_unique<FileTranscriptWriter>(args.transcripts_out);

    ProbeOptions options;
    options.style = config.prompt_style;
    options.parallelism = config.parallelism;
    options.transcript = transcript.get();
    if (calibration) options.calibration_delta = calibration->delta;

    std::vector<ScoreRecord> scores;
    for (const auto& [doc_id, doc_items] : by_doc) {
      try {
        auto score = score_document(*handle.provider, doc_items, options);
        ScoreRecord record;
        record.doc_id = doc_id;
        record.title = doc_items.front().title;
        record.group = doc_items.front().group;
        record.method = "decop";
        record.value = score.accuracy;
        record.direction = ScoreDirection::higher_is_member;
        record.n_trials = score.n_trials;
        record.refusals = score.refusal_count;
        scores.push_back(std::move(record));
      } catch (const ProviderError& e) {
        status.incomplete_docs.push_back(doc_id);
        std::cerr << "error: " << doc_id << ": " << e.what() << "\n";
      }
    }
    save_scores(scores, args.scores_out);
    status.outputs.push_back(args.scores_out);
    if (!args.transcripts_out.empty()) status.outputs.push_back(args.transcripts_out);
    status.ok = status.incomplete_docs.empty();
    if (!status.ok) status.error = "some documents did not complete";
  } catch (const Error& e) {
    status.ok = false;
    status.error = e.what();
    std::cerr << "error: " << e.what() << "\n";
  }
  finish(status, &handle, status_path);
  return status.ok ? 0 : 1;
}

int cmd_calibrate(const RunConfig& config, const CalibrateArgs& args) {
  CommandStatus status;
  status.command = "calibrate";
  status.config_hash = config_hash(config);
  const std::string status_path = status_path_for(args.status_out, args.out);
  ProviderHandle handle;
  try {
    if (!std::filesystem::exists(args.benchmark))
      throw ConfigError("benchmark file does not exist: " + args.benchmark);
    auto items = load_benchmark(args.benchmark);
    handle = make_provider(config.provider, config.cache_dir);

    CalibrationOptions options;
    options.parallelism = config.parallelism;
    auto result = compute_calibration(*handle.provider, items, config.prompt_style, options);
    for (const auto& w : result.warnings) {
      status.warnings.push_back(w);
      std::cerr << "warning: " << w << "\n";
    }
    save_calibration(result.vector, handle.provider->model(), args.out);
    status.outputs.push_back(args.out);

    std::vector<std::array<double, 4>> adjusted;
    for (const auto& doc : result.per_doc_means) {
      auto a = doc.means;
      for (int k = 0; k < 4; ++k)
        a[static_cast<std::size_t>(k)] += result.vector.delta[static_cast<std::size_t>(k)];
      adjusted.push_back(a);
    }
    auto check = check_calibration(adjusted);
    std::cerr << "calibration: " << result.vector.source_doc_count << " docs, "
              << result.vector.source_trial_count << " trials, " << result.excluded_trials
              << " excluded; well calibrated " << check.proportion * 100.0 << "%\n";
  } catch (const Error& e) {
    status.ok = false;
    status.error = e.what();
    std::cerr << "error: " << e.what() << "\n";
  }
  finish(status, &handle, status_path);
  return status.ok ? 0 : 1;
}

int cmd_baseline(const RunConfig& config, const BaselineArgs& args) {
  CommandStatus status;
  status.command = "baseline";
  status.config_hash = config_hash(config);
  const std::string status_path = status_path_for(args.status_out, args.scores_out);
  ProviderHandle handle;
  try {
    if (!std::filesystem::exists(args.benchmark))
      throw ConfigError("benchmark file does not exist: " + args.benchmark);
    BaselineMethod method = baseline_method_from_string(args.method);
    auto items = load_benchmark(args.benchmark);
    auto by_doc = group_items_by_doc(items);
    handle = make_provider(config.provider, config.cache_dir);
    Provider& provider = *handle.provider;

    std::ofstream outcomes;
    if (!args.outcomes_out.empty()) {
      outcomes.open(args.outcomes_out, std::ios::binary | std::ios::trunc);
      if (!outcomes) throw Error("cannot write outcomes file: " + args.outcomes_out);
    }
    auto log_outcome = [&](const std::string& passage_id, const std::string& doc_id, double value) {
      if (!outcomes.is_open()) return;
      json j;
      j["passage_id"] = passage_id;
      j["doc_id"] = doc_id;
      j["method"] = to_string(method);
      j["value"] = value;
      j["model"] = provider.model();
      outcomes << j.dump() << '\n';
    };

    std::vector<ScoreRecord> scores;
    for (const auto& [doc_id, doc_items] : by_doc) {
      std::vector<double> values;
      try {
        for (const auto& item : doc_items) {
          double value = 0.0;
          switch (method) {
            case BaselineMethod::perplexity:
              value = perplexity(provider.token_logprobs(item.original));
              break;
            case BaselineMethod::zlib:
              value = zlib_score(item.original, perplexity(provider.token_logprobs(item.original)));
              break;
            case BaselineMethod::lowercase: {
              std::string lower = item.original;
              for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
              value = lowercase_score(perplexity(provider.token_logprobs(item.original)),
                                      perplexity(provider.token_logprobs(lower)));
              break;
            }
            case BaselineMethod::min_k:
              value = min_k_prob(provider.token_logprobs(item.original), config.min_k_percent);
              break;
            case BaselineMethod::prefix32:
            case BaselineMethod::prefix50: {
              Passage passage;
              passage.passage_id = item.passage_id;
              passage.doc_id = item.doc_id;
              passage.text = item.original;
              passage.word_count = count_words(item.original);
              value = prefix_probe(provider, passage,
                                   method == BaselineMethod::prefix32 ? 32 : 50)
                          .memorized
                          ? 1.0
                          : 0.0;
              break;
            }
            case BaselineMethod::name_cloze: {
              Passage passage;
              passage.passage_id = item.passage_id;
              passage.doc_id = item.doc_id;
              passage.text = item.original;
              value = name_cloze(provider, passage, item.mask_override.value_or("")).correct ? 1.0 : 0.0;
              break;
            }
          }
          values.push_back(value);
          log_outcome(item.passage_id, doc_id, value);
        }
        auto score = baseline_document_score(method, doc_id, values);
        ScoreRecord record;
        record.doc_id = doc_id;
        record.title = doc_items.front().title;
        record.group = doc_items.front().group;
        record.method = to_string(method);
        record.value = score.value;
        record.direction = score.direction;
        scores.push_back(std::move(record));
      } catch (const Error& e) {
        status.incomplete_docs.push_back(doc_id);
        std::cerr << "error: " << doc_id << ": " << e.what() << "\n";
      }
    }
    save_scores(scores, args.scores_out);
    status.outputs.push_back(args.scores_out);
    if (!args.outcomes_out.empty()) status.outputs.push_back(args.outcomes_out);
    status.ok = status.incomplete_docs.empty();
    if (!status.ok) status.error = "some documents did not complete";
  } catch (const Error& e) {
    status.ok = false;
    status.error = e.what();
    std::cerr << "error: " << e.what() << "\n";
  }
  finish(status, &handle, status_path);
  return status.ok ? 0 : 1;
}

int cmd_evaluate(const RunConfig& config, const EvaluateArgs& args) {
  CommandStatus status;
  status.command = "evaluate";
  status.config_hash = config_hash(config);
  const std::string status_path = status_path_for(args.status_out, args.report_json);
  try {
    if (args.scores.empty()) throw ConfigError("no scores files given (--scores)");
    std::vector<ScoreRecord> records;
    for (const auto& path : args.scores) {
      if (!std::filesystem::exists(path))
        throw ConfigError("scores file does not exist: " + path);
      auto part = load_scores(path);
      records.insert(records.end(), part.begin(), part.end());
    }
    if (records.empty()) throw ConfigError("scores files contain no records");
    const std::string method = records.front().method;
    const ScoreDirection direction = records.front().direction;
    for (const auto& r : records) {
      if (r.method != method)
        throw ConfigError("scores mix methods '" + method + "' and '" + r.method + "'");
    }

    GroupScores groups;
    groups.direction = direction;
    std::vector<ReportDocument> docs;
    int refusals = 0;
    for (const auto& r : records) {
      if (r.group == GroupLabel::suspect)
        groups.suspect.push_back({r.doc_id, r.value});
      else
        groups.clean.push_back({r.doc_id, r.value});
      ReportDocument d;
      d.doc_id = r.doc_id;
      d.title = r.title;
      d.group = r.group;
      d.score = r.value;
      d.n_trials = r.n_trials;
      d.refusals = r.refusals;
      refusals += r.refusals;
      docs.push_back(std::move(d));
    }
    if (groups.suspect.empty()) throw ConfigError("no suspect documents in scores");
    if (groups.clean.empty()) throw ConfigError("no clean documents in scores");

    auto evaluation = bootstrap_evaluate(groups, config.bootstrap);
    auto report = make_report(config.provider.kind, "(from scores)", method, direction,
                              config_hash(config), std::move(docs), evaluation, std::nullopt);
    save_report(report, args.report_json, args.report_text);
    status.outputs.push_back(args.report_json);
    if (!args.report_text.empty()) status.outputs.push_back(args.report_text);
  } catch (const Error& e) {
    status.ok = false;
    status.error = e.what();
    std::cerr << "error: " << e.what() << "\n";
  }
  finish(status, nullptr, status_path);
  return status.ok ? 0 : 1;
}

int cmd_simulate(const RunConfig& config, const SimulateArgs& args) {
  CommandStatus status;
  status.command = "simulate";
  status.config_hash = config_hash(config);
  const std::string status_path = status_path_for(args.status_out, args.report_json);
  try {
    auto outcome = run_simulation(config.simulation, config_hash(config));
    save_report(outcome.report, args.report_json, args.report_text);
    status.outputs.push_back(args.report_json);
    if (!args.report_text.empty()) status.outputs.push_back(args.report_text);
    std::cout << report_to_text(outcome.report);
  } catch (const Error& e) {
    status.ok = false;
    status.error = e.what();
    std::cerr << "error: " << e.what() << "\n";
  }
  finish(status, nullptr, status_path);
  return status.ok ? 0 : 1;
}

int cmd_report(const ReportArgs& args) {
  try {
    if (!std::filesystem::exists(args.report_json))
      throw ConfigError("report file does not exist: " + args.report_json);
    std::ifstream in(args.report_json, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    auto report = report_from_json(ss.str());
    std::cout << report_to_text(report);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace decop
