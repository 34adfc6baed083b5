#include "gpmap/config.hpp"

#include <sstream>

#include "gpmap/util.hpp"

namespace gpmap {

using nlohmann::json;

RunConfig load_config(const std::filesystem::path& path) {
  std::string content = read_text_file(path);
  if (trim(content).empty()) return RunConfig{};  // empty file: all defaults
  json j;
  try {
    j = json::parse(content);
  } catch (const json::exception& e) {
    throw DataError("config file " + path.string() + ": " + e.what());
  }
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "store_path") {
        c.store_path = value.get<std::string>();
      } else if (key == "out_dir") {
        c.out_dir = value.get<std::string>();
      } else if (key == "template_dir") {
        c.template_dir = value.get<std::string>();
      } else if (key == "stoplist_path") {
        c.stoplist_path = value.get<std::string>();
      } else if (key == "variants_path") {
        c.variants_path = value.get<std::string>();
      } else if (key == "yesno_lexicon_path") {
        c.yesno_lexicon_path = value.get<std::string>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "negative_ratio") {
        c.negative_ratio = value.get<double>();
      } else if (key == "val_size") {
        c.val_size = value.get<std::uint64_t>();
      } else if (key == "balance") {
        c.balance = value.get<bool>();
      } else if (key == "jobs") {
        c.jobs = value.get<int>();
      } else if (key == "mask_marker") {
        c.mask_marker = value.get<std::string>();
      } else if (key == "aggregation") {
        c.aggregation = value.get<std::string>();
      } else if (key == "max_n") {
        c.max_n = value.get<int>();
      } else if (key == "smoothing") {
        c.smoothing = value.get<std::string>();
      } else if (key == "endpoint") {
        for (const auto& [ekey, evalue] : value.items()) {
          if (ekey == "base_url") {
            c.endpoint.base_url = evalue.get<std::string>();
          } else if (ekey == "model_name") {
            c.endpoint.model_name = evalue.get<std::string>();
          } else if (ekey == "auth_env") {
            c.endpoint.auth_env = evalue.get<std::string>();
          } else if (ekey == "completions_path") {
            c.endpoint.completions_path = evalue.get<std::string>();
          } else if (ekey == "timeout_seconds") {
            c.endpoint.timeout_seconds = evalue.get<double>();
          } else if (ekey == "max_retries") {
            c.endpoint.max_retries = evalue.get<int>();
          } else if (ekey == "max_in_flight") {
            c.endpoint.max_in_flight = evalue.get<int>();
          } else if (ekey == "retry_base_ms") {
            c.endpoint.retry_base_ms = evalue.get<int>();
          } else {
            throw DataError("config file " + path.string() + ": unknown key \"endpoint." + ekey + "\"");
          }
        }
      } else {
        throw DataError("config file " + path.string() + ": unknown key \"" + key + "\"");
      }
    } catch (const json::exception& e) {
      throw DataError("config file " + path.string() + ": key \"" + key + "\": " + e.what());
    }
  }
  return c;
}

json config_to_json(const RunConfig& c) {
  json endpoint{{"base_url", c.endpoint.base_url},
                {"model_name", c.endpoint.model_name},
                {"auth_env", c.endpoint.auth_env},
                {"completions_path", c.endpoint.completions_path},
                {"timeout_seconds", c.endpoint.timeout_seconds},
                {"max_retries", c.endpoint.max_retries},
                {"max_in_flight", c.endpoint.max_in_flight},
                {"retry_base_ms", c.endpoint.retry_base_ms}};
  json j{{"store_path", c.store_path},
         {"out_dir", c.out_dir},
         {"template_dir", c.template_dir},
         {"stoplist_path", c.stoplist_path},
         {"variants_path", c.variants_path},
         {"yesno_lexicon_path", c.yesno_lexicon_path},
         {"negative_ratio", c.negative_ratio},
         {"val_size", c.val_size},
         {"balance", c.balance},
         {"jobs", c.jobs},
         {"mask_marker", c.mask_marker},
         {"aggregation", c.aggregation},
         {"max_n", c.max_n},
         {"smoothing", c.smoothing},
         {"endpoint", endpoint}};
  if (c.seed) j["seed"] = *c.seed;
  return j;
}

std::string config_hash(const RunConfig& config) {
  return "fnv64:" + to_hex(fnv64(config_to_json(config).dump()));
}

// ---------------------------------------------------------------------------
// Training manifest
// ---------------------------------------------------------------------------

namespace {

template <typename T>
json hyperparameter(const std::optional<T>& override_value, const T& default_value) {
  json j{{"value", override_value.value_or(default_value)},
         {"default", default_value},
         {"overridden", override_value.has_value()}};
  return j;
}

}  // namespace

json train_manifest(const TrainManifestOptions& options, const std::string& cfg_hash) {
  if (options.stage != 1 && options.stage != 2) {
    throw UsageError("train_manifest: stage must be 1 or 2");
  }
  if (options.model_size != "small" && options.model_size != "base" && options.model_size != "large") {
    throw UsageError("train_manifest: model size must be small, base or large");
  }
  if (options.corpus_files.empty()) {
    throw UsageError("train_manifest: at least one corpus file is required");
  }
  json files = json::array();
  for (const auto& f : options.corpus_files) {
    if (!std::filesystem::exists(f)) throw DataError("corpus file does not exist: " + f);
    files.push_back({{"path", f}, {"fnv64", hash_file(f)}});
  }

  bool large = options.model_size == "large";
  double default_early_stop = large ? kDefaultEarlyStopLarge : kDefaultEarlyStopSmallBase;
  std::string default_adapter = large ? "qlora_4bit" : "qlora_8bit";

  json hyper{{"learning_rate", hyperparameter(options.learning_rate, kDefaultLearningRate)},
             {"batch_size", hyperparameter(options.batch_size, kDefaultBatchSize)},
             {"early_stop_epochs", hyperparameter(options.early_stop_epochs, default_early_stop)},
             {"adapter_scheme", hyperparameter(options.adapter_scheme, default_adapter)},
             {"trainable_fraction",
              hyperparameter(options.trainable_fraction, kDefaultTrainableFraction)}};

  return json{{"stage", options.stage},
              {"model_size", options.model_size},
              {"corpus_files", files},
              {"hyperparameters", hyper},
              {"mask_token", {{"literal", options.mask_marker}, {"vocab_id", kMaskTokenVocabId}}},
              {"config_hash", cfg_hash}};
}

// ---------------------------------------------------------------------------
// Run log
// ---------------------------------------------------------------------------

void RunLog::add(const std::string& key, const std::string& value) {
  std::string sanitized = value;
  for (char& c : sanitized) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  entries_.emplace_back(key, sanitized);
}

void RunLog::add_file(const std::string& key, const std::filesystem::path& path) {
  add(key, path.string());
  add(key + "_fnv64", hash_file(path));
}

void RunLog::write(const std::filesystem::path& path) const {
  std::ostringstream out;
  for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
  write_text_file(path, out.str());
}

}  // namespace gpmap
