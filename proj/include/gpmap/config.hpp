#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpmap/model_client.hpp"

namespace gpmap {

/// Effective run settings: defaults, overridden by a JSON config file,
/// overridden by CLI flags. Unknown keys in the file are an error rather
/// than silently ignored.
struct RunConfig {
  // paths
  std::string store_path;
  std::string out_dir;
  std::string template_dir;       // empty -> builtin templates
  std::string stoplist_path;      // empty -> builtin stoplist
  std::string variants_path;      // empty -> builtin relation prompt variants
  std::string yesno_lexicon_path; // empty -> builtin yes/no keyword sets
  // generation
  std::optional<std::uint64_t> seed;
  double negative_ratio = 1.0;
  std::uint64_t val_size = 10000;
  bool balance = false;
  int jobs = 1;
  std::string mask_marker = "<mask>";
  // eval
  std::string aggregation = "oracle_best";
  int max_n = 4;
  std::string smoothing = "add_one";
  // endpoint
  EndpointConfig endpoint;
};

RunConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const RunConfig& config);
std::string config_hash(const RunConfig& config);

// ---------------------------------------------------------------------------
// Training manifest
// ---------------------------------------------------------------------------
// Handoff file for an external trainer. Hyperparameter defaults mirror the
// published fine-tuning setup; overrides are recorded next to the default
// they replace.

struct TrainManifestOptions {
  int stage = 1;                  // 1 or 2
  std::string model_size = "base";  // small | base | large
  std::vector<std::string> corpus_files;
  std::optional<double> learning_rate;
  std::optional<int> batch_size;
  std::optional<double> early_stop_epochs;
  std::optional<std::string> adapter_scheme;  // lora | qlora_8bit | qlora_4bit
  std::optional<double> trainable_fraction;
  std::string mask_marker = "<mask>";
};

inline constexpr double kDefaultLearningRate = 1.4e-05;
inline constexpr int kDefaultBatchSize = 32;
inline constexpr double kDefaultEarlyStopSmallBase = 2.75;
inline constexpr double kDefaultEarlyStopLarge = 1.25;
inline constexpr double kDefaultTrainableFraction = 0.0749;
inline constexpr int kMaskTokenVocabId = 35073;

/// Builds the manifest JSON; every corpus file must exist (its content hash
/// is embedded).
nlohmann::json train_manifest(const TrainManifestOptions& options, const std::string& cfg_hash);

// ---------------------------------------------------------------------------
// Run log
// ---------------------------------------------------------------------------

/// Plain-text key=value log, one pair per line, timestamp-free so run
/// artifacts stay byte-reproducible.
class RunLog {
 public:
  void add(const std::string& key, const std::string& value);
  void add_file(const std::string& key, const std::filesystem::path& path);  // records path and hash
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace gpmap
