#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpmap/store.hpp"

namespace gpmap {

// ---------------------------------------------------------------------------
// Example model
// ---------------------------------------------------------------------------

enum class Stage { Stage1, Stage2 };
enum class Polarity { Positive, Negative };

enum class TaskKind {
  MaskedGene,
  MaskedPhenotype,
  GeneProteinFunc,
  GeneProduct,
  ProteinFuncInfer,
  GeneFuncInfer,
  ProtMolecular,
  ProtPathogenesis,
  GeneInheritance,
};

inline constexpr TaskKind kAllTaskKinds[] = {
    TaskKind::MaskedGene,      TaskKind::MaskedPhenotype, TaskKind::GeneProteinFunc,
    TaskKind::GeneProduct,     TaskKind::ProteinFuncInfer, TaskKind::GeneFuncInfer,
    TaskKind::ProtMolecular,   TaskKind::ProtPathogenesis, TaskKind::GeneInheritance};

const char* stage_name(Stage s);
const char* task_kind_name(TaskKind k);
const char* polarity_name(Polarity p);
Stage task_stage(TaskKind k);
TaskKind task_kind_from_name(const std::string& s);
Polarity polarity_from_name(const std::string& s);

struct CorpusExample {
  std::string example_id;  // content hash of (task_kind, provenance, polarity)
  Stage stage = Stage::Stage1;
  TaskKind task_kind = TaskKind::MaskedGene;
  Polarity polarity = Polarity::Positive;
  std::string task_prompt;
  std::string input;
  std::string output;
  std::vector<std::string> provenance;  // entity/edge refs like "gene:351"
};

std::string example_id_for(TaskKind kind, Polarity polarity, const std::vector<std::string>& provenance);
nlohmann::json example_to_json(const CorpusExample& ex);
CorpusExample example_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------
// One template per (task kind, polarity) with named {slot} placeholders:
// gene, gene_function, protein, protein_function, phenotype, mechanism,
// inheritance, plus mask for stage-1 kinds. Templates live in external
// files so the corpus text can be audited and corrected without rebuilds;
// builtin() carries the shipped defaults.

struct ExampleTemplate {
  std::string task_prompt;
  std::string input;
  std::string output;
};

class TemplateSet {
 public:
  TemplateSet() = default;
  TemplateSet(std::map<std::pair<TaskKind, Polarity>, ExampleTemplate> templates, std::string version);

  static TemplateSet builtin();
  /// Loads <kind>.template (and <kind>.negative.template for the triple
  /// kinds) plus a VERSION file from a directory.
  static TemplateSet load_dir(const std::filesystem::path& dir);

  const ExampleTemplate& get(TaskKind kind, Polarity polarity) const;
  const std::string& version() const { return version_; }

 private:
  std::map<std::pair<TaskKind, Polarity>, ExampleTemplate> templates_;
  std::string version_;
};

/// Slot names referenced by a template body, in order of first appearance.
std::vector<std::string> collect_slots(const std::string& text);

/// Substitutes {slot} placeholders; throws DataError for a slot missing
/// from the map.
std::string render_slots(const std::string& text, const std::map<std::string, std::string>& slots);

/// Writes the builtin defaults as editable template files (used to seed a
/// custom template directory).
void write_builtin_templates(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

struct CorpusConfig {
  std::string mask_marker = "<mask>";
  double negative_ratio = 1.0;
  TemplateSet templates = TemplateSet::builtin();
};

using ExampleSink = std::function<void(CorpusExample&&)>;
using SkipCounts = std::map<std::string, std::size_t>;

/// Stage-1 instruction-mask rendering: for every gene-phenotype edge, one
/// MASKED_GENE and one MASKED_PHENOTYPE example. The masked entity's
/// surface form is replaced by the mask marker everywhere in the input and
/// becomes the output. Edges whose entity lacks a usable name are counted
/// in skips.
void render_stage1(const KnowledgeStore& store, std::uint64_t seed, const CorpusConfig& config,
                   const ExampleSink& sink, SkipCounts& skips);

/// Gene-protein contexts: GENE_PROTEIN_FUNC, GENE_PRODUCT,
/// PROTEIN_FUNC_INFER and GENE_FUNC_INFER per gene-protein edge; kinds
/// whose required slot text is missing are skipped with a reason.
void render_gene_protein(const KnowledgeStore& store, std::uint64_t seed, const CorpusConfig& config,
                         const ExampleSink& sink, SkipCounts& skips);

/// Gene-protein-phenotype triple contexts (PROT_MOLECULAR,
/// PROT_PATHOGENESIS, GENE_INHERITANCE) in positive polarity for linked
/// pairs and negative polarity for sampled non-associated pairs
/// (negative_ratio negatives per positive; a shortfall is recorded in
/// skips instead of failing).
void render_triples(const KnowledgeStore& store, std::uint64_t seed, const CorpusConfig& config,
                    const ExampleSink& sink, SkipCounts& skips);

/// Uniform sample from the complement of positive_pairs() over stored
/// genes x phenotypes; deterministic under seed, no duplicates. Requested
/// count is round(ratio * |positives|); throws DataError reporting the
/// maximum available when the complement is too small.
std::vector<std::pair<std::int64_t, std::string>> sample_negatives(const KnowledgeStore& store,
                                                                   double ratio, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Balancing and splitting
// ---------------------------------------------------------------------------

enum class BalanceMode { None, DownsampleToMin };

struct SplitResult {
  std::vector<CorpusExample> train;
  std::vector<CorpusExample> validation;
};

/// Stratified split: per-kind validation counts are within +-1 of exact
/// proportionality (largest-remainder allocation); train and validation
/// are disjoint by example_id. DownsampleToMin first downsamples every
/// task kind to the smallest kind count. Throws DataError when val_size
/// >= total.
SplitResult balance_and_split(std::vector<CorpusExample> examples, std::size_t val_size,
                              std::uint64_t seed, BalanceMode mode = BalanceMode::None);

// ---------------------------------------------------------------------------
// Corpus building (streaming)
// ---------------------------------------------------------------------------

struct CorpusOptions {
  std::uint64_t seed = 0;
  double negative_ratio = 1.0;
  std::size_t val_size = 10000;
  BalanceMode balance = BalanceMode::None;
  std::string mask_marker = "<mask>";
  std::optional<std::filesystem::path> template_dir;  // builtin when unset
  int jobs = 1;
  std::string config_hash;  // echoed into the manifest by the CLI
};

/// Renders all three corpus families into per-stage train/validation files
/// under out_dir (stage1.train.jsonl, stage1.validation.jsonl, ...) plus
/// manifest.json. Examples are spooled to temporary files during
/// rendering so memory stays proportional to the example count index, not
/// the corpus text. Output files are sorted by example_id, which makes
/// partitioned rendering (jobs > 1) byte-identical to a single-threaded
/// run. Returns the manifest.
nlohmann::json build_corpus(const KnowledgeStore& store, const CorpusOptions& options,
                            const std::filesystem::path& out_dir);

}  // namespace gpmap
