#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpmap/ingest.hpp"
#include "gpmap/metrics.hpp"
#include "gpmap/store.hpp"

namespace gpmap {

// ---------------------------------------------------------------------------
// QA items
// ---------------------------------------------------------------------------

enum class Direction { PhenoToGene, GeneToPheno };
enum class QaStyle { Question, Completion };

const char* direction_name(Direction d);
const char* qa_style_name(QaStyle s);
Direction direction_from_name(const std::string& s);
QaStyle qa_style_from_name(const std::string& s);

struct QaItem {
  std::string item_id;
  Direction direction = Direction::PhenoToGene;
  QaStyle style = QaStyle::Question;
  std::string prompt_text;
  std::vector<GoldEntity> gold_entities;
  std::string keyword_reference;            // shortest gold name
  std::vector<std::string> gold_sentences;  // one rendered gold answer per entity
};

/// Samples n distinct gene-phenotype pairs without replacement and renders
/// one QA item per pair. For PHENO_TO_GENE the gold set is every gene of
/// that disease; GENE_TO_PHENO mirrors it. Throws DataError (reporting the
/// maximum) when n exceeds the usable pair count.
std::vector<QaItem> make_qa_items(const KnowledgeStore& store, std::size_t n, std::uint64_t seed,
                                  Direction direction, QaStyle style = QaStyle::Question);

void write_qa_items(const std::filesystem::path& path, const std::vector<QaItem>& items);
std::vector<QaItem> read_qa_items(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Relation items
// ---------------------------------------------------------------------------

struct RelationItem {
  std::string item_id;
  std::string gene;
  std::string disease;
  std::string evidence;
  bool gold = false;
  std::vector<std::string> prompt_variants;
};

struct ScreeningReport {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t dropped = 0;
  std::map<std::string, std::size_t> drop_reasons;
};

std::vector<std::string> default_relation_variants();
std::vector<std::string> load_relation_variants(const std::filesystem::path& path);

/// Screens evidence records against the store's positive pair set (an item
/// is kept only when its label agrees with the store) and attaches
/// variants_k prompt phrasings per item. Conservation: kept + dropped ==
/// total.
std::vector<RelationItem> make_relation_items(const std::vector<EvidenceRecord>& evidence,
                                              const KnowledgeStore& store, int variants_k,
                                              std::uint64_t seed,
                                              const std::vector<std::string>& variant_templates,
                                              ScreeningReport* report = nullptr);

void write_relation_items(const std::filesystem::path& path, const std::vector<RelationItem>& items);
std::vector<RelationItem> read_relation_items(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Answer parsing and mixed-prompt aggregation
// ---------------------------------------------------------------------------

enum class YesNo { Yes, No, Unparseable };

const char* yesno_name(YesNo v);

struct YesNoLexicon {
  std::vector<std::string> affirmative{"yes", "true", "associated"};
  std::vector<std::string> negative{"no", "not", "false", "unrelated"};

  static YesNoLexicon load(const std::filesystem::path& path);  // JSON file
};

/// First word-boundary keyword match in the normalized text decides; no
/// match at all is UNPARSEABLE.
YesNo parse_yesno(std::string_view raw, const YesNoLexicon& lexicon = YesNoLexicon{});

enum class AggregationMode { OracleBest, Majority };

const char* aggregation_mode_name(AggregationMode m);
AggregationMode aggregation_mode_from_name(const std::string& s);

/// Collapses one item's per-variant parses into a single prediction.
/// ORACLE_BEST reproduces the protocol of picking the best answer: the
/// gold label wins when any variant produced it, otherwise the majority of
/// parsed labels. MAJORITY ignores gold; ties are UNPARSEABLE.
YesNo aggregate_mixed(const std::vector<YesNo>& answers, AggregationMode mode, bool gold);

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

using AnswerKey = std::pair<std::string, int>;  // (item_id, variant_index)
using AnswerMap = std::map<AnswerKey, std::string>;

struct QaScoreConfig {
  int max_n = 4;
  Smoothing smoothing = Smoothing::AddOne;
  Stoplist stoplist = Stoplist::defaults();
};

struct EvalReport {
  std::map<std::string, double> metrics;
  std::vector<std::string> item_columns;
  std::vector<std::vector<std::string>> item_rows;
  nlohmann::json config_echo = nlohmann::json::object();
  nlohmann::json counts = nlohmann::json::object();
};

/// Scores one answer per QA item: BLEU against the gold sentence set,
/// keyword BLEU-1 against the keyword reference, and stem-token entity
/// accuracy aggregated per direction (acc_g_p / acc_p_g). Throws DataError
/// listing item ids that lack answers.
EvalReport score_qa(const std::vector<QaItem>& items, const AnswerMap& answers,
                    const QaScoreConfig& config = QaScoreConfig{});

/// Scores one aggregated prediction per relation item with YES as the
/// positive class; UNPARSEABLE predictions count as wrong on whichever
/// side the gold falls.
EvalReport score_relation(const std::vector<RelationItem>& items,
                          const std::map<std::string, YesNo>& predictions,
                          AggregationMode mode_echo = AggregationMode::OracleBest);

/// Writes base.json (metrics + config echo + counts) and base.items.tsv.
void write_report(const EvalReport& report, const std::filesystem::path& base);

}  // namespace gpmap
