#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpmap/store.hpp"

namespace gpmap {

// ---------------------------------------------------------------------------
// Source table specs
// ---------------------------------------------------------------------------

enum class SourceTable { GeneInfo, GenePhenotype, GeneProtein, Evidence, DbgapAssoc };

const char* source_table_name(SourceTable t);

/// Describes one flat-file layout: which delimited column feeds which record
/// field. Schemas are configurable because the upstream databases publish
/// many dump variants; the default_*_spec() functions mirror the usual
/// public flat-file conventions. When header is false, column names in the
/// map are 0-based column indices written as decimal strings.
struct SourceTableSpec {
  SourceTable source = SourceTable::GeneInfo;
  char delimiter = '\t';
  bool header = true;
  std::map<std::string, std::string> column_map;  // column name (or index) -> field
  SourceTag provenance = SourceTag::OmimLike;     // tag stamped on produced edges

  static SourceTableSpec load(const std::filesystem::path& path);  // JSON file
  void save(const std::filesystem::path& path) const;
};

SourceTableSpec default_gene_info_spec();
SourceTableSpec default_gene_phenotype_spec();
SourceTableSpec default_gene_protein_spec();
SourceTableSpec default_evidence_spec();
SourceTableSpec default_dbgap_spec();

// ---------------------------------------------------------------------------
// Parse results
// ---------------------------------------------------------------------------

struct Reject {
  std::string source;
  std::size_t row = 0;  // 1-based data row number (header excluded)
  std::string reason;
};

/// Every parser conserves rows: records.size() + rejects.size() == total_rows.
template <typename T>
struct Parsed {
  std::vector<T> records;
  std::vector<Reject> rejects;
  std::size_t total_rows = 0;
};

struct GenePhenotypeRow {
  std::size_t row = 0;
  std::int64_t gene_id = 0;
  PhenotypeRecord phenotype;
  std::optional<std::string> evidence;
};

struct GeneProteinRow {
  std::size_t row = 0;
  ProteinRecord protein;
};

struct EvidenceRecord {
  std::string gene_symbol;
  std::string disease_name;
  std::string sentence;
  bool label = false;  // association asserted or not
};

struct DbgapRow {
  std::size_t row = 0;
  std::string gene_symbol;
  std::string phenotype_id;
  std::string phenotype_name;
};

// Parsers are pure functions over the file bytes; nothing is linked into a
// store here. Rows that fail record invariants land in the rejects list
// with their row number instead of being dropped. A missing mandatory
// column raises DataError before any row is read.

Parsed<GeneRecord> parse_gene_info(const std::filesystem::path& path, const SourceTableSpec& spec);
Parsed<GenePhenotypeRow> parse_gene_phenotype(const std::filesystem::path& path,
                                              const SourceTableSpec& spec);
Parsed<GeneProteinRow> parse_gene_protein(const std::filesystem::path& path,
                                          const SourceTableSpec& spec);
Parsed<EvidenceRecord> parse_evidence(const std::filesystem::path& path, const SourceTableSpec& spec);
Parsed<DbgapRow> parse_dbgap(const std::filesystem::path& path, const SourceTableSpec& spec);

// ---------------------------------------------------------------------------
// Linking
// ---------------------------------------------------------------------------

/// Accumulates parsed rows into a store. Rows are applied in canonical
/// (content-sorted) order so shuffled inputs produce an identical frozen
/// store. Gene-phenotype rows naming a gene that is not stored yet are
/// deferred and retried in finish(); still-unresolved rows become rejects.
class IngestSession {
 public:
  explicit IngestSession(KnowledgeStore& store) : store_(store) {}

  void add_genes(Parsed<GeneRecord>&& parsed);
  void add_gene_proteins(Parsed<GeneProteinRow>&& parsed, SourceTag provenance);
  void add_gene_phenotypes(Parsed<GenePhenotypeRow>&& parsed, SourceTag provenance);

  /// Marks edges confirmed by a dbGaP-like table (symbol/alias-insensitive
  /// gene matching) and appends table-only pairs as new unverified
  /// DBGAP_LIKE edges. Never deletes an edge.
  void crosscheck(Parsed<DbgapRow>&& parsed);

  /// Resolves deferred links; afterwards rejects() is complete.
  void finish();

  const std::vector<Reject>& rejects() const { return rejects_; }

 private:
  void link_one(const GenePhenotypeRow& row, SourceTag provenance);

  KnowledgeStore& store_;
  std::vector<GenePhenotypeRow> deferred_;
  std::vector<SourceTag> deferred_sources_;
  std::vector<Reject> rejects_;
  bool finished_ = false;
};

void write_rejects_report(const std::filesystem::path& path, const std::vector<Reject>& rejects);

}  // namespace gpmap
