#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gpmap/util.hpp"

namespace gpmap {

// ---------------------------------------------------------------------------
// Entities
// ---------------------------------------------------------------------------

enum class EntityKind { Gene, Protein, Phenotype };

const char* entity_kind_name(EntityKind k);

/// Lightweight reference into the store: kind plus the entity's stable id
/// (genes use the decimal NCBI-style id, proteins the accession, phenotypes
/// the phenotype id string).
struct EntityRef {
  EntityKind kind;
  std::string id;

  bool operator==(const EntityRef&) const = default;
  auto operator<=>(const EntityRef&) const = default;
  std::string str() const { return std::string(entity_kind_name(kind)) + ":" + id; }
};

EntityRef gene_ref(std::int64_t gene_id);
EntityRef protein_ref(std::string accession);
EntityRef phenotype_ref(std::string phenotype_id);

struct GeneRecord {
  std::int64_t gene_id = 0;
  std::string symbol;
  std::vector<std::string> synonyms;
  std::string summary;
  std::vector<std::string> functions;
};

struct ProteinRecord {
  std::string accession;
  std::string name;
  std::int64_t coding_gene_id = 0;
  std::vector<std::string> molecular_functions;
};

struct PhenotypeRecord {
  std::string phenotype_id;  // MIM-style number or source-qualified string
  std::string name;
  std::vector<std::string> synonyms;  // name variants from conflicting sources
  std::string description;
  std::vector<std::string> inheritance_facts;
  std::optional<std::string> tissue_label;
};

enum class EdgeKind { GenePhenotype, GeneProtein, ProteinPhenotype };
enum class SourceTag { OmimLike, DisgenetLike, DbgapLike, UniprotLike };

const char* edge_kind_name(EdgeKind k);
const char* source_tag_name(SourceTag s);
EdgeKind edge_kind_from_name(const std::string& s);
SourceTag source_tag_from_name(const std::string& s);

struct AssociationEdge {
  EntityRef subject;  // gene or protein
  EntityRef object;   // phenotype or protein
  EdgeKind kind = EdgeKind::GenePhenotype;
  std::set<SourceTag> sources;
  bool verified = false;
  std::optional<std::string> evidence;
  // Number of link operations merged into this edge (each supporting row
  // counts as one provenance entry).
  std::uint32_t support = 1;

  std::string key() const { return subject.str() + "|" + object.str() + "|" + edge_kind_name(kind); }
};

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

/// Cross-referenced store of genes, proteins, phenotypes and association
/// edges. Built single-writer, then frozen; frozen stores are safe for
/// unlimited concurrent readers and are the only form the corpus and eval
/// modules accept.
class KnowledgeStore {
 public:
  KnowledgeStore() = default;

  // Upserts. Re-upsert with an identical id merges list fields (set union,
  // first occurrence order kept) and keeps the first non-empty scalar;
  // conflicting gene symbols / phenotype names become synonyms.
  // Throws DataError naming the violated field on invariant violations.
  EntityRef upsert(const GeneRecord& rec);
  EntityRef upsert(const ProteinRecord& rec);
  EntityRef upsert(const PhenotypeRecord& rec);

  /// Links an association edge. Both endpoints must already exist; a
  /// duplicate (subject, object, kind) merges provenance sources and bumps
  /// the support counter. Returns the edge index.
  std::size_t link_edge(AssociationEdge edge);

  bool has(const EntityRef& ref) const;

  const GeneRecord* find_gene(std::int64_t gene_id) const;
  const ProteinRecord* find_protein(const std::string& accession) const;
  const PhenotypeRecord* find_phenotype(const std::string& phenotype_id) const;

  /// Case-insensitive gene lookup: symbol first, then synonyms; ties broken
  /// by lowest gene_id. Returns nullopt when unknown.
  std::optional<EntityRef> resolve_symbol(const std::string& name) const;

  /// Case-insensitive phenotype lookup by name, then name synonyms; ties
  /// broken by lowest phenotype_id (lexicographic).
  std::optional<EntityRef> resolve_phenotype_name(const std::string& name) const;

  /// Exactly the distinct GENE_PHENOTYPE pairs currently linked.
  std::set<std::pair<std::int64_t, std::string>> positive_pairs() const;

  const std::map<std::int64_t, GeneRecord>& genes() const { return genes_; }
  const std::map<std::string, ProteinRecord>& proteins() const { return proteins_; }
  const std::map<std::string, PhenotypeRecord>& phenotypes() const { return phenotypes_; }
  const std::vector<AssociationEdge>& edges() const { return edges_; }

  std::vector<const AssociationEdge*> edges_of_kind(EdgeKind kind) const;
  std::vector<const AssociationEdge*> edges_from(const EntityRef& ref) const;
  std::vector<const ProteinRecord*> proteins_of_gene(std::int64_t gene_id) const;
  std::vector<const GeneRecord*> genes_of_phenotype(const std::string& phenotype_id) const;
  std::vector<const PhenotypeRecord*> phenotypes_of_gene(std::int64_t gene_id) const;

  AssociationEdge* find_edge_mutable(const EntityRef& subject, const EntityRef& object, EdgeKind kind);

  std::size_t entity_count() const { return genes_.size() + proteins_.size() + phenotypes_.size(); }

  /// Freezes the store. Mutating calls afterwards throw DataError.
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  bool operator==(const KnowledgeStore& other) const;

 private:
  void require_mutable() const;

  std::map<std::int64_t, GeneRecord> genes_;
  std::map<std::string, ProteinRecord> proteins_;
  std::map<std::string, PhenotypeRecord> phenotypes_;
  std::vector<AssociationEdge> edges_;
  std::unordered_map<std::string, std::size_t> edge_index_;          // key() -> index
  std::unordered_map<std::string, std::set<std::int64_t>> symbols_;  // casefolded symbol -> gene ids
  std::unordered_map<std::string, std::set<std::int64_t>> synonyms_;
  std::unordered_map<std::string, std::set<std::string>> pheno_names_;
  std::unordered_map<std::string, std::set<std::string>> pheno_synonyms_;
  bool frozen_ = false;
};

// ---------------------------------------------------------------------------
// Canonical serialization
// ---------------------------------------------------------------------------
// UTF-8, line-delimited; each line a tagged JSON record
// {"t":"gene"|"protein"|"phenotype"|"edge", ...} with keys sorted. Lines are
// ordered gene, protein, phenotype, edge; within a tag, sorted by id (genes
// numerically, others lexicographically; edges by (subject, object, kind)).

void export_store(const KnowledgeStore& store, const std::filesystem::path& path);
KnowledgeStore import_store(const std::filesystem::path& path);

}  // namespace gpmap
