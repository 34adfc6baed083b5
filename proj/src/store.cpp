#include "gpmap/store.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace gpmap {

using nlohmann::json;

const char* entity_kind_name(EntityKind k) {
  switch (k) {
    case EntityKind::Gene: return "gene";
    case EntityKind::Protein: return "protein";
    case EntityKind::Phenotype: return "phenotype";
  }
  return "?";
}

EntityRef gene_ref(std::int64_t gene_id) { return {EntityKind::Gene, std::to_string(gene_id)}; }
EntityRef protein_ref(std::string accession) { return {EntityKind::Protein, std::move(accession)}; }
EntityRef phenotype_ref(std::string phenotype_id) { return {EntityKind::Phenotype, std::move(phenotype_id)}; }

const char* edge_kind_name(EdgeKind k) {
  switch (k) {
    case EdgeKind::GenePhenotype: return "gene_phenotype";
    case EdgeKind::GeneProtein: return "gene_protein";
    case EdgeKind::ProteinPhenotype: return "protein_phenotype";
  }
  return "?";
}

const char* source_tag_name(SourceTag s) {
  switch (s) {
    case SourceTag::OmimLike: return "omim_like";
    case SourceTag::DisgenetLike: return "disgenet_like";
    case SourceTag::DbgapLike: return "dbgap_like";
    case SourceTag::UniprotLike: return "uniprot_like";
  }
  return "?";
}

EdgeKind edge_kind_from_name(const std::string& s) {
  if (s == "gene_phenotype") return EdgeKind::GenePhenotype;
  if (s == "gene_protein") return EdgeKind::GeneProtein;
  if (s == "protein_phenotype") return EdgeKind::ProteinPhenotype;
  throw DataError("unknown edge kind: " + s);
}

SourceTag source_tag_from_name(const std::string& s) {
  if (s == "omim_like") return SourceTag::OmimLike;
  if (s == "disgenet_like") return SourceTag::DisgenetLike;
  if (s == "dbgap_like") return SourceTag::DbgapLike;
  if (s == "uniprot_like") return SourceTag::UniprotLike;
  throw DataError("unknown source tag: " + s);
}

namespace {

// Set-union merge that keeps first-occurrence order.
void merge_list(std::vector<std::string>& into, const std::vector<std::string>& from) {
  for (const auto& item : from) {
    if (std::find(into.begin(), into.end(), item) == into.end()) into.push_back(item);
  }
}

void validate(const GeneRecord& rec) {
  if (rec.gene_id <= 0) throw DataError("gene_id must be positive");
  if (trim(rec.symbol).empty()) throw DataError("symbol must be nonempty");
  std::set<std::string> seen;
  for (const auto& syn : rec.synonyms) {
    if (syn == rec.symbol) throw DataError("synonyms must not contain symbol");
    if (!seen.insert(syn).second) throw DataError("synonyms must not contain duplicates");
  }
}

void validate(const ProteinRecord& rec) {
  if (trim(rec.accession).empty()) throw DataError("accession must be nonempty");
  if (rec.coding_gene_id <= 0) throw DataError("coding_gene_id must be positive");
}

void validate(const PhenotypeRecord& rec) {
  if (trim(rec.phenotype_id).empty()) throw DataError("phenotype_id must be nonempty");
}

}  // namespace

void KnowledgeStore::require_mutable() const {
  if (frozen_) throw DataError("store is frozen");
}

EntityRef KnowledgeStore::upsert(const GeneRecord& rec) {
  require_mutable();
  validate(rec);
  auto [it, inserted] = genes_.try_emplace(rec.gene_id, rec);
  GeneRecord& g = it->second;
  if (!inserted) {
    if (g.symbol != rec.symbol) {
      // Conflicting symbol from another source becomes a synonym.
      merge_list(g.synonyms, {rec.symbol});
      synonyms_[ascii_lower(rec.symbol)].insert(g.gene_id);
    }
    merge_list(g.synonyms, rec.synonyms);
    merge_list(g.functions, rec.functions);
    if (g.summary.empty()) g.summary = rec.summary;
    g.synonyms.erase(std::remove(g.synonyms.begin(), g.synonyms.end(), g.symbol), g.synonyms.end());
  }
  symbols_[ascii_lower(g.symbol)].insert(g.gene_id);
  for (const auto& syn : g.synonyms) synonyms_[ascii_lower(syn)].insert(g.gene_id);
  return gene_ref(rec.gene_id);
}

EntityRef KnowledgeStore::upsert(const ProteinRecord& rec) {
  require_mutable();
  validate(rec);
  auto [it, inserted] = proteins_.try_emplace(rec.accession, rec);
  ProteinRecord& p = it->second;
  if (!inserted) {
    if (p.coding_gene_id != rec.coding_gene_id) {
      throw DataError("coding_gene_id conflict for accession " + rec.accession);
    }
    merge_list(p.molecular_functions, rec.molecular_functions);
    if (p.name.empty()) p.name = rec.name;
  }
  return protein_ref(rec.accession);
}

EntityRef KnowledgeStore::upsert(const PhenotypeRecord& rec) {
  require_mutable();
  validate(rec);
  auto [it, inserted] = phenotypes_.try_emplace(rec.phenotype_id, rec);
  PhenotypeRecord& p = it->second;
  if (!inserted) {
    if (!rec.name.empty() && p.name != rec.name) {
      if (p.name.empty()) {
        p.name = rec.name;
      } else {
        // Conflicting names across sources are kept as synonyms.
        merge_list(p.synonyms, {rec.name});
      }
    }
    merge_list(p.synonyms, rec.synonyms);
    merge_list(p.inheritance_facts, rec.inheritance_facts);
    if (p.description.empty()) p.description = rec.description;
    if (!p.tissue_label && rec.tissue_label) p.tissue_label = rec.tissue_label;
    p.synonyms.erase(std::remove(p.synonyms.begin(), p.synonyms.end(), p.name), p.synonyms.end());
  }
  if (!p.name.empty()) pheno_names_[ascii_lower(p.name)].insert(p.phenotype_id);
  for (const auto& syn : p.synonyms) pheno_synonyms_[ascii_lower(syn)].insert(p.phenotype_id);
  return phenotype_ref(rec.phenotype_id);
}

std::size_t KnowledgeStore::link_edge(AssociationEdge edge) {
  require_mutable();
  if (!has(edge.subject)) throw DataError("dangling endpoint: " + edge.subject.str());
  if (!has(edge.object)) throw DataError("dangling endpoint: " + edge.object.str());
  auto key = edge.key();
  auto it = edge_index_.find(key);
  if (it != edge_index_.end()) {
    AssociationEdge& existing = edges_[it->second];
    existing.sources.insert(edge.sources.begin(), edge.sources.end());
    existing.verified = existing.verified || edge.verified;
    if (!existing.evidence && edge.evidence) existing.evidence = edge.evidence;
    existing.support += edge.support;
    return it->second;
  }
  edges_.push_back(std::move(edge));
  edge_index_.emplace(std::move(key), edges_.size() - 1);
  return edges_.size() - 1;
}

bool KnowledgeStore::has(const EntityRef& ref) const {
  switch (ref.kind) {
    case EntityKind::Gene: {
      char* end = nullptr;
      long long id = std::strtoll(ref.id.c_str(), &end, 10);
      return end && *end == '\0' && genes_.count(id) > 0;
    }
    case EntityKind::Protein: return proteins_.count(ref.id) > 0;
    case EntityKind::Phenotype: return phenotypes_.count(ref.id) > 0;
  }
  return false;
}

const GeneRecord* KnowledgeStore::find_gene(std::int64_t gene_id) const {
  auto it = genes_.find(gene_id);
  return it == genes_.end() ? nullptr : &it->second;
}

const ProteinRecord* KnowledgeStore::find_protein(const std::string& accession) const {
  auto it = proteins_.find(accession);
  return it == proteins_.end() ? nullptr : &it->second;
}

const PhenotypeRecord* KnowledgeStore::find_phenotype(const std::string& phenotype_id) const {
  auto it = phenotypes_.find(phenotype_id);
  return it == phenotypes_.end() ? nullptr : &it->second;
}

std::optional<EntityRef> KnowledgeStore::resolve_symbol(const std::string& name) const {
  std::string key = ascii_lower(trim(name));
  if (auto it = symbols_.find(key); it != symbols_.end() && !it->second.empty()) {
    return gene_ref(*it->second.begin());
  }
  if (auto it = synonyms_.find(key); it != synonyms_.end() && !it->second.empty()) {
    return gene_ref(*it->second.begin());
  }
  return std::nullopt;
}

std::optional<EntityRef> KnowledgeStore::resolve_phenotype_name(const std::string& name) const {
  std::string key = ascii_lower(trim(name));
  if (auto it = pheno_names_.find(key); it != pheno_names_.end() && !it->second.empty()) {
    return phenotype_ref(*it->second.begin());
  }
  if (auto it = pheno_synonyms_.find(key); it != pheno_synonyms_.end() && !it->second.empty()) {
    return phenotype_ref(*it->second.begin());
  }
  return std::nullopt;
}

std::set<std::pair<std::int64_t, std::string>> KnowledgeStore::positive_pairs() const {
  std::set<std::pair<std::int64_t, std::string>> out;
  for (const auto& e : edges_) {
    if (e.kind != EdgeKind::GenePhenotype) continue;
    out.emplace(std::stoll(e.subject.id), e.object.id);
  }
  return out;
}

std::vector<const AssociationEdge*> KnowledgeStore::edges_of_kind(EdgeKind kind) const {
  std::vector<const AssociationEdge*> out;
  for (const auto& e : edges_) {
    if (e.kind == kind) out.push_back(&e);
  }
  return out;
}

std::vector<const AssociationEdge*> KnowledgeStore::edges_from(const EntityRef& ref) const {
  std::vector<const AssociationEdge*> out;
  for (const auto& e : edges_) {
    if (e.subject == ref || e.object == ref) out.push_back(&e);
  }
  return out;
}

std::vector<const ProteinRecord*> KnowledgeStore::proteins_of_gene(std::int64_t gene_id) const {
  std::vector<const ProteinRecord*> out;
  for (const auto& [acc, p] : proteins_) {
    if (p.coding_gene_id == gene_id) out.push_back(&p);
  }
  return out;
}

std::vector<const GeneRecord*> KnowledgeStore::genes_of_phenotype(const std::string& phenotype_id) const {
  std::vector<const GeneRecord*> out;
  EntityRef target = phenotype_ref(phenotype_id);
  std::set<std::int64_t> seen;
  for (const auto& e : edges_) {
    if (e.kind != EdgeKind::GenePhenotype || !(e.object == target)) continue;
    std::int64_t id = std::stoll(e.subject.id);
    if (seen.insert(id).second) {
      if (const auto* g = find_gene(id)) out.push_back(g);
    }
  }
  return out;
}

std::vector<const PhenotypeRecord*> KnowledgeStore::phenotypes_of_gene(std::int64_t gene_id) const {
  std::vector<const PhenotypeRecord*> out;
  EntityRef source = gene_ref(gene_id);
  std::set<std::string> seen;
  for (const auto& e : edges_) {
    if (e.kind != EdgeKind::GenePhenotype || !(e.subject == source)) continue;
    if (seen.insert(e.object.id).second) {
      if (const auto* p = find_phenotype(e.object.id)) out.push_back(p);
    }
  }
  return out;
}

AssociationEdge* KnowledgeStore::find_edge_mutable(const EntityRef& subject, const EntityRef& object,
                                                   EdgeKind kind) {
  AssociationEdge probe{subject, object, kind, {}, false, std::nullopt, 1};
  auto it = edge_index_.find(probe.key());
  return it == edge_index_.end() ? nullptr : &edges_[it->second];
}

bool KnowledgeStore::operator==(const KnowledgeStore& other) const {
  auto edge_tuple = [](const AssociationEdge& e) {
    return std::tuple(e.subject, e.object, e.kind, e.sources, e.verified, e.evidence, e.support);
  };
  auto sorted_edges = [&](const std::vector<AssociationEdge>& es) {
    std::vector<decltype(edge_tuple(es[0]))> out;
    out.reserve(es.size());
    for (const auto& e : es) out.push_back(edge_tuple(e));
    std::sort(out.begin(), out.end());
    return out;
  };
  auto gene_eq = [](const GeneRecord& a, const GeneRecord& b) {
    return a.gene_id == b.gene_id && a.symbol == b.symbol && a.synonyms == b.synonyms &&
           a.summary == b.summary && a.functions == b.functions;
  };
  auto prot_eq = [](const ProteinRecord& a, const ProteinRecord& b) {
    return a.accession == b.accession && a.name == b.name && a.coding_gene_id == b.coding_gene_id &&
           a.molecular_functions == b.molecular_functions;
  };
  auto pheno_eq = [](const PhenotypeRecord& a, const PhenotypeRecord& b) {
    return a.phenotype_id == b.phenotype_id && a.name == b.name && a.synonyms == b.synonyms &&
           a.description == b.description && a.inheritance_facts == b.inheritance_facts &&
           a.tissue_label == b.tissue_label;
  };
  if (genes_.size() != other.genes_.size() || proteins_.size() != other.proteins_.size() ||
      phenotypes_.size() != other.phenotypes_.size() || edges_.size() != other.edges_.size()) {
    return false;
  }
  for (const auto& [id, g] : genes_) {
    const auto* og = other.find_gene(id);
    if (!og || !gene_eq(g, *og)) return false;
  }
  for (const auto& [id, p] : proteins_) {
    const auto* op = other.find_protein(id);
    if (!op || !prot_eq(p, *op)) return false;
  }
  for (const auto& [id, p] : phenotypes_) {
    const auto* op = other.find_phenotype(id);
    if (!op || !pheno_eq(p, *op)) return false;
  }
  return sorted_edges(edges_) == sorted_edges(other.edges_);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

json ref_to_json(const EntityRef& ref) {
  return json{{"kind", entity_kind_name(ref.kind)}, {"id", ref.id}};
}

EntityRef ref_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  std::string id = j.at("id").get<std::string>();
  if (kind == "gene") return {EntityKind::Gene, id};
  if (kind == "protein") return {EntityKind::Protein, id};
  if (kind == "phenotype") return {EntityKind::Phenotype, id};
  throw DataError("unknown entity kind: " + kind);
}

}  // namespace

void export_store(const KnowledgeStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path.string());

  for (const auto& [id, g] : store.genes()) {
    json j{{"t", "gene"},     {"id", g.gene_id},       {"symbol", g.symbol},
           {"synonyms", g.synonyms}, {"summary", g.summary}, {"functions", g.functions}};
    out << j.dump() << '\n';
  }
  for (const auto& [id, p] : store.proteins()) {
    json j{{"t", "protein"},
           {"id", p.accession},
           {"name", p.name},
           {"gene_id", p.coding_gene_id},
           {"molecular_functions", p.molecular_functions}};
    out << j.dump() << '\n';
  }
  for (const auto& [id, p] : store.phenotypes()) {
    json j{{"t", "phenotype"},
           {"id", p.phenotype_id},
           {"name", p.name},
           {"synonyms", p.synonyms},
           {"description", p.description},
           {"inheritance_facts", p.inheritance_facts}};
    if (p.tissue_label) j["tissue_label"] = *p.tissue_label;
    out << j.dump() << '\n';
  }

  std::vector<const AssociationEdge*> edges;
  edges.reserve(store.edges().size());
  for (const auto& e : store.edges()) edges.push_back(&e);
  std::sort(edges.begin(), edges.end(), [](const AssociationEdge* a, const AssociationEdge* b) {
    return std::tuple(a->subject, a->object, a->kind) < std::tuple(b->subject, b->object, b->kind);
  });
  for (const auto* e : edges) {
    std::vector<std::string> sources;
    for (auto s : e->sources) sources.emplace_back(source_tag_name(s));
    json j{{"t", "edge"},
           {"subject", ref_to_json(e->subject)},
           {"object", ref_to_json(e->object)},
           {"kind", edge_kind_name(e->kind)},
           {"sources", sources},
           {"verified", e->verified},
           {"support", e->support}};
    if (e->evidence) j["evidence"] = *e->evidence;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

KnowledgeStore import_store(const std::filesystem::path& path) {
  KnowledgeStore store;
  std::vector<std::pair<std::size_t, json>> edge_lines;

  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    if (trim(line).empty()) return;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("parse error at line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      std::string t = j.at("t").get<std::string>();
      if (t == "gene") {
        GeneRecord g;
        g.gene_id = j.at("id").get<std::int64_t>();
        g.symbol = j.at("symbol").get<std::string>();
        g.synonyms = j.at("synonyms").get<std::vector<std::string>>();
        g.summary = j.at("summary").get<std::string>();
        g.functions = j.at("functions").get<std::vector<std::string>>();
        store.upsert(g);
      } else if (t == "protein") {
        ProteinRecord p;
        p.accession = j.at("id").get<std::string>();
        p.name = j.at("name").get<std::string>();
        p.coding_gene_id = j.at("gene_id").get<std::int64_t>();
        p.molecular_functions = j.at("molecular_functions").get<std::vector<std::string>>();
        store.upsert(p);
      } else if (t == "phenotype") {
        PhenotypeRecord p;
        p.phenotype_id = j.at("id").get<std::string>();
        p.name = j.at("name").get<std::string>();
        p.synonyms = j.at("synonyms").get<std::vector<std::string>>();
        p.description = j.at("description").get<std::string>();
        p.inheritance_facts = j.at("inheritance_facts").get<std::vector<std::string>>();
        if (j.contains("tissue_label")) p.tissue_label = j["tissue_label"].get<std::string>();
        store.upsert(p);
      } else if (t == "edge") {
        edge_lines.emplace_back(line_no, std::move(j));
      } else {
        throw DataError("unknown record tag: " + t);
      }
    } catch (const json::exception& e) {
      throw DataError("parse error at line " + std::to_string(line_no) + ": " + e.what());
    }
  });

  for (auto& [line_no, j] : edge_lines) {
    try {
      AssociationEdge e;
      e.subject = ref_from_json(j.at("subject"));
      e.object = ref_from_json(j.at("object"));
      e.kind = edge_kind_from_name(j.at("kind").get<std::string>());
      for (const auto& s : j.at("sources")) e.sources.insert(source_tag_from_name(s.get<std::string>()));
      e.verified = j.at("verified").get<bool>();
      e.support = j.at("support").get<std::uint32_t>();
      if (j.contains("evidence")) e.evidence = j["evidence"].get<std::string>();
      store.link_edge(std::move(e));
    } catch (const json::exception& ex) {
      throw DataError("parse error at line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return store;
}

}  // namespace gpmap
