#pragma once

// Shared synthetic fixtures for the test suites.

#include <cstdint>
#include <string>

#include "gpmap/store.hpp"

namespace gpmap::testing {

struct SyntheticSpec {
  std::size_t genes = 100;
  std::size_t phenotypes = 40;
  std::size_t proteins_per_gene = 1;
  std::size_t edges_per_gene = 2;
  bool with_function_text = true;
};

inline KnowledgeStore make_synthetic_store(const SyntheticSpec& spec) {
  KnowledgeStore store;
  const char* tissues[] = {"brain", "heart", "liver", "kidney"};
  for (std::size_t j = 0; j < spec.phenotypes; ++j) {
    PhenotypeRecord p;
    p.phenotype_id = std::to_string(600000 + j);
    p.name = "Synthetic disease " + std::to_string(j);
    p.description = "Pathway alteration pattern " + std::to_string(j) + " with downstream effects.";
    p.inheritance_facts = {"autosomal dominant inheritance, cohort " + std::to_string(j % 7)};
    p.tissue_label = tissues[j % 4];
    store.upsert(p);
  }
  for (std::size_t i = 0; i < spec.genes; ++i) {
    GeneRecord g;
    g.gene_id = static_cast<std::int64_t>(i + 1);
    g.symbol = "GENE" + std::to_string(i + 1);
    g.synonyms = {"G" + std::to_string(i + 1) + "ALT"};
    g.summary = "Synthetic gene " + std::to_string(i + 1) + " involved in pathway signaling.";
    if (spec.with_function_text) {
      g.functions = {"regulates process " + std::to_string(i % 13),
                     "binds factor " + std::to_string(i % 7)};
    }
    store.upsert(g);
    for (std::size_t k = 0; k < spec.proteins_per_gene; ++k) {
      ProteinRecord pr;
      pr.accession = "PRT" + std::to_string(i + 1) + "_" + std::to_string(k);
      pr.name = "Protein " + std::to_string(i + 1) + "." + std::to_string(k);
      pr.coding_gene_id = g.gene_id;
      if (spec.with_function_text) {
        pr.molecular_functions = {"catalytic activity variant " + std::to_string((i + k) % 11)};
      }
      store.upsert(pr);
      AssociationEdge pe;
      pe.subject = gene_ref(g.gene_id);
      pe.object = protein_ref(pr.accession);
      pe.kind = EdgeKind::GeneProtein;
      pe.sources = {SourceTag::UniprotLike};
      store.link_edge(pe);
    }
    for (std::size_t e = 0; e < spec.edges_per_gene; ++e) {
      std::size_t j = (i * spec.edges_per_gene + e) % spec.phenotypes;
      AssociationEdge edge;
      edge.subject = gene_ref(g.gene_id);
      edge.object = phenotype_ref(std::to_string(600000 + j));
      edge.kind = EdgeKind::GenePhenotype;
      edge.sources = {SourceTag::OmimLike};
      edge.verified = (i + e) % 2 == 0;
      store.link_edge(edge);
    }
  }
  return store;
}

}  // namespace gpmap::testing
