#include "gpmap/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gpmap {

using nlohmann::json;

const char* source_table_name(SourceTable t) {
  switch (t) {
    case SourceTable::GeneInfo: return "gene_info";
    case SourceTable::GenePhenotype: return "gene_phenotype";
    case SourceTable::GeneProtein: return "gene_protein";
    case SourceTable::Evidence: return "evidence";
    case SourceTable::DbgapAssoc: return "dbgap_assoc";
  }
  return "?";
}

namespace {

SourceTable source_table_from_name(const std::string& s) {
  if (s == "gene_info") return SourceTable::GeneInfo;
  if (s == "gene_phenotype") return SourceTable::GenePhenotype;
  if (s == "gene_protein") return SourceTable::GeneProtein;
  if (s == "evidence") return SourceTable::Evidence;
  if (s == "dbgap_assoc") return SourceTable::DbgapAssoc;
  throw DataError("unknown source table: " + s);
}

// RFC-4180-style split: double quotes protect delimiters, "" escapes a
// literal quote. Quoted fields may not span lines.
std::vector<std::string> split_row(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '"') {
      if (in_quotes && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else {
        in_quotes = !in_quotes;
      }
    } else if (c == delim && !in_quotes) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

class RowReader {
 public:
  RowReader(const std::filesystem::path& path, const SourceTableSpec& spec,
            const std::vector<std::string>& mandatory_fields) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::string line;
    std::vector<std::vector<std::string>> raw;
    bool header_pending = spec.header;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto fields = split_row(line, spec.delimiter);
      if (header_pending) {
        header = std::move(fields);
        // leading '#' on the first header column is dump convention noise
        if (!header.empty() && !header[0].empty() && header[0][0] == '#') header[0].erase(0, 1);
        header_pending = false;
        continue;
      }
      raw.push_back(std::move(fields));
    }

    for (const auto& [column, field] : spec.column_map) {
      std::size_t idx;
      if (spec.header) {
        auto it = std::find(header.begin(), header.end(), column);
        if (it == header.end()) {
          // optional bindings may be absent from a given dump; mandatory
          // ones are checked below and error out before any row is read
          bool mandatory = std::find(mandatory_fields.begin(), mandatory_fields.end(), field) !=
                           mandatory_fields.end();
          if (mandatory) {
            throw DataError(std::string(source_table_name(spec.source)) + ": column \"" + column +
                            "\" not found in header");
          }
          continue;
        }
        idx = static_cast<std::size_t>(it - header.begin());
      } else {
        try {
          idx = std::stoul(column);
        } catch (const std::exception&) {
          throw DataError(std::string(source_table_name(spec.source)) +
                          ": headerless specs need numeric column indices, got \"" + column + "\"");
        }
      }
      bindings_[field] = idx;
    }
    for (const auto& f : mandatory_fields) {
      if (!bindings_.count(f)) {
        throw DataError(std::string(source_table_name(spec.source)) + ": no column mapped to mandatory field \"" +
                        f + "\"");
      }
    }
    rows_ = std::move(raw);
  }

  std::size_t row_count() const { return rows_.size(); }

  bool bound(const std::string& field) const { return bindings_.count(field) > 0; }

  /// Returns the trimmed cell for a field, or nullopt when the field is
  /// unbound or the row is too short.
  std::optional<std::string> cell(std::size_t row, const std::string& field) const {
    auto it = bindings_.find(field);
    if (it == bindings_.end()) return std::nullopt;
    const auto& r = rows_[row];
    if (it->second >= r.size()) return std::nullopt;
    return trim(r[it->second]);
  }

  /// Mandatory cell: throws a reject-worthy reason if absent.
  std::string require(std::size_t row, const std::string& field) const {
    auto v = cell(row, field);
    if (!v) throw DataError("missing value for column bound to \"" + field + "\"");
    return *v;
  }

 private:
  std::map<std::string, std::size_t> bindings_;
  std::vector<std::vector<std::string>> rows_;
};

std::int64_t parse_gene_id(const std::string& s) {
  if (s.empty()) throw DataError("gene_id is empty");
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (!end || *end != '\0') throw DataError("gene_id \"" + s + "\" is not an integer");
  if (v <= 0) throw DataError("gene_id must be positive");
  return v;
}

bool parse_bool_label(const std::string& s) {
  std::string v = ascii_lower(s);
  if (v == "1" || v == "true" || v == "yes" || v == "y" || v == "t") return true;
  if (v == "0" || v == "false" || v == "no" || v == "n" || v == "f") return false;
  throw DataError("label \"" + s + "\" is not a boolean");
}

}  // namespace

// ---------------------------------------------------------------------------
// Default specs
// ---------------------------------------------------------------------------

SourceTableSpec default_gene_info_spec() {
  SourceTableSpec s;
  s.source = SourceTable::GeneInfo;
  s.delimiter = '\t';
  s.header = true;
  s.column_map = {{"GeneID", "gene_id"},     {"Symbol", "symbol"},     {"Synonyms", "synonyms"},
                  {"description", "summary"}, {"Functions", "functions"}};
  return s;
}

SourceTableSpec default_gene_phenotype_spec() {
  SourceTableSpec s;
  s.source = SourceTable::GenePhenotype;
  s.delimiter = '\t';
  s.header = true;
  s.provenance = SourceTag::OmimLike;
  s.column_map = {{"GeneID", "gene_id"},        {"MIM", "phenotype_id"},
                  {"Phenotype", "phenotype_name"}, {"Description", "description"},
                  {"Inheritance", "inheritance"},  {"Tissue", "tissue"},
                  {"Evidence", "evidence"}};
  return s;
}

SourceTableSpec default_gene_protein_spec() {
  SourceTableSpec s;
  s.source = SourceTable::GeneProtein;
  s.delimiter = '\t';
  s.header = true;
  s.provenance = SourceTag::UniprotLike;
  s.column_map = {{"Accession", "accession"},
                  {"GeneID", "gene_id"},
                  {"Name", "protein_name"},
                  {"MolecularFunctions", "molecular_functions"}};
  return s;
}

SourceTableSpec default_evidence_spec() {
  SourceTableSpec s;
  s.source = SourceTable::Evidence;
  s.delimiter = ',';
  s.header = true;
  s.provenance = SourceTag::DisgenetLike;
  s.column_map = {{"GeneSymbol", "gene_symbol"},
                  {"Disease", "disease_name"},
                  {"Sentence", "sentence"},
                  {"Label", "label"}};
  return s;
}

SourceTableSpec default_dbgap_spec() {
  SourceTableSpec s;
  s.source = SourceTable::DbgapAssoc;
  s.delimiter = '\t';
  s.header = true;
  s.provenance = SourceTag::DbgapLike;
  s.column_map = {{"GeneSymbol", "gene_symbol"},
                  {"PhenotypeID", "phenotype_id"},
                  {"PhenotypeName", "phenotype_name"}};
  return s;
}

SourceTableSpec SourceTableSpec::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw DataError("spec file " + path.string() + ": " + e.what());
  }
  SourceTableSpec s;
  for (const auto& [key, value] : j.items()) {
    if (key == "source") {
      s.source = source_table_from_name(value.get<std::string>());
    } else if (key == "delimiter") {
      std::string d = value.get<std::string>();
      if (d == "\\t" || d == "tab") d = "\t";
      if (d.size() != 1) throw DataError("spec delimiter must be a single character");
      s.delimiter = d[0];
    } else if (key == "header") {
      s.header = value.get<bool>();
    } else if (key == "column_map") {
      s.column_map.clear();
      for (const auto& [col, field] : value.items()) s.column_map[col] = field.get<std::string>();
    } else if (key == "provenance") {
      s.provenance = source_tag_from_name(value.get<std::string>());
    } else {
      throw DataError("spec file " + path.string() + ": unknown key \"" + key + "\"");
    }
  }
  return s;
}

void SourceTableSpec::save(const std::filesystem::path& path) const {
  json cols = json::object();
  for (const auto& [col, field] : column_map) cols[col] = field;
  std::string delim = delimiter == '\t' ? "\\t" : std::string(1, delimiter);
  json j{{"source", source_table_name(source)},
         {"delimiter", delim},
         {"header", header},
         {"column_map", cols},
         {"provenance", source_tag_name(provenance)}};
  write_text_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Parsers
// ---------------------------------------------------------------------------

Parsed<GeneRecord> parse_gene_info(const std::filesystem::path& path, const SourceTableSpec& spec) {
  RowReader reader(path, spec, {"gene_id", "symbol"});
  Parsed<GeneRecord> out;
  out.total_rows = reader.row_count();
  for (std::size_t i = 0; i < reader.row_count(); ++i) {
    try {
      GeneRecord g;
      g.gene_id = parse_gene_id(reader.require(i, "gene_id"));
      g.symbol = reader.require(i, "symbol");
      if (g.symbol.empty()) throw DataError("symbol is empty");
      if (auto v = reader.cell(i, "synonyms")) g.synonyms = split_list_field(*v);
      if (auto v = reader.cell(i, "summary"); v && *v != "-") g.summary = *v;
      if (auto v = reader.cell(i, "functions")) g.functions = split_list_field(*v);
      // the symbol never doubles as its own synonym
      g.synonyms.erase(std::remove(g.synonyms.begin(), g.synonyms.end(), g.symbol), g.synonyms.end());
      auto last = std::unique(g.synonyms.begin(), g.synonyms.end());
      g.synonyms.erase(last, g.synonyms.end());
      out.records.push_back(std::move(g));
    } catch (const DataError& e) {
      out.rejects.push_back({source_table_name(spec.source), i + 1, e.what()});
    }
  }
  return out;
}

Parsed<GenePhenotypeRow> parse_gene_phenotype(const std::filesystem::path& path,
                                              const SourceTableSpec& spec) {
  RowReader reader(path, spec, {"gene_id", "phenotype_id", "phenotype_name"});
  Parsed<GenePhenotypeRow> out;
  out.total_rows = reader.row_count();
  for (std::size_t i = 0; i < reader.row_count(); ++i) {
    try {
      GenePhenotypeRow row;
      row.row = i + 1;
      row.gene_id = parse_gene_id(reader.require(i, "gene_id"));
      row.phenotype.phenotype_id = reader.require(i, "phenotype_id");
      if (row.phenotype.phenotype_id.empty()) throw DataError("phenotype_id is empty");
      row.phenotype.name = reader.require(i, "phenotype_name");
      if (auto v = reader.cell(i, "description"); v && *v != "-") row.phenotype.description = *v;
      if (auto v = reader.cell(i, "inheritance")) row.phenotype.inheritance_facts = split_list_field(*v);
      if (auto v = reader.cell(i, "tissue"); v && !v->empty() && *v != "-") row.phenotype.tissue_label = *v;
      if (auto v = reader.cell(i, "evidence"); v && !v->empty() && *v != "-") row.evidence = *v;
      out.records.push_back(std::move(row));
    } catch (const DataError& e) {
      out.rejects.push_back({source_table_name(spec.source), i + 1, e.what()});
    }
  }
  return out;
}

Parsed<GeneProteinRow> parse_gene_protein(const std::filesystem::path& path,
                                          const SourceTableSpec& spec) {
  RowReader reader(path, spec, {"accession", "gene_id"});
  Parsed<GeneProteinRow> out;
  out.total_rows = reader.row_count();
  for (std::size_t i = 0; i < reader.row_count(); ++i) {
    try {
      GeneProteinRow row;
      row.row = i + 1;
      row.protein.accession = reader.require(i, "accession");
      if (row.protein.accession.empty()) throw DataError("accession is empty");
      row.protein.coding_gene_id = parse_gene_id(reader.require(i, "gene_id"));
      if (auto v = reader.cell(i, "protein_name"); v && *v != "-") row.protein.name = *v;
      if (auto v = reader.cell(i, "molecular_functions")) {
        row.protein.molecular_functions = split_list_field(*v);
      }
      out.records.push_back(std::move(row));
    } catch (const DataError& e) {
      out.rejects.push_back({source_table_name(spec.source), i + 1, e.what()});
    }
  }
  return out;
}

Parsed<EvidenceRecord> parse_evidence(const std::filesystem::path& path, const SourceTableSpec& spec) {
  RowReader reader(path, spec, {"gene_symbol", "disease_name", "sentence", "label"});
  Parsed<EvidenceRecord> out;
  out.total_rows = reader.row_count();
  for (std::size_t i = 0; i < reader.row_count(); ++i) {
    try {
      EvidenceRecord rec;
      rec.gene_symbol = reader.require(i, "gene_symbol");
      if (rec.gene_symbol.empty()) throw DataError("gene_symbol is empty");
      rec.disease_name = reader.require(i, "disease_name");
      if (rec.disease_name.empty()) throw DataError("disease_name is empty");
      rec.sentence = reader.require(i, "sentence");
      if (rec.sentence.empty()) throw DataError("sentence is empty");
      rec.label = parse_bool_label(reader.require(i, "label"));
      out.records.push_back(std::move(rec));
    } catch (const DataError& e) {
      out.rejects.push_back({source_table_name(spec.source), i + 1, e.what()});
    }
  }
  return out;
}

Parsed<DbgapRow> parse_dbgap(const std::filesystem::path& path, const SourceTableSpec& spec) {
  RowReader reader(path, spec, {"gene_symbol", "phenotype_id"});
  Parsed<DbgapRow> out;
  out.total_rows = reader.row_count();
  for (std::size_t i = 0; i < reader.row_count(); ++i) {
    try {
      DbgapRow row;
      row.row = i + 1;
      row.gene_symbol = reader.require(i, "gene_symbol");
      if (row.gene_symbol.empty()) throw DataError("gene_symbol is empty");
      row.phenotype_id = reader.require(i, "phenotype_id");
      if (row.phenotype_id.empty()) throw DataError("phenotype_id is empty");
      if (auto v = reader.cell(i, "phenotype_name")) row.phenotype_name = *v;
      out.records.push_back(std::move(row));
    } catch (const DataError& e) {
      out.rejects.push_back({source_table_name(spec.source), i + 1, e.what()});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linking
// ---------------------------------------------------------------------------

namespace {

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out.push_back(sep);
    out += p;
  }
  return out;
}

}  // namespace

void IngestSession::add_genes(Parsed<GeneRecord>&& parsed) {
  for (auto& r : parsed.rejects) rejects_.push_back(std::move(r));
  std::sort(parsed.records.begin(), parsed.records.end(), [](const GeneRecord& a, const GeneRecord& b) {
    return std::tuple(a.gene_id, a.symbol, join(a.synonyms, '|'), a.summary, join(a.functions, '|')) <
           std::tuple(b.gene_id, b.symbol, join(b.synonyms, '|'), b.summary, join(b.functions, '|'));
  });
  for (const auto& g : parsed.records) store_.upsert(g);
}

void IngestSession::add_gene_proteins(Parsed<GeneProteinRow>&& parsed, SourceTag provenance) {
  for (auto& r : parsed.rejects) rejects_.push_back(std::move(r));
  std::sort(parsed.records.begin(), parsed.records.end(),
            [](const GeneProteinRow& a, const GeneProteinRow& b) {
              return std::tuple(a.protein.accession, a.protein.coding_gene_id, a.protein.name,
                                join(a.protein.molecular_functions, '|')) <
                     std::tuple(b.protein.accession, b.protein.coding_gene_id, b.protein.name,
                                join(b.protein.molecular_functions, '|'));
            });
  for (const auto& row : parsed.records) {
    if (!store_.find_gene(row.protein.coding_gene_id)) {
      rejects_.push_back({"gene_protein", row.row,
                          "unknown gene_id " + std::to_string(row.protein.coding_gene_id)});
      continue;
    }
    try {
      store_.upsert(row.protein);
      AssociationEdge e;
      e.subject = gene_ref(row.protein.coding_gene_id);
      e.object = protein_ref(row.protein.accession);
      e.kind = EdgeKind::GeneProtein;
      e.sources = {provenance};
      store_.link_edge(std::move(e));
    } catch (const DataError& err) {
      rejects_.push_back({"gene_protein", row.row, err.what()});
    }
  }
}

void IngestSession::add_gene_phenotypes(Parsed<GenePhenotypeRow>&& parsed, SourceTag provenance) {
  for (auto& r : parsed.rejects) rejects_.push_back(std::move(r));
  auto key = [](const GenePhenotypeRow& r) {
    return std::tuple(r.gene_id, r.phenotype.phenotype_id, r.phenotype.name,
                      r.phenotype.description, join(r.phenotype.inheritance_facts, '|'),
                      r.phenotype.tissue_label.value_or(""), r.evidence.value_or(""));
  };
  std::sort(parsed.records.begin(), parsed.records.end(),
            [&](const GenePhenotypeRow& a, const GenePhenotypeRow& b) { return key(a) < key(b); });
  for (auto& row : parsed.records) {
    if (!store_.find_gene(row.gene_id)) {
      deferred_.push_back(std::move(row));
      deferred_sources_.push_back(provenance);
      continue;
    }
    link_one(row, provenance);
  }
}

void IngestSession::link_one(const GenePhenotypeRow& row, SourceTag provenance) {
  try {
    store_.upsert(row.phenotype);
    AssociationEdge e;
    e.subject = gene_ref(row.gene_id);
    e.object = phenotype_ref(row.phenotype.phenotype_id);
    e.kind = EdgeKind::GenePhenotype;
    e.sources = {provenance};
    e.evidence = row.evidence;
    store_.link_edge(std::move(e));
  } catch (const DataError& err) {
    rejects_.push_back({"gene_phenotype", row.row, err.what()});
  }
}

void IngestSession::crosscheck(Parsed<DbgapRow>&& parsed) {
  for (auto& r : parsed.rejects) rejects_.push_back(std::move(r));
  std::sort(parsed.records.begin(), parsed.records.end(), [](const DbgapRow& a, const DbgapRow& b) {
    return std::tuple(a.gene_symbol, a.phenotype_id, a.phenotype_name, a.row) <
           std::tuple(b.gene_symbol, b.phenotype_id, b.phenotype_name, b.row);
  });
  // Snapshot the pre-existing pairs: "verified" means an already-linked edge
  // was confirmed by the table, not that the table mentioned itself.
  std::set<std::string> existing;
  for (const auto& e : store_.edges()) {
    if (e.kind == EdgeKind::GenePhenotype) existing.insert(e.key());
  }
  for (const auto& row : parsed.records) {
    auto gene = store_.resolve_symbol(row.gene_symbol);
    if (!gene) {
      rejects_.push_back({"dbgap_assoc", row.row, "unknown gene symbol \"" + row.gene_symbol + "\""});
      continue;
    }
    AssociationEdge probe;
    probe.subject = *gene;
    probe.object = phenotype_ref(row.phenotype_id);
    probe.kind = EdgeKind::GenePhenotype;
    bool pair_known = existing.count(probe.key()) > 0;
    if (!store_.find_phenotype(row.phenotype_id)) {
      PhenotypeRecord p;
      p.phenotype_id = row.phenotype_id;
      p.name = row.phenotype_name.empty() ? row.phenotype_id : row.phenotype_name;
      store_.upsert(p);
    }
    AssociationEdge e;
    e.subject = *gene;
    e.object = phenotype_ref(row.phenotype_id);
    e.kind = EdgeKind::GenePhenotype;
    e.sources = {SourceTag::DbgapLike};
    e.verified = pair_known;
    store_.link_edge(std::move(e));
    if (pair_known) {
      store_.find_edge_mutable(*gene, phenotype_ref(row.phenotype_id), EdgeKind::GenePhenotype)
          ->verified = true;
    }
  }
}

void IngestSession::finish() {
  if (finished_) return;
  finished_ = true;
  for (std::size_t i = 0; i < deferred_.size(); ++i) {
    auto& row = deferred_[i];
    if (!store_.find_gene(row.gene_id)) {
      rejects_.push_back(
          {"gene_phenotype", row.row, "unknown gene_id " + std::to_string(row.gene_id)});
      continue;
    }
    link_one(row, deferred_sources_[i]);
  }
  deferred_.clear();
  deferred_sources_.clear();
}

void write_rejects_report(const std::filesystem::path& path, const std::vector<Reject>& rejects) {
  std::ostringstream out;
  out << "source\trow\treason\n";
  for (const auto& r : rejects) {
    std::string reason = r.reason;
    for (char& c : reason) {
      if (c == '\t' || c == '\n') c = ' ';
    }
    out << r.source << '\t' << r.row << '\t' << reason << '\n';
  }
  write_text_file(path, out.str());
}

}  // namespace gpmap
