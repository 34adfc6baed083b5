#include "gpmap/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <span>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "gpmap/util.hpp"

namespace gpmap {

using nlohmann::json;

const char* stage_name(Stage s) { return s == Stage::Stage1 ? "stage1" : "stage2"; }

const char* task_kind_name(TaskKind k) {
  switch (k) {
    case TaskKind::MaskedGene: return "masked_gene";
    case TaskKind::MaskedPhenotype: return "masked_phenotype";
    case TaskKind::GeneProteinFunc: return "gene_protein_func";
    case TaskKind::GeneProduct: return "gene_product";
    case TaskKind::ProteinFuncInfer: return "protein_func_infer";
    case TaskKind::GeneFuncInfer: return "gene_func_infer";
    case TaskKind::ProtMolecular: return "prot_molecular";
    case TaskKind::ProtPathogenesis: return "prot_pathogenesis";
    case TaskKind::GeneInheritance: return "gene_inheritance";
  }
  return "?";
}

const char* polarity_name(Polarity p) { return p == Polarity::Positive ? "positive" : "negative"; }

Stage task_stage(TaskKind k) {
  return (k == TaskKind::MaskedGene || k == TaskKind::MaskedPhenotype) ? Stage::Stage1 : Stage::Stage2;
}

TaskKind task_kind_from_name(const std::string& s) {
  for (TaskKind k : kAllTaskKinds) {
    if (s == task_kind_name(k)) return k;
  }
  throw DataError("unknown task kind: " + s);
}

Polarity polarity_from_name(const std::string& s) {
  if (s == "positive") return Polarity::Positive;
  if (s == "negative") return Polarity::Negative;
  throw DataError("unknown polarity: " + s);
}

std::string example_id_for(TaskKind kind, Polarity polarity, const std::vector<std::string>& provenance) {
  std::string blob = std::string(task_kind_name(kind)) + '\x1f' + polarity_name(polarity);
  for (const auto& p : provenance) {
    blob.push_back('\x1e');
    blob += p;
  }
  return to_hex(fnv64(blob));
}

json example_to_json(const CorpusExample& ex) {
  return json{{"example_id", ex.example_id},
              {"stage", stage_name(ex.stage)},
              {"task_kind", task_kind_name(ex.task_kind)},
              {"polarity", polarity_name(ex.polarity)},
              {"task_prompt", ex.task_prompt},
              {"input", ex.input},
              {"output", ex.output},
              {"provenance", ex.provenance}};
}

CorpusExample example_from_json(const json& j) {
  CorpusExample ex;
  ex.example_id = j.at("example_id").get<std::string>();
  ex.stage = j.at("stage").get<std::string>() == "stage1" ? Stage::Stage1 : Stage::Stage2;
  ex.task_kind = task_kind_from_name(j.at("task_kind").get<std::string>());
  ex.polarity = polarity_from_name(j.at("polarity").get<std::string>());
  ex.task_prompt = j.at("task_prompt").get<std::string>();
  ex.input = j.at("input").get<std::string>();
  ex.output = j.at("output").get<std::string>();
  ex.provenance = j.at("provenance").get<std::vector<std::string>>();
  return ex;
}

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

namespace {

const char* kStage1Instruction = "Fill in the masked biomedical entity in the statement.";

TemplateSet make_builtin() {
  auto block = [](std::string sentence) {
    return std::string("### Instruction:\n") + kStage1Instruction + "\n### Input:\n" +
           std::move(sentence) + "\n### Response:";
  };
  const std::string stage1_sentence =
      "In human medical genetics, the gene {gene} is associated with the phenotype {phenotype}.";

  std::map<std::pair<TaskKind, Polarity>, ExampleTemplate> t;
  t[{TaskKind::MaskedGene, Polarity::Positive}] = {kStage1Instruction, block(stage1_sentence), "{gene}"};
  t[{TaskKind::MaskedPhenotype, Polarity::Positive}] = {kStage1Instruction, block(stage1_sentence),
                                                        "{phenotype}"};
  t[{TaskKind::GeneProteinFunc, Polarity::Positive}] = {
      "Describe the molecular function of the protein encoded by the given gene.",
      "Gene: {gene}. Gene functions: {gene_function}. Coding product: {protein}.",
      "The protein {protein} carries out the following molecular functions: {protein_function}."};
  t[{TaskKind::GeneProduct, Polarity::Positive}] = {
      "Identify the protein product encoded by the given gene.",
      "Gene: {gene}. Gene functions: {gene_function}.",
      "The gene {gene} encodes the protein {protein}."};
  t[{TaskKind::ProteinFuncInfer, Polarity::Positive}] = {
      "Identify the protein entity that carries out the given molecular functions.",
      "Molecular functions: {protein_function}.",
      "The protein with these molecular functions is {protein}."};
  t[{TaskKind::GeneFuncInfer, Polarity::Positive}] = {
      "Identify the gene entity based on the given gene functions.",
      "Gene functions: {gene_function}.",
      "The gene with these functions is {gene}."};
  t[{TaskKind::ProtMolecular, Polarity::Positive}] = {
      "Determine the relationship between the protein and the phenotype given the molecular mechanism.",
      "Protein: {protein}. Molecular mechanism: {mechanism}. Phenotype in question: {phenotype}.",
      "The protein {protein} is associated with the phenotype {phenotype} through the described "
      "molecular mechanism."};
  t[{TaskKind::ProtMolecular, Polarity::Negative}] = {
      "Determine the relationship between the protein and the phenotype given the molecular mechanism.",
      "Protein: {protein}. Molecular mechanism: {mechanism}. Phenotype in question: {phenotype}.",
      "There is no known association between the protein {protein} and the phenotype {phenotype}."};
  t[{TaskKind::ProtPathogenesis, Polarity::Positive}] = {
      "Determine the relationship between the protein and the phenotype given the bio-pathway "
      "information.",
      "Protein: {protein}. Pathway and pathogenesis: {mechanism}. Phenotype in question: {phenotype}.",
      "The protein {protein} is associated with the phenotype {phenotype} through the described "
      "pathway."};
  t[{TaskKind::ProtPathogenesis, Polarity::Negative}] = {
      "Determine the relationship between the protein and the phenotype given the bio-pathway "
      "information.",
      "Protein: {protein}. Pathway and pathogenesis: {mechanism}. Phenotype in question: {phenotype}.",
      "There is no known association between the protein {protein} and the phenotype {phenotype}."};
  t[{TaskKind::GeneInheritance, Polarity::Positive}] = {
      "Identify the gene entity given the inherited facts of the disease.",
      "Inherited facts: {inheritance}. Phenotype: {phenotype}.",
      "The gene associated with these inherited facts is {gene}."};
  t[{TaskKind::GeneInheritance, Polarity::Negative}] = {
      "Decide whether the candidate gene matches the inherited facts of the disease.",
      "Inherited facts: {inheritance}. Phenotype: {phenotype}. Candidate gene: {gene}.",
      "The gene {gene} is not associated with these inherited facts."};
  return TemplateSet(std::move(t), "builtin-1");
}

bool has_negative_template(TaskKind k) {
  return k == TaskKind::ProtMolecular || k == TaskKind::ProtPathogenesis ||
         k == TaskKind::GeneInheritance;
}

ExampleTemplate parse_template_file(const std::filesystem::path& path) {
  ExampleTemplate tpl;
  std::string* target = nullptr;
  std::string task_prompt, input, output;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    std::string t = trim(line);
    if (t == "[task_prompt]") {
      target = &task_prompt;
    } else if (t == "[input]") {
      target = &input;
    } else if (t == "[output]") {
      target = &output;
    } else {
      if (!target) {
        if (t.empty()) return;
        throw DataError(path.string() + ": line " + std::to_string(line_no) +
                        " precedes any [task_prompt]/[input]/[output] section");
      }
      if (!target->empty()) target->push_back('\n');
      *target += line;
    }
  });
  auto chomp = [](std::string& s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  };
  chomp(task_prompt);
  chomp(input);
  chomp(output);
  if (input.empty() || output.empty()) {
    throw DataError(path.string() + ": template needs nonempty [input] and [output] sections");
  }
  tpl.task_prompt = task_prompt;
  tpl.input = input;
  tpl.output = output;
  return tpl;
}

}  // namespace

TemplateSet::TemplateSet(std::map<std::pair<TaskKind, Polarity>, ExampleTemplate> templates,
                         std::string version)
    : templates_(std::move(templates)), version_(std::move(version)) {}

TemplateSet TemplateSet::builtin() { return make_builtin(); }

TemplateSet TemplateSet::load_dir(const std::filesystem::path& dir) {
  std::map<std::pair<TaskKind, Polarity>, ExampleTemplate> t;
  for (TaskKind k : kAllTaskKinds) {
    auto pos_path = dir / (std::string(task_kind_name(k)) + ".template");
    if (!std::filesystem::exists(pos_path)) {
      throw DataError("template dir is missing " + pos_path.string());
    }
    t[{k, Polarity::Positive}] = parse_template_file(pos_path);
    if (has_negative_template(k)) {
      auto neg_path = dir / (std::string(task_kind_name(k)) + ".negative.template");
      if (!std::filesystem::exists(neg_path)) {
        throw DataError("template dir is missing " + neg_path.string());
      }
      t[{k, Polarity::Negative}] = parse_template_file(neg_path);
    }
  }
  auto version_path = dir / "VERSION";
  if (!std::filesystem::exists(version_path)) {
    throw DataError("template dir is missing " + version_path.string());
  }
  std::string version = trim(read_text_file(version_path));
  if (version.empty()) throw DataError("template VERSION file is empty");
  return TemplateSet(std::move(t), version);
}

const ExampleTemplate& TemplateSet::get(TaskKind kind, Polarity polarity) const {
  auto it = templates_.find({kind, polarity});
  if (it == templates_.end()) {
    throw DataError(std::string("no template for ") + task_kind_name(kind) + "/" +
                    polarity_name(polarity));
  }
  return it->second;
}

std::vector<std::string> collect_slots(const std::string& text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    std::size_t j = i + 1;
    std::string name;
    while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) {
      name.push_back(text[j]);
      ++j;
    }
    if (j < text.size() && text[j] == '}' && !name.empty()) {
      if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
      i = j;
    }
  }
  return out;
}

std::string render_slots(const std::string& text, const std::map<std::string, std::string>& slots) {
  std::string out;
  out.reserve(text.size() + 64);
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '{') {
      std::size_t j = i + 1;
      std::string name;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) {
        name.push_back(text[j]);
        ++j;
      }
      if (j < text.size() && text[j] == '}' && !name.empty()) {
        auto it = slots.find(name);
        if (it == slots.end()) throw DataError("template references unknown slot {" + name + "}");
        out += it->second;
        i = j;
        continue;
      }
    }
    out.push_back(text[i]);
  }
  return out;
}

void write_builtin_templates(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  TemplateSet t = TemplateSet::builtin();
  auto dump = [&](TaskKind k, Polarity p, const std::filesystem::path& path) {
    const auto& tpl = t.get(k, p);
    std::string body = "[task_prompt]\n" + tpl.task_prompt + "\n[input]\n" + tpl.input +
                       "\n[output]\n" + tpl.output + "\n";
    write_text_file(path, body);
  };
  for (TaskKind k : kAllTaskKinds) {
    dump(k, Polarity::Positive, dir / (std::string(task_kind_name(k)) + ".template"));
    if (has_negative_template(k)) {
      dump(k, Polarity::Negative, dir / (std::string(task_kind_name(k)) + ".negative.template"));
    }
  }
  write_text_file(dir / "VERSION", "1\n");
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

std::string join_list(const std::vector<std::string>& parts, const char* sep = "; ") {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

struct RenderContext {
  const KnowledgeStore& store;
  const CorpusConfig& config;
  std::unordered_map<std::int64_t, std::vector<const ProteinRecord*>> proteins_by_gene;
  std::set<std::pair<std::int64_t, std::string>> positives;

  RenderContext(const KnowledgeStore& s, const CorpusConfig& c) : store(s), config(c) {
    if (!s.frozen()) throw DataError("corpus rendering requires a frozen store");
    for (const auto& [acc, p] : s.proteins()) proteins_by_gene[p.coding_gene_id].push_back(&p);
    for (auto& [gid, list] : proteins_by_gene) {
      std::sort(list.begin(), list.end(),
                [](const ProteinRecord* a, const ProteinRecord* b) { return a->accession < b->accession; });
    }
    positives = s.positive_pairs();
  }
};

std::vector<const AssociationEdge*> sorted_edges(const KnowledgeStore& store, EdgeKind kind) {
  auto edges = store.edges_of_kind(kind);
  std::sort(edges.begin(), edges.end(), [](const AssociationEdge* a, const AssociationEdge* b) {
    return std::tuple(a->subject, a->object) < std::tuple(b->subject, b->object);
  });
  return edges;
}

/// Renders one example from a template; returns false (and records the
/// reason) when a referenced slot has no text.
bool emit_example(const RenderContext& ctx, TaskKind kind, Polarity polarity,
                  const std::map<std::string, std::string>& slots,
                  std::vector<std::string> provenance, const ExampleSink& sink, SkipCounts& skips) {
  const ExampleTemplate& tpl = ctx.config.templates.get(kind, polarity);
  for (const auto& text : {tpl.task_prompt, tpl.input, tpl.output}) {
    for (const auto& slot : collect_slots(text)) {
      auto it = slots.find(slot);
      if (it == slots.end()) throw DataError("template references unknown slot {" + slot + "}");
      if (it->second.empty()) {
        ++skips[std::string(task_kind_name(kind)) + ":empty_slot:" + slot];
        return false;
      }
    }
  }
  CorpusExample ex;
  ex.task_kind = kind;
  ex.stage = task_stage(kind);
  ex.polarity = polarity;
  ex.task_prompt = render_slots(tpl.task_prompt, slots);
  ex.input = render_slots(tpl.input, slots);
  ex.output = render_slots(tpl.output, slots);
  ex.provenance = std::move(provenance);
  ex.example_id = example_id_for(kind, polarity, ex.provenance);

  if (ex.stage == Stage::Stage1) {
    // Mask discipline: mask the target entity's surface form in the input;
    // the output must never carry the marker.
    const std::string& surface = ex.output;
    std::size_t replaced = replace_surface(ex.input, surface, ctx.config.mask_marker);
    if (replaced == 0) {
      ++skips[std::string(task_kind_name(kind)) + ":surface_not_in_input"];
      return false;
    }
    if (ex.output.find(ctx.config.mask_marker) != std::string::npos) {
      ++skips[std::string(task_kind_name(kind)) + ":marker_in_output"];
      return false;
    }
  }
  if (ex.output.empty()) {
    ++skips[std::string(task_kind_name(kind)) + ":empty_output"];
    return false;
  }
  sink(std::move(ex));
  return true;
}

void render_stage1_span(const RenderContext& ctx, std::span<const AssociationEdge* const> edges,
                        const ExampleSink& sink, SkipCounts& skips) {
  for (const auto* e : edges) {
    const auto* gene = ctx.store.find_gene(std::stoll(e->subject.id));
    const auto* pheno = ctx.store.find_phenotype(e->object.id);
    if (!gene || !pheno) continue;
    if (trim(pheno->name).empty() || trim(gene->symbol).empty()) {
      ++skips["stage1:entity_without_name"];
      continue;
    }
    std::map<std::string, std::string> slots{{"gene", gene->symbol}, {"phenotype", pheno->name}};
    std::vector<std::string> prov{e->subject.str(), e->object.str()};
    emit_example(ctx, TaskKind::MaskedGene, Polarity::Positive, slots, prov, sink, skips);
    emit_example(ctx, TaskKind::MaskedPhenotype, Polarity::Positive, slots, prov, sink, skips);
  }
}

void render_gene_protein_span(const RenderContext& ctx, std::span<const AssociationEdge* const> edges,
                              const ExampleSink& sink, SkipCounts& skips) {
  for (const auto* e : edges) {
    const auto* gene = ctx.store.find_gene(std::stoll(e->subject.id));
    const auto* prot = ctx.store.find_protein(e->object.id);
    if (!gene || !prot) continue;
    std::map<std::string, std::string> slots{
        {"gene", gene->symbol},
        {"gene_function", join_list(gene->functions)},
        {"protein", prot->name.empty() ? prot->accession : prot->name},
        {"protein_function", join_list(prot->molecular_functions)}};
    std::vector<std::string> prov{e->subject.str(), e->object.str()};
    for (TaskKind kind : {TaskKind::GeneProteinFunc, TaskKind::GeneProduct,
                          TaskKind::ProteinFuncInfer, TaskKind::GeneFuncInfer}) {
      emit_example(ctx, kind, Polarity::Positive, slots, prov, sink, skips);
    }
  }
}

using KindCounts = std::map<TaskKind, std::size_t>;

void render_triples_positive_span(const RenderContext& ctx,
                                  std::span<const AssociationEdge* const> edges,
                                  const ExampleSink& sink, SkipCounts& skips, KindCounts& counts) {
  for (const auto* e : edges) {
    std::int64_t gene_id = std::stoll(e->subject.id);
    const auto* gene = ctx.store.find_gene(gene_id);
    const auto* pheno = ctx.store.find_phenotype(e->object.id);
    if (!gene || !pheno) continue;

    std::map<std::string, std::string> base{{"gene", gene->symbol},
                                            {"phenotype", pheno->name},
                                            {"inheritance", join_list(pheno->inheritance_facts)}};
    if (emit_example(ctx, TaskKind::GeneInheritance, Polarity::Positive, base,
                     {e->subject.str(), e->object.str()}, sink, skips)) {
      ++counts[TaskKind::GeneInheritance];
    }

    auto it = ctx.proteins_by_gene.find(gene_id);
    if (it == ctx.proteins_by_gene.end()) continue;
    for (const auto* prot : it->second) {
      std::map<std::string, std::string> slots{
          {"protein", prot->name.empty() ? prot->accession : prot->name},
          {"phenotype", pheno->name},
          {"mechanism", join_list(prot->molecular_functions)}};
      std::vector<std::string> prov{e->subject.str(), protein_ref(prot->accession).str(),
                                    e->object.str()};
      if (emit_example(ctx, TaskKind::ProtMolecular, Polarity::Positive, slots, prov, sink, skips)) {
        ++counts[TaskKind::ProtMolecular];
      }
      slots["mechanism"] = pheno->description;
      if (emit_example(ctx, TaskKind::ProtPathogenesis, Polarity::Positive, slots, prov, sink, skips)) {
        ++counts[TaskKind::ProtPathogenesis];
      }
    }
  }
}

// Uniform draw in [0, n) built directly on the standardized mt19937_64
// stream, so sampling stays reproducible across standard libraries.
std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t n) {
  std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t limit = max - max % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[bounded_rand(rng, i)]);
  }
}

/// First k elements become a uniform sample without replacement.
template <typename T>
void partial_shuffle(std::vector<T>& v, std::size_t k, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < k && i + 1 < v.size(); ++i) {
    std::size_t j = i + bounded_rand(rng, v.size() - i);
    std::swap(v[i], v[j]);
  }
}

/// Samples `count` (gene, phenotype) pairs uniformly from
/// eligible_genes x eligible_phenos minus `positives`. Lists must be sorted.
std::vector<std::pair<std::int64_t, std::string>> sample_complement_pairs(
    const std::vector<std::int64_t>& eligible_genes, const std::vector<std::string>& eligible_phenos,
    const std::set<std::pair<std::int64_t, std::string>>& positives, std::size_t count,
    std::mt19937_64& rng) {
  std::vector<std::pair<std::int64_t, std::string>> out;
  if (count == 0 || eligible_genes.empty() || eligible_phenos.empty()) return out;
  const std::uint64_t g = eligible_genes.size();
  const std::uint64_t p = eligible_phenos.size();
  const std::uint64_t universe = g * p;

  std::unordered_set<std::int64_t> gene_set(eligible_genes.begin(), eligible_genes.end());
  std::unordered_set<std::string> pheno_set(eligible_phenos.begin(), eligible_phenos.end());
  std::uint64_t blocked = 0;
  for (const auto& pos : positives) {
    if (gene_set.count(pos.first) && pheno_set.count(pos.second)) ++blocked;
  }
  const std::uint64_t complement = universe - blocked;
  count = std::min<std::uint64_t>(count, complement);
  if (count == 0) return out;

  if (universe <= 4'000'000 || count * 4 >= complement) {
    std::vector<std::uint64_t> codes;
    codes.reserve(complement);
    for (std::uint64_t gi = 0; gi < g; ++gi) {
      for (std::uint64_t pi = 0; pi < p; ++pi) {
        if (!positives.count({eligible_genes[gi], eligible_phenos[pi]})) codes.push_back(gi * p + pi);
      }
    }
    partial_shuffle(codes, count, rng);
    codes.resize(count);
    for (auto code : codes) out.emplace_back(eligible_genes[code / p], eligible_phenos[code % p]);
  } else {
    std::unordered_set<std::uint64_t> taken;
    while (out.size() < count) {
      std::uint64_t code = bounded_rand(rng, universe);
      if (taken.count(code)) continue;
      auto pair = std::pair(eligible_genes[code / p], eligible_phenos[code % p]);
      if (positives.count(pair)) continue;
      taken.insert(code);
      out.push_back(std::move(pair));
    }
  }
  return out;
}

/// The protein used for a negative triple: lowest accession satisfying the
/// kind's text requirement.
const ProteinRecord* negative_protein(const RenderContext& ctx, std::int64_t gene_id, TaskKind kind) {
  auto it = ctx.proteins_by_gene.find(gene_id);
  if (it == ctx.proteins_by_gene.end()) return nullptr;
  for (const auto* prot : it->second) {
    if (kind == TaskKind::ProtMolecular && prot->molecular_functions.empty()) continue;
    return prot;
  }
  return nullptr;
}

void render_triples_negatives(const RenderContext& ctx, std::uint64_t seed, const KindCounts& positives,
                              const ExampleSink& sink, SkipCounts& skips) {
  if (ctx.config.negative_ratio <= 0.0) return;

  for (TaskKind kind :
       {TaskKind::ProtMolecular, TaskKind::ProtPathogenesis, TaskKind::GeneInheritance}) {
    auto pos_it = positives.find(kind);
    std::size_t pos_count = pos_it == positives.end() ? 0 : pos_it->second;
    auto requested =
        static_cast<std::size_t>(std::llround(ctx.config.negative_ratio * static_cast<double>(pos_count)));
    if (requested == 0) continue;

    std::vector<std::int64_t> eligible_genes;
    for (const auto& [gid, gene] : ctx.store.genes()) {
      if (trim(gene.symbol).empty()) continue;
      if (kind != TaskKind::GeneInheritance && !negative_protein(ctx, gid, kind)) continue;
      eligible_genes.push_back(gid);
    }
    std::vector<std::string> eligible_phenos;
    for (const auto& [pid, pheno] : ctx.store.phenotypes()) {
      if (trim(pheno.name).empty()) continue;
      if (kind == TaskKind::ProtPathogenesis && pheno.description.empty()) continue;
      if (kind == TaskKind::GeneInheritance && pheno.inheritance_facts.empty()) continue;
      eligible_phenos.push_back(pid);
    }

    std::mt19937_64 rng(derive_seed(seed, std::string("negatives:") + task_kind_name(kind)));
    auto pairs = sample_complement_pairs(eligible_genes, eligible_phenos, ctx.positives, requested, rng);
    if (pairs.size() < requested) {
      skips[std::string(task_kind_name(kind)) + ":negative_shortfall"] += requested - pairs.size();
    }

    for (const auto& [gene_id, pheno_id] : pairs) {
      const auto* gene = ctx.store.find_gene(gene_id);
      const auto* pheno = ctx.store.find_phenotype(pheno_id);
      std::map<std::string, std::string> slots{{"gene", gene->symbol},
                                               {"phenotype", pheno->name},
                                               {"inheritance", join_list(pheno->inheritance_facts)}};
      std::vector<std::string> prov{gene_ref(gene_id).str()};
      if (kind != TaskKind::GeneInheritance) {
        const auto* prot = negative_protein(ctx, gene_id, kind);
        slots["protein"] = prot->name.empty() ? prot->accession : prot->name;
        slots["mechanism"] = kind == TaskKind::ProtMolecular ? join_list(prot->molecular_functions)
                                                             : pheno->description;
        prov.push_back(protein_ref(prot->accession).str());
      }
      prov.push_back(phenotype_ref(pheno_id).str());
      emit_example(ctx, kind, Polarity::Negative, slots, prov, sink, skips);
    }
  }
}

}  // namespace

void render_stage1(const KnowledgeStore& store, std::uint64_t seed, const CorpusConfig& config,
                   const ExampleSink& sink, SkipCounts& skips) {
  (void)seed;  // stage-1 rendering is a deterministic enumeration
  RenderContext ctx(store, config);
  auto edges = sorted_edges(store, EdgeKind::GenePhenotype);
  render_stage1_span(ctx, edges, sink, skips);
}

void render_gene_protein(const KnowledgeStore& store, std::uint64_t seed, const CorpusConfig& config,
                         const ExampleSink& sink, SkipCounts& skips) {
  (void)seed;
  RenderContext ctx(store, config);
  auto edges = sorted_edges(store, EdgeKind::GeneProtein);
  render_gene_protein_span(ctx, edges, sink, skips);
}

void render_triples(const KnowledgeStore& store, std::uint64_t seed, const CorpusConfig& config,
                    const ExampleSink& sink, SkipCounts& skips) {
  RenderContext ctx(store, config);
  auto edges = sorted_edges(store, EdgeKind::GenePhenotype);
  KindCounts counts;
  render_triples_positive_span(ctx, edges, sink, skips, counts);
  render_triples_negatives(ctx, seed, counts, sink, skips);
}

std::vector<std::pair<std::int64_t, std::string>> sample_negatives(const KnowledgeStore& store,
                                                                   double ratio, std::uint64_t seed) {
  if (ratio <= 0.0) throw DataError("sample_negatives: ratio must be > 0");
  auto positives = store.positive_pairs();
  auto requested = static_cast<std::uint64_t>(std::llround(ratio * static_cast<double>(positives.size())));

  std::vector<std::int64_t> genes;
  for (const auto& [gid, g] : store.genes()) genes.push_back(gid);
  std::vector<std::string> phenos;
  for (const auto& [pid, p] : store.phenotypes()) phenos.push_back(pid);

  std::uint64_t universe = static_cast<std::uint64_t>(genes.size()) * phenos.size();
  std::uint64_t complement = universe - positives.size();
  if (requested > complement) {
    throw DataError("sample_negatives: requested " + std::to_string(requested) +
                    " negatives but only " + std::to_string(complement) + " pairs are available");
  }
  std::mt19937_64 rng(derive_seed(seed, "sample_negatives"));
  return sample_complement_pairs(genes, phenos, positives, requested, rng);
}

// ---------------------------------------------------------------------------
// Balancing and splitting
// ---------------------------------------------------------------------------

namespace {

/// Largest-remainder allocation of val_size slots across kinds,
/// proportional to group sizes; every kind lands within +-1 of its exact
/// proportional share.
std::map<TaskKind, std::size_t> allocate_validation(const std::map<TaskKind, std::size_t>& group_sizes,
                                                    std::size_t val_size, std::size_t total) {
  std::map<TaskKind, std::size_t> alloc;
  std::vector<std::pair<double, TaskKind>> remainders;
  std::size_t assigned = 0;
  for (const auto& [kind, n] : group_sizes) {
    double exact = static_cast<double>(val_size) * static_cast<double>(n) / static_cast<double>(total);
    auto base = static_cast<std::size_t>(exact);
    alloc[kind] = base;
    assigned += base;
    remainders.emplace_back(exact - static_cast<double>(base), kind);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; assigned < val_size && i < remainders.size(); ++i) {
    ++alloc[remainders[i].second];
    ++assigned;
  }
  return alloc;
}

/// Picks validation positions from (kind, position) items listed in
/// canonical order. Returns a sorted index list.
std::vector<std::size_t> stratified_validation_indices(const std::vector<TaskKind>& kinds,
                                                       std::size_t val_size, std::uint64_t seed,
                                                       const std::string& scope) {
  std::map<TaskKind, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < kinds.size(); ++i) groups[kinds[i]].push_back(i);
  std::map<TaskKind, std::size_t> sizes;
  for (const auto& [k, idx] : groups) sizes[k] = idx.size();
  auto alloc = allocate_validation(sizes, val_size, kinds.size());

  std::vector<std::size_t> picked;
  for (auto& [kind, idx] : groups) {
    std::mt19937_64 rng(derive_seed(seed, "split:" + scope + ":" + task_kind_name(kind)));
    partial_shuffle(idx, alloc[kind], rng);
    picked.insert(picked.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(alloc[kind]));
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

std::vector<std::size_t> downsample_indices(const std::vector<TaskKind>& kinds, std::uint64_t seed) {
  std::map<TaskKind, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < kinds.size(); ++i) groups[kinds[i]].push_back(i);
  std::size_t min_count = std::numeric_limits<std::size_t>::max();
  for (const auto& [k, idx] : groups) min_count = std::min(min_count, idx.size());
  std::vector<std::size_t> kept;
  for (auto& [kind, idx] : groups) {
    std::mt19937_64 rng(derive_seed(seed, std::string("balance:") + task_kind_name(kind)));
    partial_shuffle(idx, min_count, rng);
    kept.insert(kept.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(min_count));
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace

SplitResult balance_and_split(std::vector<CorpusExample> examples, std::size_t val_size,
                              std::uint64_t seed, BalanceMode mode) {
  std::sort(examples.begin(), examples.end(),
            [](const CorpusExample& a, const CorpusExample& b) { return a.example_id < b.example_id; });

  if (mode == BalanceMode::DownsampleToMin && !examples.empty()) {
    std::vector<TaskKind> kinds;
    kinds.reserve(examples.size());
    for (const auto& ex : examples) kinds.push_back(ex.task_kind);
    auto kept = downsample_indices(kinds, seed);
    std::vector<CorpusExample> reduced;
    reduced.reserve(kept.size());
    for (auto i : kept) reduced.push_back(std::move(examples[i]));
    examples = std::move(reduced);
  }

  if (val_size >= examples.size()) {
    throw DataError("balance_and_split: val_size " + std::to_string(val_size) +
                    " must be smaller than the example count " + std::to_string(examples.size()));
  }

  std::vector<TaskKind> kinds;
  kinds.reserve(examples.size());
  for (const auto& ex : examples) kinds.push_back(ex.task_kind);
  auto val_idx = stratified_validation_indices(kinds, val_size, seed, "all");

  SplitResult result;
  result.validation.reserve(val_idx.size());
  result.train.reserve(examples.size() - val_idx.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (next < val_idx.size() && val_idx[next] == i) {
      result.validation.push_back(std::move(examples[i]));
      ++next;
    } else {
      result.train.push_back(std::move(examples[i]));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Streaming corpus builder
// ---------------------------------------------------------------------------

namespace {

struct SpoolEntry {
  std::uint64_t id = 0;
  std::uint64_t offset = 0;
  std::uint32_t length = 0;
  std::uint16_t file = 0;
  std::uint8_t kind = 0;
  std::uint8_t negative = 0;
  std::uint8_t validation = 0;
};

struct SpoolWriter {
  std::ofstream out;
  std::uint64_t offset = 0;
  std::uint16_t file_index = 0;
  std::vector<SpoolEntry> entries;

  void write(const CorpusExample& ex) {
    std::string line = example_to_json(ex).dump();
    line.push_back('\n');
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    SpoolEntry e;
    e.id = std::stoull(ex.example_id, nullptr, 16);
    e.offset = offset;
    e.length = static_cast<std::uint32_t>(line.size());
    e.file = file_index;
    e.kind = static_cast<std::uint8_t>(ex.task_kind);
    e.negative = ex.polarity == Polarity::Negative ? 1 : 0;
    entries.push_back(e);
    offset += line.size();
  }
};

void merge_skips(SkipCounts& into, const SkipCounts& from) {
  for (const auto& [k, v] : from) into[k] += v;
}

template <typename T>
std::vector<std::span<T const>> partition_spans(const std::vector<T>& v, int jobs) {
  std::vector<std::span<T const>> out;
  std::size_t n = v.size();
  std::size_t per = (n + jobs - 1) / static_cast<std::size_t>(jobs);
  for (std::size_t begin = 0; begin < n; begin += per) {
    out.emplace_back(v.data() + begin, std::min(per, n - begin));
  }
  if (out.empty()) out.emplace_back(v.data(), 0);
  return out;
}

}  // namespace

json build_corpus(const KnowledgeStore& store, const CorpusOptions& options,
                  const std::filesystem::path& out_dir) {
  if (!store.frozen()) throw DataError("build_corpus requires a frozen store");
  std::filesystem::create_directories(out_dir);
  auto spool_dir = out_dir / ".spool";
  std::filesystem::create_directories(spool_dir);

  CorpusConfig config;
  config.mask_marker = options.mask_marker;
  config.negative_ratio = options.negative_ratio;
  config.templates =
      options.template_dir ? TemplateSet::load_dir(*options.template_dir) : TemplateSet::builtin();

  RenderContext ctx(store, config);
  auto gp_edges = sorted_edges(store, EdgeKind::GenePhenotype);
  auto gprot_edges = sorted_edges(store, EdgeKind::GeneProtein);

  int jobs = std::max(1, options.jobs);
  auto gp_parts = partition_spans(gp_edges, jobs);
  auto gprot_parts = partition_spans(gprot_edges, jobs);
  std::size_t workers = std::max(gp_parts.size(), gprot_parts.size());

  std::vector<SpoolWriter> spools(workers + 1);  // final slot holds negatives
  std::vector<SkipCounts> skip_parts(workers + 1);
  std::vector<KindCounts> count_parts(workers);
  for (std::size_t i = 0; i < spools.size(); ++i) {
    auto path = spool_dir / ("spool_" + std::to_string(i) + ".jsonl");
    spools[i].out.open(path, std::ios::binary);
    if (!spools[i].out) throw DataError("cannot open spool file: " + path.string());
    spools[i].file_index = static_cast<std::uint16_t>(i);
  }

  auto run_worker = [&](std::size_t w) {
    auto sink = [&spools, w](CorpusExample&& ex) { spools[w].write(ex); };
    if (w < gp_parts.size()) {
      render_stage1_span(ctx, gp_parts[w], sink, skip_parts[w]);
      render_triples_positive_span(ctx, gp_parts[w], sink, skip_parts[w], count_parts[w]);
    }
    if (w < gprot_parts.size()) {
      render_gene_protein_span(ctx, gprot_parts[w], sink, skip_parts[w]);
    }
  };

  if (workers <= 1) {
    run_worker(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run_worker, w);
    for (auto& t : threads) t.join();
  }

  KindCounts positive_counts;
  for (const auto& part : count_parts) {
    for (const auto& [k, v] : part) positive_counts[k] += v;
  }
  {
    auto sink = [&spools, last = workers](CorpusExample&& ex) { spools[last].write(ex); };
    render_triples_negatives(ctx, options.seed, positive_counts, sink, skip_parts[workers]);
  }

  SkipCounts skips;
  for (const auto& part : skip_parts) merge_skips(skips, part);

  // Merge, order canonically by example id, and drop hash duplicates.
  std::vector<SpoolEntry> entries;
  std::size_t total_rendered = 0;
  for (auto& s : spools) {
    s.out.close();
    total_rendered += s.entries.size();
  }
  entries.reserve(total_rendered);
  for (auto& s : spools) {
    entries.insert(entries.end(), s.entries.begin(), s.entries.end());
    s.entries.clear();
    s.entries.shrink_to_fit();
  }
  std::sort(entries.begin(), entries.end(), [](const SpoolEntry& a, const SpoolEntry& b) {
    return std::tuple(a.id, a.file, a.offset) < std::tuple(b.id, b.file, b.offset);
  });
  {
    std::vector<SpoolEntry> unique_entries;
    unique_entries.reserve(entries.size());
    for (const auto& e : entries) {
      if (!unique_entries.empty() && unique_entries.back().id == e.id) {
        ++skips["duplicate_example_id"];
        continue;
      }
      unique_entries.push_back(e);
    }
    entries = std::move(unique_entries);
  }

  // Optional balancing across task kinds.
  if (options.balance == BalanceMode::DownsampleToMin && !entries.empty()) {
    std::vector<TaskKind> kinds;
    kinds.reserve(entries.size());
    for (const auto& e : entries) kinds.push_back(static_cast<TaskKind>(e.kind));
    auto kept = downsample_indices(kinds, options.seed);
    std::vector<SpoolEntry> reduced;
    reduced.reserve(kept.size());
    for (auto i : kept) reduced.push_back(entries[i]);
    std::size_t dropped = entries.size() - reduced.size();
    if (dropped > 0) skips["balance_downsampled"] += dropped;
    entries = std::move(reduced);
  }

  // Stratified validation split, independently per stage.
  for (Stage stage : {Stage::Stage1, Stage::Stage2}) {
    std::vector<std::size_t> stage_positions;
    std::vector<TaskKind> stage_kinds;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (task_stage(static_cast<TaskKind>(entries[i].kind)) == stage) {
        stage_positions.push_back(i);
        stage_kinds.push_back(static_cast<TaskKind>(entries[i].kind));
      }
    }
    if (stage_positions.empty()) continue;
    if (options.val_size >= stage_positions.size()) {
      throw DataError(std::string("val_size ") + std::to_string(options.val_size) +
                      " must be smaller than the " + stage_name(stage) + " example count " +
                      std::to_string(stage_positions.size()));
    }
    auto picked = stratified_validation_indices(stage_kinds, options.val_size, options.seed,
                                                stage_name(stage));
    for (auto local : picked) entries[stage_positions[local]].validation = 1;
  }

  // Write output files by streaming spool lines in canonical order.
  std::vector<std::ifstream> readers(spools.size());
  for (std::size_t i = 0; i < spools.size(); ++i) {
    readers[i].open(spool_dir / ("spool_" + std::to_string(i) + ".jsonl"), std::ios::binary);
  }
  struct OutFile {
    std::ofstream out;
    std::string name;
    std::size_t lines = 0;
    std::uint64_t bytes = 0;
  };
  std::map<std::pair<Stage, bool>, OutFile> outputs;
  for (Stage stage : {Stage::Stage1, Stage::Stage2}) {
    for (bool validation : {false, true}) {
      auto& f = outputs[{stage, validation}];
      f.name = std::string(stage_name(stage)) + (validation ? ".validation.jsonl" : ".train.jsonl");
      f.out.open(out_dir / f.name, std::ios::binary);
      if (!f.out) throw DataError("cannot open output file: " + (out_dir / f.name).string());
    }
  }

  std::map<std::string, std::map<std::string, std::size_t>> kind_stats;
  std::string line;
  for (const auto& e : entries) {
    auto& reader = readers[e.file];
    reader.seekg(static_cast<std::streamoff>(e.offset));
    line.resize(e.length);
    reader.read(line.data(), e.length);
    if (!reader) throw DataError("spool read failed");
    auto kind = static_cast<TaskKind>(e.kind);
    auto& f = outputs[{task_stage(kind), e.validation != 0}];
    f.out.write(line.data(), e.length);
    ++f.lines;
    f.bytes += e.length;
    auto& ks = kind_stats[task_kind_name(kind)];
    ++ks["total"];
    ++ks[e.validation ? "validation" : "train"];
    ++ks[e.negative ? "negative" : "positive"];
  }
  for (auto& [key, f] : outputs) {
    (void)key;
    f.out.close();
  }
  readers.clear();
  std::filesystem::remove_all(spool_dir);

  json stages_json = json::object();
  std::size_t total_examples = 0, total_train = 0, total_validation = 0;
  for (Stage stage : {Stage::Stage1, Stage::Stage2}) {
    const auto& train = outputs[{stage, false}];
    const auto& val = outputs[{stage, true}];
    json files{{"train", train.name}, {"validation", val.name}};
    json hashes{{"train", hash_file(out_dir / train.name)},
                {"validation", hash_file(out_dir / val.name)}};
    stages_json[stage_name(stage)] = {{"examples", train.lines + val.lines},
                                      {"train", train.lines},
                                      {"validation", val.lines},
                                      {"bytes", train.bytes + val.bytes},
                                      {"files", files},
                                      {"file_hashes", hashes}};
    total_examples += train.lines + val.lines;
    total_train += train.lines;
    total_validation += val.lines;
  }

  json kinds_json = json::object();
  for (const auto& [kind, stats] : kind_stats) {
    json s = json::object();
    for (const auto& [k, v] : stats) s[k] = v;
    kinds_json[kind] = s;
  }
  json skips_json = json::object();
  for (const auto& [k, v] : skips) skips_json[k] = v;

  json manifest{{"config_hash", options.config_hash},
                {"seed", options.seed},
                {"mask_marker", options.mask_marker},
                {"template_version", config.templates.version()},
                {"negative_ratio", options.negative_ratio},
                {"val_size", options.val_size},
                {"balance", options.balance == BalanceMode::DownsampleToMin ? "downsample_to_min" : "none"},
                {"totals",
                 {{"examples", total_examples}, {"train", total_train}, {"validation", total_validation}}},
                {"stages", stages_json},
                {"task_kinds", kinds_json},
                {"skips", skips_json}};
  write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace gpmap
