// gpmap: builds gene-phenotype knowledge stores and training corpora from
// flat-file exports, generates QA / relation-determination tasks, scores
// model answers, and analyzes exported entity embeddings.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpmap/config.hpp"
#include "gpmap/corpus.hpp"
#include "gpmap/embed.hpp"
#include "gpmap/eval.hpp"
#include "gpmap/ingest.hpp"
#include "gpmap/metrics.hpp"
#include "gpmap/model_client.hpp"
#include "gpmap/store.hpp"
#include "gpmap/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gpmap;

namespace {

// Output locations do not influence artifact content, so they stay out of
// the effective-config hash: regenerating into another directory must
// reproduce identical bytes.
std::string hash_json(json j) {
  j.erase("out_dir");
  j.erase("out");
  return "fnv64:" + to_hex(fnv64(j.dump()));
}

Smoothing smoothing_from_name(const std::string& s) {
  if (s == "add_one") return Smoothing::AddOne;
  if (s == "none") return Smoothing::None;
  throw UsageError("unknown smoothing \"" + s + "\" (use add_one or none)");
}

SourceTableSpec spec_or_default(const std::string& spec_path, SourceTableSpec fallback) {
  if (spec_path.empty()) return fallback;
  return SourceTableSpec::load(spec_path);
}

KnowledgeStore load_frozen_store(const std::string& path) {
  if (path.empty()) throw UsageError("--store is required");
  KnowledgeStore store = import_store(path);
  store.freeze();
  return store;
}

struct FlagBinding {
  CLI::App* cmd = nullptr;
  std::string config_path;
  std::optional<std::uint64_t> seed_flag;
  std::uint64_t seed_value = 0;
  CLI::Option* seed_opt = nullptr;

  void add_common(CLI::App* sub) {
    cmd = sub;
    sub->add_option("--config", config_path, "JSON config file; flags override file values");
    seed_opt = sub->add_option("--seed", seed_value, "seed for all randomized steps");
  }

  RunConfig effective() const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed_opt && seed_opt->count() > 0) cfg.seed = seed_value;
    return cfg;
  }
};

void require_seed(const RunConfig& cfg, const std::string& subcommand) {
  if (!cfg.seed) throw UsageError(subcommand + " requires --seed (or a seed in the config file)");
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

struct IngestArgs {
  FlagBinding common;
  std::vector<std::string> gene_info, gene_phenotype, gene_protein, evidence;
  std::string dbgap;
  std::string gene_info_spec, gene_phenotype_spec, gene_protein_spec, dbgap_spec;
  std::string out;
  std::string rejects;
};

void run_ingest(const IngestArgs& args) {
  RunConfig cfg = args.common.effective();
  if (args.out.empty()) throw UsageError("ingest requires --out");
  if (args.gene_info.empty()) throw UsageError("ingest requires at least one --gene-info file");

  json echo = config_to_json(cfg);
  echo["subcommand"] = "ingest";
  echo["out"] = args.out;
  std::string cfg_hash = hash_json(echo);

  KnowledgeStore store;
  IngestSession session(store);
  RunLog log;
  log.add("subcommand", "ingest");
  log.add("config_hash", cfg_hash);

  auto gi_spec = spec_or_default(args.gene_info_spec, default_gene_info_spec());
  for (const auto& path : args.gene_info) {
    log.add_file("input_gene_info", path);
    session.add_genes(parse_gene_info(path, gi_spec));
  }
  auto gp_spec = spec_or_default(args.gene_protein_spec, default_gene_protein_spec());
  for (const auto& path : args.gene_protein) {
    log.add_file("input_gene_protein", path);
    session.add_gene_proteins(parse_gene_protein(path, gp_spec), gp_spec.provenance);
  }
  auto gph_spec = spec_or_default(args.gene_phenotype_spec, default_gene_phenotype_spec());
  for (const auto& path : args.gene_phenotype) {
    log.add_file("input_gene_phenotype", path);
    session.add_gene_phenotypes(parse_gene_phenotype(path, gph_spec), gph_spec.provenance);
  }
  session.finish();
  if (!args.dbgap.empty()) {
    log.add_file("input_dbgap", args.dbgap);
    session.crosscheck(parse_dbgap(args.dbgap, spec_or_default(args.dbgap_spec, default_dbgap_spec())));
  }

  store.freeze();
  export_store(store, args.out);
  std::string rejects_path = args.rejects.empty() ? args.out + ".rejects.tsv" : args.rejects;
  write_rejects_report(rejects_path, session.rejects());

  log.add("genes", std::to_string(store.genes().size()));
  log.add("proteins", std::to_string(store.proteins().size()));
  log.add("phenotypes", std::to_string(store.phenotypes().size()));
  log.add("edges", std::to_string(store.edges().size()));
  log.add("rejects", std::to_string(session.rejects().size()));
  log.add_file("output_store", args.out);
  log.add_file("output_rejects", rejects_path);
  log.write(args.out + ".run.log");
  std::cout << "ingested " << store.entity_count() << " entities, " << store.edges().size()
            << " edges (" << session.rejects().size() << " rejected rows) -> " << args.out << "\n";
}

// ---------------------------------------------------------------------------
// build-corpus
// ---------------------------------------------------------------------------

struct BuildCorpusArgs {
  FlagBinding common;
  std::string store;
  std::string out;
  double negative_ratio = 1.0;
  std::uint64_t val_size = 10000;
  bool balance = false;
  std::string templates;
  std::string mask;
  int jobs = 1;
  CLI::Option* ratio_opt = nullptr;
  CLI::Option* val_opt = nullptr;
  CLI::Option* balance_opt = nullptr;
  CLI::Option* templates_opt = nullptr;
  CLI::Option* mask_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;
};

void run_build_corpus(const BuildCorpusArgs& args) {
  RunConfig cfg = args.common.effective();
  if (!args.store.empty()) cfg.store_path = args.store;
  if (!args.out.empty()) cfg.out_dir = args.out;
  if (args.ratio_opt->count()) cfg.negative_ratio = args.negative_ratio;
  if (args.val_opt->count()) cfg.val_size = args.val_size;
  if (args.balance_opt->count()) cfg.balance = args.balance;
  if (args.templates_opt->count()) cfg.template_dir = args.templates;
  if (args.mask_opt->count()) cfg.mask_marker = args.mask;
  if (args.jobs_opt->count()) cfg.jobs = args.jobs;
  require_seed(cfg, "build-corpus");
  if (cfg.out_dir.empty()) throw UsageError("build-corpus requires --out");

  json echo = config_to_json(cfg);
  echo["subcommand"] = "build-corpus";
  std::string cfg_hash = hash_json(echo);

  KnowledgeStore store = load_frozen_store(cfg.store_path);
  CorpusOptions options;
  options.seed = *cfg.seed;
  options.negative_ratio = cfg.negative_ratio;
  options.val_size = cfg.val_size;
  options.balance = cfg.balance ? BalanceMode::DownsampleToMin : BalanceMode::None;
  options.mask_marker = cfg.mask_marker;
  if (!cfg.template_dir.empty()) options.template_dir = cfg.template_dir;
  options.jobs = cfg.jobs;
  options.config_hash = cfg_hash;

  json manifest = build_corpus(store, options, cfg.out_dir);

  RunLog log;
  log.add("subcommand", "build-corpus");
  log.add("config_hash", cfg_hash);
  log.add_file("input_store", cfg.store_path);
  log.add("examples", manifest["totals"]["examples"].dump());
  log.add("train", manifest["totals"]["train"].dump());
  log.add("validation", manifest["totals"]["validation"].dump());
  log.add_file("output_manifest", fs::path(cfg.out_dir) / "manifest.json");
  for (const auto& [stage, info] : manifest["stages"].items()) {
    for (const auto& [split, name] : info["files"].items()) {
      log.add_file("output_" + stage + "_" + split, fs::path(cfg.out_dir) / name.get<std::string>());
    }
  }
  log.write(fs::path(cfg.out_dir) / "run.log");
  std::cout << "corpus: " << manifest["totals"]["examples"] << " examples ("
            << manifest["totals"]["train"] << " train / " << manifest["totals"]["validation"]
            << " validation) -> " << cfg.out_dir << "\n";
}

// ---------------------------------------------------------------------------
// make-tasks
// ---------------------------------------------------------------------------

struct MakeTasksArgs {
  FlagBinding common;
  std::string store;
  std::string out;
  std::size_t qa_n = 0;
  std::string direction = "both";
  std::string style = "question";
  std::string evidence;
  std::string evidence_spec;
  int variants_k = 3;
  std::string variants;
};

void run_make_tasks(const MakeTasksArgs& args) {
  RunConfig cfg = args.common.effective();
  if (!args.store.empty()) cfg.store_path = args.store;
  if (!args.variants.empty()) cfg.variants_path = args.variants;
  require_seed(cfg, "make-tasks");
  if (args.out.empty()) throw UsageError("make-tasks requires --out");
  if (args.qa_n == 0 && args.evidence.empty()) {
    throw UsageError("make-tasks needs --qa-n and/or --evidence");
  }

  json echo = config_to_json(cfg);
  echo["subcommand"] = "make-tasks";
  echo["qa_n"] = args.qa_n;
  echo["direction"] = args.direction;
  echo["style"] = args.style;
  echo["variants_k"] = args.variants_k;
  std::string cfg_hash = hash_json(echo);

  KnowledgeStore store = load_frozen_store(cfg.store_path);
  fs::create_directories(args.out);
  RunLog log;
  log.add("subcommand", "make-tasks");
  log.add("config_hash", cfg_hash);
  log.add_file("input_store", cfg.store_path);

  if (args.qa_n > 0) {
    QaStyle style = qa_style_from_name(args.style);
    std::vector<Direction> directions;
    if (args.direction == "both") {
      directions = {Direction::PhenoToGene, Direction::GeneToPheno};
    } else if (args.direction == "p2g") {
      directions = {Direction::PhenoToGene};
    } else if (args.direction == "g2p") {
      directions = {Direction::GeneToPheno};
    } else {
      throw UsageError("--direction must be p2g, g2p or both");
    }
    for (Direction d : directions) {
      auto items = make_qa_items(store, args.qa_n, *cfg.seed, d, style);
      auto path = fs::path(args.out) / (std::string("qa_items.") + direction_name(d) + ".jsonl");
      write_qa_items(path, items);
      log.add(std::string("qa_items_") + direction_name(d), std::to_string(items.size()));
      log.add_file(std::string("output_qa_") + direction_name(d), path);
    }
  }

  if (!args.evidence.empty()) {
    auto spec = spec_or_default(args.evidence_spec, default_evidence_spec());
    auto parsed = parse_evidence(args.evidence, spec);
    log.add_file("input_evidence", args.evidence);
    log.add("evidence_rows", std::to_string(parsed.total_rows));
    log.add("evidence_rejects", std::to_string(parsed.rejects.size()));
    auto variants = cfg.variants_path.empty() ? default_relation_variants()
                                              : load_relation_variants(cfg.variants_path);
    ScreeningReport screening;
    auto items =
        make_relation_items(parsed.records, store, args.variants_k, *cfg.seed, variants, &screening);
    auto path = fs::path(args.out) / "relation_items.jsonl";
    write_relation_items(path, items);
    log.add("relation_total", std::to_string(screening.total));
    log.add("relation_kept", std::to_string(screening.kept));
    log.add("relation_dropped", std::to_string(screening.dropped));
    log.add_file("output_relation_items", path);
  }
  log.write(fs::path(args.out) / "make_tasks.run.log");
  std::cout << "tasks written to " << args.out << "\n";
}

// ---------------------------------------------------------------------------
// run-eval
// ---------------------------------------------------------------------------

struct RunEvalArgs {
  FlagBinding common;
  std::string qa_items;
  std::string relation_items;
  std::string out;
  std::string endpoint_url;
  std::string model;
  std::string auth_env;
  int max_in_flight = 0;
  int max_retries = -1;
  double timeout = 0;
  int max_new_tokens = 256;
  double temperature = 0.0;
};

void run_run_eval(const RunEvalArgs& args) {
  RunConfig cfg = args.common.effective();
  if (!args.endpoint_url.empty()) cfg.endpoint.base_url = args.endpoint_url;
  if (!args.model.empty()) cfg.endpoint.model_name = args.model;
  if (!args.auth_env.empty()) cfg.endpoint.auth_env = args.auth_env;
  if (args.max_in_flight > 0) cfg.endpoint.max_in_flight = args.max_in_flight;
  if (args.max_retries >= 0) cfg.endpoint.max_retries = args.max_retries;
  if (args.timeout > 0) cfg.endpoint.timeout_seconds = args.timeout;
  if (args.out.empty()) throw UsageError("run-eval requires --out");
  if (args.qa_items.empty() == args.relation_items.empty()) {
    throw UsageError("run-eval needs exactly one of --qa-items or --relation-items");
  }

  std::vector<PromptJob> jobs;
  if (!args.qa_items.empty()) {
    for (const auto& item : read_qa_items(args.qa_items)) {
      jobs.push_back({item.item_id, 0, item.prompt_text});
    }
  } else {
    for (const auto& item : read_relation_items(args.relation_items)) {
      for (std::size_t v = 0; v < item.prompt_variants.size(); ++v) {
        jobs.push_back({item.item_id, static_cast<int>(v), item.prompt_variants[v]});
      }
    }
  }

  CompletionRequest defaults;
  defaults.max_new_tokens = args.max_new_tokens;
  defaults.temperature = args.temperature;
  BatchReport report = run_batch(jobs, cfg.endpoint, defaults, args.out);

  json echo = config_to_json(cfg);
  echo["subcommand"] = "run-eval";
  RunLog log;
  log.add("subcommand", "run-eval");
  log.add("config_hash", hash_json(echo));
  log.add("prompts", std::to_string(jobs.size()));
  log.add("ok", std::to_string(report.ok));
  log.add("failed", std::to_string(report.failed));
  log.add_file("output_answers", args.out);
  log.write(args.out + ".run.log");
  std::cout << "answers: " << report.ok << " ok, " << report.failed << " failed -> " << args.out
            << "\n";
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

struct ScoreArgs {
  FlagBinding common;
  std::vector<std::string> qa;        // items, answers
  std::vector<std::string> relation;  // items, answers
  std::string out = "report";
  std::string aggregation;
  int max_n = 0;
  std::string smoothing;
  std::string stoplist;
  std::string yesno_lexicon;
};

void run_score(const ScoreArgs& args) {
  RunConfig cfg = args.common.effective();
  if (!args.aggregation.empty()) cfg.aggregation = args.aggregation;
  if (args.max_n > 0) cfg.max_n = args.max_n;
  if (!args.smoothing.empty()) cfg.smoothing = args.smoothing;
  if (!args.stoplist.empty()) cfg.stoplist_path = args.stoplist;
  if (!args.yesno_lexicon.empty()) cfg.yesno_lexicon_path = args.yesno_lexicon;
  if (args.qa.empty() == args.relation.empty()) {
    throw UsageError("score needs exactly one of --qa <items> <answers> or --relation <items> <answers>");
  }

  json echo = config_to_json(cfg);
  echo["subcommand"] = "score";
  std::string cfg_hash = hash_json(echo);

  EvalReport report;
  AnswerSet answers;
  if (!args.qa.empty()) {
    auto items = read_qa_items(args.qa[0]);
    answers = replay_answers(args.qa[1]);
    QaScoreConfig score_cfg;
    score_cfg.max_n = cfg.max_n;
    score_cfg.smoothing = smoothing_from_name(cfg.smoothing);
    if (!cfg.stoplist_path.empty()) score_cfg.stoplist = Stoplist::load(cfg.stoplist_path);
    report = score_qa(items, answers.answers, score_cfg);
  } else {
    auto items = read_relation_items(args.relation[0]);
    answers = replay_answers(args.relation[1]);
    YesNoLexicon lexicon =
        cfg.yesno_lexicon_path.empty() ? YesNoLexicon{} : YesNoLexicon::load(cfg.yesno_lexicon_path);
    AggregationMode mode = aggregation_mode_from_name(cfg.aggregation);

    std::vector<std::string> missing;
    std::map<std::string, YesNo> predictions;
    for (const auto& item : items) {
      std::vector<YesNo> parsed;
      for (auto it = answers.answers.lower_bound({item.item_id, 0});
           it != answers.answers.end() && it->first.first == item.item_id; ++it) {
        parsed.push_back(parse_yesno(it->second, lexicon));
      }
      if (parsed.empty()) {
        missing.push_back(item.item_id);
        continue;
      }
      predictions[item.item_id] = aggregate_mixed(parsed, mode, item.gold);
    }
    if (!missing.empty()) {
      throw DataError("score: no answers for " + std::to_string(missing.size()) +
                      " relation items (first: " + missing.front() + ")");
    }
    report = score_relation(items, predictions, mode);
  }
  report.config_echo["config_hash"] = cfg_hash;
  report.config_echo["answer_duplicates"] = answers.duplicates;
  report.config_echo["answer_errors"] = answers.errors;
  if (cfg.seed) report.config_echo["seed"] = *cfg.seed;
  write_report(report, args.out);

  RunLog log;
  log.add("subcommand", "score");
  log.add("config_hash", cfg_hash);
  for (const auto& [k, v] : report.metrics) log.add("metric_" + k, std::to_string(v));
  log.add_file("output_report", args.out + ".json");
  log.add_file("output_items", args.out + ".items.tsv");
  log.write(args.out + ".run.log");
  for (const auto& [k, v] : report.metrics) std::cout << k << " = " << v << "\n";
}

// ---------------------------------------------------------------------------
// embed-report
// ---------------------------------------------------------------------------

struct EmbedReportArgs {
  FlagBinding common;
  std::string embeddings;
  std::vector<int> layers;
  std::string out;
};

void run_embed_report(const EmbedReportArgs& args) {
  RunConfig cfg = args.common.effective();
  if (args.embeddings.empty()) throw UsageError("embed-report requires --embeddings");
  if (args.out.empty()) throw UsageError("embed-report requires --out");
  if (args.layers.empty()) throw UsageError("embed-report requires --layers");

  json echo = config_to_json(cfg);
  echo["subcommand"] = "embed-report";
  for (int l : args.layers) echo["layers"].push_back(l);
  std::string cfg_hash = hash_json(echo);

  auto file = load_embeddings(args.embeddings);
  auto report = layer_report(file.records, args.layers);
  report.pooling = file.pooling;
  report.model_tag = file.model_tag;

  fs::create_directories(args.out);
  json j = layer_report_to_json(report);
  j["config_hash"] = cfg_hash;
  write_text_file(fs::path(args.out) / "layer_report.json", j.dump(2) + "\n");

  for (const auto& [layer, stats] : report.layers) {
    std::vector<std::array<double, 2>> coords;
    std::vector<std::string> labels;
    for (const auto& p : stats.points) {
      coords.push_back({p.x, p.y});
      labels.push_back(p.tissue_label.empty() ? "(unlabeled)" : p.tissue_label);
    }
    render_scatter_svg(coords, labels, fs::path(args.out) / ("scatter_layer_" + std::to_string(layer) + ".svg"));
  }
  if (!file.rejects.empty()) {
    std::string rejects = "row\treason\n";
    for (const auto& r : file.rejects) {
      rejects += std::to_string(r.row) + "\t" + r.reason + "\n";
    }
    write_text_file(fs::path(args.out) / "embed_rejects.tsv", rejects);
  }

  RunLog log;
  log.add("subcommand", "embed-report");
  log.add("config_hash", cfg_hash);
  log.add_file("input_embeddings", args.embeddings);
  log.add("records", std::to_string(file.records.size()));
  log.add("rejects", std::to_string(file.rejects.size()));
  log.add_file("output_report", fs::path(args.out) / "layer_report.json");
  log.write(fs::path(args.out) / "run.log");
  std::cout << "layer report for " << report.layers.size() << " layers -> " << args.out << "\n";
}

// ---------------------------------------------------------------------------
// train-manifest
// ---------------------------------------------------------------------------

struct TrainManifestArgs {
  FlagBinding common;
  int stage = 0;
  std::string size = "base";
  std::vector<std::string> corpus;
  std::string out;
  double learning_rate = 0;
  int batch_size = 0;
  double early_stop = 0;
  std::string adapter;
  double trainable_fraction = 0;
  CLI::Option* lr_opt = nullptr;
  CLI::Option* bs_opt = nullptr;
  CLI::Option* es_opt = nullptr;
  CLI::Option* ad_opt = nullptr;
  CLI::Option* tf_opt = nullptr;
};

void run_train_manifest(const TrainManifestArgs& args) {
  RunConfig cfg = args.common.effective();
  if (args.stage == 0) throw UsageError("train-manifest requires --stage 1|2");
  if (args.corpus.empty()) throw UsageError("train-manifest requires --corpus");
  if (args.out.empty()) throw UsageError("train-manifest requires --out");

  TrainManifestOptions options;
  options.stage = args.stage;
  options.model_size = args.size;
  options.corpus_files = args.corpus;
  options.mask_marker = cfg.mask_marker;
  if (args.lr_opt->count()) options.learning_rate = args.learning_rate;
  if (args.bs_opt->count()) options.batch_size = args.batch_size;
  if (args.es_opt->count()) options.early_stop_epochs = args.early_stop;
  if (args.ad_opt->count()) options.adapter_scheme = args.adapter;
  if (args.tf_opt->count()) options.trainable_fraction = args.trainable_fraction;

  json echo = config_to_json(cfg);
  echo["subcommand"] = "train-manifest";
  echo["stage"] = args.stage;
  echo["size"] = args.size;
  std::string cfg_hash = hash_json(echo);

  json manifest = train_manifest(options, cfg_hash);
  write_text_file(args.out, manifest.dump(2) + "\n");

  RunLog log;
  log.add("subcommand", "train-manifest");
  log.add("config_hash", cfg_hash);
  for (const auto& f : args.corpus) log.add_file("input_corpus", f);
  log.add_file("output_manifest", args.out);
  log.write(args.out + ".run.log");
  std::cout << "train manifest (stage " << args.stage << ", " << args.size << ") -> " << args.out
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gene-phenotype corpus construction and LLM evaluation toolkit"};
  app.require_subcommand(1);

  IngestArgs ingest_args;
  auto* ingest_cmd = app.add_subcommand("ingest", "parse flat-file exports into a knowledge store");
  ingest_args.common.add_common(ingest_cmd);
  ingest_cmd->add_option("--gene-info", ingest_args.gene_info, "gene info table(s)");
  ingest_cmd->add_option("--gene-phenotype", ingest_args.gene_phenotype, "gene-phenotype table(s)");
  ingest_cmd->add_option("--gene-protein", ingest_args.gene_protein, "gene-protein table(s)");
  ingest_cmd->add_option("--dbgap", ingest_args.dbgap, "dbGaP-like association table for crosscheck");
  ingest_cmd->add_option("--gene-info-spec", ingest_args.gene_info_spec, "spec JSON for gene info");
  ingest_cmd->add_option("--gene-phenotype-spec", ingest_args.gene_phenotype_spec,
                         "spec JSON for gene-phenotype");
  ingest_cmd->add_option("--gene-protein-spec", ingest_args.gene_protein_spec,
                         "spec JSON for gene-protein");
  ingest_cmd->add_option("--dbgap-spec", ingest_args.dbgap_spec, "spec JSON for the dbGaP table");
  ingest_cmd->add_option("--out", ingest_args.out, "output store file");
  ingest_cmd->add_option("--rejects", ingest_args.rejects, "rejects report path");
  ingest_cmd->callback([&]() { run_ingest(ingest_args); });

  BuildCorpusArgs corpus_args;
  auto* corpus_cmd = app.add_subcommand("build-corpus", "render the training corpus from a store");
  corpus_args.common.add_common(corpus_cmd);
  corpus_cmd->add_option("--store", corpus_args.store, "frozen store file");
  corpus_cmd->add_option("--out", corpus_args.out, "output directory");
  corpus_args.ratio_opt =
      corpus_cmd->add_option("--negative-ratio", corpus_args.negative_ratio, "negatives per positive");
  corpus_args.val_opt =
      corpus_cmd->add_option("--val-size", corpus_args.val_size, "validation holdout per stage");
  corpus_args.balance_opt =
      corpus_cmd->add_flag("--balance", corpus_args.balance, "downsample kinds to the minimum count");
  corpus_args.templates_opt =
      corpus_cmd->add_option("--templates", corpus_args.templates, "template directory");
  corpus_args.mask_opt = corpus_cmd->add_option("--mask", corpus_args.mask, "mask marker literal");
  corpus_args.jobs_opt = corpus_cmd->add_option("--jobs", corpus_args.jobs, "render partitions");
  corpus_cmd->callback([&]() { run_build_corpus(corpus_args); });

  MakeTasksArgs tasks_args;
  auto* tasks_cmd = app.add_subcommand("make-tasks", "generate QA and relation items");
  tasks_args.common.add_common(tasks_cmd);
  tasks_cmd->add_option("--store", tasks_args.store, "frozen store file");
  tasks_cmd->add_option("--out", tasks_args.out, "output directory");
  tasks_cmd->add_option("--qa-n", tasks_args.qa_n, "QA items per direction");
  tasks_cmd->add_option("--direction", tasks_args.direction, "p2g, g2p or both");
  tasks_cmd->add_option("--style", tasks_args.style, "question or completion");
  tasks_cmd->add_option("--evidence", tasks_args.evidence, "evidence table for relation items");
  tasks_cmd->add_option("--evidence-spec", tasks_args.evidence_spec, "spec JSON for evidence");
  tasks_cmd->add_option("--variants-k", tasks_args.variants_k, "prompt variants per relation item");
  tasks_cmd->add_option("--variants", tasks_args.variants, "variant template file");
  tasks_cmd->callback([&]() { run_make_tasks(tasks_args); });

  RunEvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("run-eval", "collect model answers for issued prompts");
  eval_args.common.add_common(eval_cmd);
  eval_cmd->add_option("--qa-items", eval_args.qa_items, "QA items file");
  eval_cmd->add_option("--relation-items", eval_args.relation_items, "relation items file");
  eval_cmd->add_option("--out", eval_args.out, "answers output file");
  eval_cmd->add_option("--endpoint-url", eval_args.endpoint_url, "completion endpoint base URL");
  eval_cmd->add_option("--model", eval_args.model, "model name sent to the endpoint");
  eval_cmd->add_option("--auth-env", eval_args.auth_env, "env var holding the bearer token");
  eval_cmd->add_option("--max-in-flight", eval_args.max_in_flight, "request concurrency cap");
  eval_cmd->add_option("--max-retries", eval_args.max_retries, "retries per request");
  eval_cmd->add_option("--timeout", eval_args.timeout, "request timeout seconds");
  eval_cmd->add_option("--max-new-tokens", eval_args.max_new_tokens, "completion length cap");
  eval_cmd->add_option("--temperature", eval_args.temperature, "sampling temperature");
  eval_cmd->callback([&]() { run_run_eval(eval_args); });

  ScoreArgs score_args;
  auto* score_cmd = app.add_subcommand("score", "score answers into reports");
  score_args.common.add_common(score_cmd);
  score_cmd->add_option("--qa", score_args.qa, "QA items file and answers file")->expected(2);
  score_cmd->add_option("--relation", score_args.relation, "relation items file and answers file")
      ->expected(2);
  score_cmd->add_option("--out", score_args.out, "report base path");
  score_cmd->add_option("--aggregation", score_args.aggregation, "oracle_best or majority");
  score_cmd->add_option("--max-n", score_args.max_n, "BLEU n-gram order");
  score_cmd->add_option("--smoothing", score_args.smoothing, "add_one or none");
  score_cmd->add_option("--stoplist", score_args.stoplist, "stoplist file (one token per line)");
  score_cmd->add_option("--yesno-lexicon", score_args.yesno_lexicon, "yes/no keyword sets JSON");
  score_cmd->callback([&]() { run_score(score_args); });

  EmbedReportArgs embed_args;
  auto* embed_cmd = app.add_subcommand("embed-report", "analyze exported entity embeddings");
  embed_args.common.add_common(embed_cmd);
  embed_cmd->add_option("--embeddings", embed_args.embeddings, "embedding export JSONL");
  embed_cmd->add_option("--layers", embed_args.layers, "layers to report")->delimiter(',');
  embed_cmd->add_option("--out", embed_args.out, "output directory");
  embed_cmd->callback([&]() { run_embed_report(embed_args); });

  TrainManifestArgs manifest_args;
  auto* manifest_cmd = app.add_subcommand("train-manifest", "emit the training handoff manifest");
  manifest_args.common.add_common(manifest_cmd);
  manifest_cmd->add_option("--stage", manifest_args.stage, "training stage (1 or 2)");
  manifest_cmd->add_option("--size", manifest_args.size, "model size: small, base or large");
  manifest_cmd->add_option("--corpus", manifest_args.corpus, "corpus file(s) the manifest covers");
  manifest_cmd->add_option("--out", manifest_args.out, "manifest output path");
  manifest_args.lr_opt =
      manifest_cmd->add_option("--learning-rate", manifest_args.learning_rate, "override");
  manifest_args.bs_opt = manifest_cmd->add_option("--batch-size", manifest_args.batch_size, "override");
  manifest_args.es_opt =
      manifest_cmd->add_option("--early-stop", manifest_args.early_stop, "override (epochs)");
  manifest_args.ad_opt = manifest_cmd->add_option("--adapter", manifest_args.adapter,
                                                  "override: lora, qlora_8bit or qlora_4bit");
  manifest_args.tf_opt = manifest_cmd->add_option("--trainable-fraction",
                                                  manifest_args.trainable_fraction, "override");
  manifest_cmd->callback([&]() { run_train_manifest(manifest_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
