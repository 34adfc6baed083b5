#include "gpmap/eval.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <unordered_map>

#include "gpmap/util.hpp"

namespace gpmap {

using nlohmann::json;

const char* direction_name(Direction d) {
  return d == Direction::PhenoToGene ? "pheno_to_gene" : "gene_to_pheno";
}

const char* qa_style_name(QaStyle s) { return s == QaStyle::Question ? "question" : "completion"; }

Direction direction_from_name(const std::string& s) {
  if (s == "pheno_to_gene") return Direction::PhenoToGene;
  if (s == "gene_to_pheno") return Direction::GeneToPheno;
  throw DataError("unknown direction: " + s);
}

QaStyle qa_style_from_name(const std::string& s) {
  if (s == "question") return QaStyle::Question;
  if (s == "completion") return QaStyle::Completion;
  throw DataError("unknown QA style: " + s);
}

const char* yesno_name(YesNo v) {
  switch (v) {
    case YesNo::Yes: return "yes";
    case YesNo::No: return "no";
    case YesNo::Unparseable: return "unparseable";
  }
  return "?";
}

const char* aggregation_mode_name(AggregationMode m) {
  return m == AggregationMode::OracleBest ? "oracle_best" : "majority";
}

AggregationMode aggregation_mode_from_name(const std::string& s) {
  if (s == "oracle_best") return AggregationMode::OracleBest;
  if (s == "majority") return AggregationMode::Majority;
  throw DataError("unknown aggregation mode: " + s);
}

// ---------------------------------------------------------------------------
// QA items
// ---------------------------------------------------------------------------

namespace {

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
void partial_shuffle(std::vector<T>& v, std::size_t k, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < k && i + 1 < v.size(); ++i) {
    std::size_t j = i + bounded_rand(rng, v.size() - i);
    std::swap(v[i], v[j]);
  }
}

std::string shortest_name(const std::vector<GoldEntity>& gold) {
  std::string best;
  for (const auto& e : gold) {
    if (best.empty() || e.name.size() < best.size() ||
        (e.name.size() == best.size() && e.name < best)) {
      best = e.name;
    }
  }
  return best;
}

}  // namespace

std::vector<QaItem> make_qa_items(const KnowledgeStore& store, std::size_t n, std::uint64_t seed,
                                  Direction direction, QaStyle style) {
  if (!store.frozen()) throw DataError("make_qa_items requires a frozen store");
  struct Pair {
    std::int64_t gene_id;
    std::string pheno_id;
  };
  std::vector<Pair> pairs;
  std::unordered_map<std::string, std::vector<std::int64_t>> genes_by_pheno;
  std::unordered_map<std::int64_t, std::vector<std::string>> phenos_by_gene;
  for (const auto& e : store.edges()) {
    if (e.kind != EdgeKind::GenePhenotype) continue;
    std::int64_t gid = std::stoll(e.subject.id);
    const auto* gene = store.find_gene(gid);
    const auto* pheno = store.find_phenotype(e.object.id);
    if (!gene || !pheno) continue;
    if (trim(gene->symbol).empty() || trim(pheno->name).empty()) continue;
    pairs.push_back({gid, e.object.id});
    genes_by_pheno[e.object.id].push_back(gid);
    phenos_by_gene[gid].push_back(e.object.id);
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.gene_id, a.pheno_id) < std::tie(b.gene_id, b.pheno_id);
  });
  if (n > pairs.size()) {
    throw DataError("make_qa_items: requested " + std::to_string(n) + " items but only " +
                    std::to_string(pairs.size()) + " usable pairs exist");
  }

  std::mt19937_64 rng(derive_seed(seed, std::string("qa_items:") + direction_name(direction)));
  partial_shuffle(pairs, n, rng);
  pairs.resize(n);
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.gene_id, a.pheno_id) < std::tie(b.gene_id, b.pheno_id);
  });

  std::vector<QaItem> items;
  items.reserve(n);
  for (const auto& pair : pairs) {
    const auto* gene = store.find_gene(pair.gene_id);
    const auto* pheno = store.find_phenotype(pair.pheno_id);
    QaItem item;
    item.direction = direction;
    item.style = style;
    if (direction == Direction::PhenoToGene) {
      const std::string& disease = pheno->name;
      item.prompt_text = style == QaStyle::Question
                             ? "What are genes related to " + disease + "?"
                             : "The name of the gene related to " + disease + " is";
      std::vector<std::int64_t> gold_ids = genes_by_pheno[pair.pheno_id];
      std::sort(gold_ids.begin(), gold_ids.end());
      gold_ids.erase(std::unique(gold_ids.begin(), gold_ids.end()), gold_ids.end());
      for (auto gid : gold_ids) {
        const auto* g = store.find_gene(gid);
        if (!g || trim(g->symbol).empty()) continue;
        item.gold_entities.push_back({g->symbol, g->synonyms});
        item.gold_sentences.push_back("The gene " + g->symbol + " is associated with " + disease + ".");
      }
    } else {
      const std::string& symbol = gene->symbol;
      item.prompt_text = style == QaStyle::Question
                             ? "What are phenotypes related to " + symbol + "?"
                             : "The name of the phenotype related to " + symbol + " is";
      std::vector<std::string> gold_ids = phenos_by_gene[pair.gene_id];
      std::sort(gold_ids.begin(), gold_ids.end());
      gold_ids.erase(std::unique(gold_ids.begin(), gold_ids.end()), gold_ids.end());
      for (const auto& pid : gold_ids) {
        const auto* p = store.find_phenotype(pid);
        if (!p || trim(p->name).empty()) continue;
        item.gold_entities.push_back({p->name, p->synonyms});
        item.gold_sentences.push_back("The phenotype " + p->name + " is associated with " + symbol +
                                      ".");
      }
    }
    if (item.gold_entities.empty()) continue;
    item.keyword_reference = shortest_name(item.gold_entities);
    item.item_id = "qa-" + to_hex(fnv64(std::string(direction_name(direction)) + '\x1f' +
                                        qa_style_name(style) + '\x1f' + std::to_string(pair.gene_id) +
                                        '\x1f' + pair.pheno_id));
    items.push_back(std::move(item));
  }
  return items;
}

namespace {

json qa_item_to_json(const QaItem& item) {
  json gold = json::array();
  for (const auto& e : item.gold_entities) {
    gold.push_back({{"name", e.name}, {"synonyms", e.synonyms}});
  }
  return json{{"item_id", item.item_id},
              {"direction", direction_name(item.direction)},
              {"style", qa_style_name(item.style)},
              {"prompt_text", item.prompt_text},
              {"gold_entities", gold},
              {"keyword_reference", item.keyword_reference},
              {"gold_sentences", item.gold_sentences}};
}

QaItem qa_item_from_json(const json& j) {
  QaItem item;
  item.item_id = j.at("item_id").get<std::string>();
  item.direction = direction_from_name(j.at("direction").get<std::string>());
  item.style = qa_style_from_name(j.at("style").get<std::string>());
  item.prompt_text = j.at("prompt_text").get<std::string>();
  for (const auto& e : j.at("gold_entities")) {
    item.gold_entities.push_back(
        {e.at("name").get<std::string>(), e.at("synonyms").get<std::vector<std::string>>()});
  }
  item.keyword_reference = j.at("keyword_reference").get<std::string>();
  item.gold_sentences = j.at("gold_sentences").get<std::vector<std::string>>();
  return item;
}

}  // namespace

void write_qa_items(const std::filesystem::path& path, const std::vector<QaItem>& items) {
  std::ostringstream out;
  for (const auto& item : items) out << qa_item_to_json(item).dump() << '\n';
  write_text_file(path, out.str());
}

std::vector<QaItem> read_qa_items(const std::filesystem::path& path) {
  std::vector<QaItem> items;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    if (trim(line).empty()) return;
    try {
      items.push_back(qa_item_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  return items;
}

// ---------------------------------------------------------------------------
// Relation items
// ---------------------------------------------------------------------------

std::vector<std::string> default_relation_variants() {
  return {
      "Determine whether the gene {gene} is associated with the disease {disease}. Evidence: "
      "{evidence} Answer yes or no.",
      "Based on the following text, is there a relationship between {gene} and {disease}? Text: "
      "{evidence}",
      "Evidence: {evidence} Question: does {gene} relate to {disease}? Reply with yes or no.",
      "Read the passage and decide if {gene} and {disease} are associated. Passage: {evidence}",
      "Is the gene {gene} linked to the phenotype {disease} according to this text: {evidence}",
  };
}

std::vector<std::string> load_relation_variants(const std::filesystem::path& path) {
  std::vector<std::string> variants;
  for_each_line(path, [&](std::size_t, const std::string& line) {
    std::string t = trim(line);
    if (!t.empty() && t[0] != '#') variants.push_back(t);
  });
  if (variants.empty()) throw DataError("variant template file is empty: " + path.string());
  return variants;
}

namespace {

std::string fill_variant(const std::string& tmpl, const RelationItem& item) {
  std::string out = tmpl;
  auto replace_all = [](std::string& s, std::string_view from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
      s.replace(pos, from.size(), to);
      pos += to.size();
    }
  };
  replace_all(out, "{gene}", item.gene);
  replace_all(out, "{disease}", item.disease);
  replace_all(out, "{evidence}", item.evidence);
  return out;
}

}  // namespace

std::vector<RelationItem> make_relation_items(const std::vector<EvidenceRecord>& evidence,
                                              const KnowledgeStore& store, int variants_k,
                                              std::uint64_t seed,
                                              const std::vector<std::string>& variant_templates,
                                              ScreeningReport* report) {
  (void)seed;  // item construction is deterministic given the inputs
  if (!store.frozen()) throw DataError("make_relation_items requires a frozen store");
  if (variants_k < 1) throw DataError("make_relation_items: variants_k must be >= 1");
  if (static_cast<std::size_t>(variants_k) > variant_templates.size()) {
    throw DataError("make_relation_items: variants_k " + std::to_string(variants_k) +
                    " exceeds the " + std::to_string(variant_templates.size()) +
                    " available variant templates");
  }

  auto positives = store.positive_pairs();
  ScreeningReport local;
  local.total = evidence.size();

  std::vector<RelationItem> items;
  for (const auto& rec : evidence) {
    bool pair_in_store = false;
    auto gene = store.resolve_symbol(rec.gene_symbol);
    auto pheno = store.resolve_phenotype_name(rec.disease_name);
    if (gene && pheno) {
      pair_in_store = positives.count({std::stoll(gene->id), pheno->id}) > 0;
    }
    // Knowledge screening: the evidence label has to agree with the store.
    if (rec.label != pair_in_store) {
      ++local.dropped;
      ++local.drop_reasons[rec.label ? "positive_not_in_store" : "negative_in_store"];
      continue;
    }
    RelationItem item;
    item.gene = rec.gene_symbol;
    item.disease = rec.disease_name;
    item.evidence = rec.sentence;
    item.gold = rec.label;
    item.item_id =
        "rel-" + to_hex(fnv64(rec.gene_symbol + '\x1f' + rec.disease_name + '\x1f' + rec.sentence));
    for (int v = 0; v < variants_k; ++v) {
      item.prompt_variants.push_back(fill_variant(variant_templates[static_cast<std::size_t>(v)], item));
    }
    ++local.kept;
    items.push_back(std::move(item));
  }
  if (report) *report = local;
  return items;
}

void write_relation_items(const std::filesystem::path& path, const std::vector<RelationItem>& items) {
  std::ostringstream out;
  for (const auto& item : items) {
    json j{{"item_id", item.item_id},     {"gene", item.gene},
           {"disease", item.disease},     {"evidence", item.evidence},
           {"gold", item.gold},           {"prompt_variants", item.prompt_variants}};
    out << j.dump() << '\n';
  }
  write_text_file(path, out.str());
}

std::vector<RelationItem> read_relation_items(const std::filesystem::path& path) {
  std::vector<RelationItem> items;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    if (trim(line).empty()) return;
    try {
      json j = json::parse(line);
      RelationItem item;
      item.item_id = j.at("item_id").get<std::string>();
      item.gene = j.at("gene").get<std::string>();
      item.disease = j.at("disease").get<std::string>();
      item.evidence = j.at("evidence").get<std::string>();
      item.gold = j.at("gold").get<bool>();
      item.prompt_variants = j.at("prompt_variants").get<std::vector<std::string>>();
      items.push_back(std::move(item));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  return items;
}

// ---------------------------------------------------------------------------
// Yes/no parsing and aggregation
// ---------------------------------------------------------------------------

YesNoLexicon YesNoLexicon::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw DataError("yes/no lexicon " + path.string() + ": " + e.what());
  }
  YesNoLexicon lex;
  for (const auto& [key, value] : j.items()) {
    if (key == "affirmative") {
      lex.affirmative = value.get<std::vector<std::string>>();
    } else if (key == "negative") {
      lex.negative = value.get<std::vector<std::string>>();
    } else {
      throw DataError("yes/no lexicon " + path.string() + ": unknown key \"" + key + "\"");
    }
  }
  if (lex.affirmative.empty() || lex.negative.empty()) {
    throw DataError("yes/no lexicon needs nonempty affirmative and negative sets");
  }
  return lex;
}

YesNo parse_yesno(std::string_view raw, const YesNoLexicon& lexicon) {
  for (const auto& token : tokenize(raw)) {
    if (std::find(lexicon.affirmative.begin(), lexicon.affirmative.end(), token) !=
        lexicon.affirmative.end()) {
      return YesNo::Yes;
    }
    if (std::find(lexicon.negative.begin(), lexicon.negative.end(), token) != lexicon.negative.end()) {
      return YesNo::No;
    }
  }
  return YesNo::Unparseable;
}

YesNo aggregate_mixed(const std::vector<YesNo>& answers, AggregationMode mode, bool gold) {
  if (answers.empty()) throw DataError("aggregate_mixed: zero answers for item");
  YesNo gold_label = gold ? YesNo::Yes : YesNo::No;
  if (mode == AggregationMode::OracleBest) {
    if (std::find(answers.begin(), answers.end(), gold_label) != answers.end()) return gold_label;
  }
  std::size_t yes = 0, no = 0;
  for (auto a : answers) {
    if (a == YesNo::Yes) ++yes;
    if (a == YesNo::No) ++no;
  }
  if (yes > no) return YesNo::Yes;
  if (no > yes) return YesNo::No;
  return YesNo::Unparseable;
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

namespace {

std::string format_score(double v) {
  std::ostringstream ss;
  ss.precision(9);
  ss << std::fixed << v;
  return ss.str();
}

}  // namespace

EvalReport score_qa(const std::vector<QaItem>& items, const AnswerMap& answers,
                    const QaScoreConfig& config) {
  std::vector<std::string> missing;
  for (const auto& item : items) {
    if (!answers.count({item.item_id, 0})) missing.push_back(item.item_id);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) {
      if (i) list += ", ";
      list += missing[i];
    }
    if (missing.size() > 10) list += ", ...";
    throw DataError("score_qa: missing answers for " + std::to_string(missing.size()) +
                    " items: " + list);
  }

  EvalReport report;
  report.item_columns = {"item_id", "direction", "style", "bleu", "keyword_bleu1", "entity_match"};

  double bleu_sum = 0.0, bleu1_sum = 0.0;
  std::map<Direction, std::pair<std::size_t, std::size_t>> acc;  // direction -> (matched, total)
  for (const auto& item : items) {
    const std::string& answer = answers.at({item.item_id, 0});
    TokenList cand = tokenize(answer);
    std::vector<TokenList> refs;
    for (const auto& s : item.gold_sentences) refs.push_back(tokenize(s));
    double b = bleu(cand, refs, config.max_n, config.smoothing).score;
    double b1 = keyword_bleu1(cand, tokenize(item.keyword_reference));
    auto match = entity_match(answer, item.gold_entities, config.stoplist);
    bleu_sum += b;
    bleu1_sum += b1;
    auto& [matched, total] = acc[item.direction];
    if (match.matched) ++matched;
    ++total;
    report.item_rows.push_back({item.item_id, direction_name(item.direction),
                                qa_style_name(item.style), format_score(b), format_score(b1),
                                match.matched ? "1" : "0"});
  }

  if (!items.empty()) {
    report.metrics["bleu"] = bleu_sum / static_cast<double>(items.size());
    report.metrics["bleu1"] = bleu1_sum / static_cast<double>(items.size());
  }
  if (auto it = acc.find(Direction::GeneToPheno); it != acc.end() && it->second.second > 0) {
    report.metrics["acc_g_p"] =
        static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
  }
  if (auto it = acc.find(Direction::PhenoToGene); it != acc.end() && it->second.second > 0) {
    report.metrics["acc_p_g"] =
        static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
  }
  report.counts["items"] = items.size();
  report.config_echo["max_n"] = config.max_n;
  report.config_echo["smoothing"] = config.smoothing == Smoothing::AddOne ? "add_one" : "none";
  report.config_echo["stoplist_size"] = config.stoplist.size();
  return report;
}

EvalReport score_relation(const std::vector<RelationItem>& items,
                          const std::map<std::string, YesNo>& predictions,
                          AggregationMode mode_echo) {
  std::vector<std::string> missing;
  for (const auto& item : items) {
    if (!predictions.count(item.item_id)) missing.push_back(item.item_id);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) {
      if (i) list += ", ";
      list += missing[i];
    }
    if (missing.size() > 10) list += ", ...";
    throw DataError("score_relation: missing predictions for " + std::to_string(missing.size()) +
                    " items: " + list);
  }

  EvalReport report;
  report.item_columns = {"item_id", "gene", "disease", "gold", "prediction", "correct"};
  ConfusionCounts counts;
  for (const auto& item : items) {
    YesNo pred = predictions.at(item.item_id);
    bool correct;
    if (item.gold) {
      // UNPARSEABLE is a wrong prediction on the positive side
      correct = pred == YesNo::Yes;
      if (correct) {
        ++counts.tp;
      } else {
        ++counts.fn;
      }
    } else {
      correct = pred == YesNo::No;
      if (correct) {
        ++counts.tn;
      } else {
        ++counts.fp;
      }
    }
    report.item_rows.push_back({item.item_id, item.gene, item.disease, item.gold ? "yes" : "no",
                                yesno_name(pred), correct ? "1" : "0"});
  }
  auto m = confusion_metrics(counts);
  report.metrics["precision"] = m.precision;
  report.metrics["recall"] = m.recall;
  report.metrics["accuracy"] = m.accuracy;
  report.metrics["f1"] = m.f1;
  report.counts["tp"] = counts.tp;
  report.counts["fp"] = counts.fp;
  report.counts["fn"] = counts.fn;
  report.counts["tn"] = counts.tn;
  report.counts["items"] = items.size();
  report.config_echo["aggregation"] = aggregation_mode_name(mode_echo);
  return report;
}

void write_report(const EvalReport& report, const std::filesystem::path& base) {
  json metrics = json::object();
  for (const auto& [k, v] : report.metrics) metrics[k] = v;
  json j{{"metrics", metrics}, {"counts", report.counts}, {"config", report.config_echo}};
  write_text_file(base.string() + ".json", j.dump(2) + "\n");

  std::ostringstream tsv;
  for (std::size_t i = 0; i < report.item_columns.size(); ++i) {
    if (i) tsv << '\t';
    tsv << report.item_columns[i];
  }
  tsv << '\n';
  for (const auto& row : report.item_rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) tsv << '\t';
      std::string cell = row[i];
      for (char& c : cell) {
        if (c == '\t' || c == '\n') c = ' ';
      }
      tsv << cell;
    }
    tsv << '\n';
  }
  write_text_file(base.string() + ".items.tsv", tsv.str());
}

}  // namespace gpmap
