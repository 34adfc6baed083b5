#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "gpmap/eval.hpp"
#include "gpmap/util.hpp"
#include "test_support.hpp"

using namespace gpmap;
using gpmap::testing::make_synthetic_store;
namespace fs = std::filesystem;

TEST_CASE("make_qa_items samples distinct pairs with full gold sets") {
  KnowledgeStore store = make_synthetic_store({12, 4, 0, 2, true});
  store.freeze();
  // 4 phenotypes, 24 edges: each phenotype collects several genes
  auto items = make_qa_items(store, 10, 7, Direction::PhenoToGene);
  CHECK(items.size() == 10);
  for (const auto& item : items) {
    CHECK(item.direction == Direction::PhenoToGene);
    CHECK(item.style == QaStyle::Question);
    CHECK(item.prompt_text.rfind("What are genes related to ", 0) == 0);
    CHECK(item.prompt_text.back() == '?');
    CHECK_FALSE(item.gold_entities.empty());
    CHECK(item.gold_sentences.size() == item.gold_entities.size());
    CHECK_FALSE(item.keyword_reference.empty());
  }

  // all genes associated with each disease were recorded
  KnowledgeStore tiny;
  tiny.upsert(GeneRecord{1, "G1", {}, "", {}});
  tiny.upsert(GeneRecord{2, "G2", {}, "", {}});
  tiny.upsert(GeneRecord{3, "G3", {}, "", {}});
  tiny.upsert(PhenotypeRecord{"D1", "shared disease", {}, "", {}, std::nullopt});
  for (std::int64_t g : {1, 2, 3}) {
    AssociationEdge e;
    e.subject = gene_ref(g);
    e.object = phenotype_ref("D1");
    e.kind = EdgeKind::GenePhenotype;
    tiny.link_edge(e);
  }
  tiny.freeze();
  auto one = make_qa_items(tiny, 1, 3, Direction::PhenoToGene);
  REQUIRE(one.size() == 1);
  CHECK(one[0].gold_entities.size() == 3);
}

TEST_CASE("make_qa_items styles, reverse direction, determinism, and bounds") {
  KnowledgeStore store = make_synthetic_store({8, 4, 0, 2, true});
  store.freeze();

  auto completion = make_qa_items(store, 4, 11, Direction::PhenoToGene, QaStyle::Completion);
  for (const auto& item : completion) {
    CHECK(item.prompt_text.rfind("The name of the gene related to ", 0) == 0);
    CHECK(item.prompt_text.substr(item.prompt_text.size() - 3) == " is");
  }

  auto reverse = make_qa_items(store, 4, 11, Direction::GeneToPheno);
  for (const auto& item : reverse) {
    CHECK(item.prompt_text.rfind("What are phenotypes related to ", 0) == 0);
  }

  auto a = make_qa_items(store, 6, 19, Direction::PhenoToGene);
  auto b = make_qa_items(store, 6, 19, Direction::PhenoToGene);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].item_id == b[i].item_id);

  // n equal to the pair count uses every pair once; above it errors
  auto all = make_qa_items(store, 16, 5, Direction::PhenoToGene);
  CHECK(all.size() == 16);
  CHECK_THROWS_AS(make_qa_items(store, 17, 5, Direction::PhenoToGene), DataError);
}

TEST_CASE("qa items round-trip through the items file") {
  KnowledgeStore store = make_synthetic_store({8, 4, 0, 2, true});
  store.freeze();
  auto items = make_qa_items(store, 5, 23, Direction::PhenoToGene);
  fs::create_directories("eval_test");
  write_qa_items("eval_test/qa.jsonl", items);
  auto loaded = read_qa_items("eval_test/qa.jsonl");
  REQUIRE(loaded.size() == items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    CHECK(loaded[i].item_id == items[i].item_id);
    CHECK(loaded[i].prompt_text == items[i].prompt_text);
    CHECK(loaded[i].keyword_reference == items[i].keyword_reference);
    CHECK(loaded[i].gold_sentences == items[i].gold_sentences);
  }
}

TEST_CASE("make_relation_items screens against the store positive set") {
  KnowledgeStore store;
  store.upsert(GeneRecord{1, "APP", {"A4"}, "", {}});
  store.upsert(GeneRecord{2, "MAPT", {}, "", {}});
  store.upsert(PhenotypeRecord{"D1", "Alzheimer disease", {}, "", {}, std::nullopt});
  store.upsert(PhenotypeRecord{"D2", "Pick disease", {}, "", {}, std::nullopt});
  AssociationEdge e;
  e.subject = gene_ref(1);
  e.object = phenotype_ref("D1");
  e.kind = EdgeKind::GenePhenotype;
  store.link_edge(e);
  store.freeze();

  std::vector<EvidenceRecord> evidence{
      {"APP", "Alzheimer disease", "APP mutations cause early onset dementia.", true},   // keep
      {"MAPT", "Alzheimer disease", "MAPT is near the locus.", true},                    // drop
      {"MAPT", "Pick disease", "No asserted association in this sentence.", false},      // keep
      {"A4", "Alzheimer disease", "Alias text asserting the association.", true},        // keep (alias)
      {"GHOST", "Alzheimer disease", "Unknown gene claim.", true},                       // drop
  };
  ScreeningReport report;
  auto items = make_relation_items(evidence, store, 3, 1, default_relation_variants(), &report);
  CHECK(report.total == 5);
  CHECK(report.kept == 3);
  CHECK(report.dropped == 2);
  CHECK(report.kept + report.dropped == report.total);
  CHECK(report.drop_reasons.at("positive_not_in_store") == 2);
  REQUIRE(items.size() == 3);
  for (const auto& item : items) {
    CHECK(item.prompt_variants.size() == 3);
    for (const auto& prompt : item.prompt_variants) {
      CHECK(prompt.find(item.gene) != std::string::npos);
      CHECK(prompt.find(item.disease) != std::string::npos);
    }
  }
  CHECK(items[0].gold == true);
  CHECK(items[1].gold == false);

  CHECK_THROWS_AS(make_relation_items(evidence, store, 0, 1, default_relation_variants()), DataError);
  CHECK_THROWS_AS(make_relation_items(evidence, store, 99, 1, default_relation_variants()), DataError);

  auto empty = make_relation_items({}, store, 2, 1, default_relation_variants());
  CHECK(empty.empty());
}

TEST_CASE("parse_yesno first keyword wins") {
  CHECK(parse_yesno("Yes, the gene is associated.") == YesNo::Yes);
  CHECK(parse_yesno("There is no evidence.") == YesNo::No);
  CHECK(parse_yesno("The relationship is unclear.") == YesNo::Unparseable);
  CHECK(parse_yesno("It is not associated.") == YesNo::No);  // "not" precedes "associated"
  CHECK(parse_yesno("Associated? certainly not") == YesNo::Yes);
  CHECK(parse_yesno("TRUE") == YesNo::Yes);
  CHECK(parse_yesno("") == YesNo::Unparseable);
  // word-boundary matching: "notable" must not fire "not"
  CHECK(parse_yesno("A notable finding.") == YesNo::Unparseable);

  YesNoLexicon custom;
  custom.affirmative = {"affirmative"};
  custom.negative = {"nope"};
  CHECK(parse_yesno("Affirmative!", custom) == YesNo::Yes);
  CHECK(parse_yesno("yes", custom) == YesNo::Unparseable);
}

TEST_CASE("aggregate_mixed oracle-best and majority") {
  using V = std::vector<YesNo>;
  // gold-aware: any variant that hit the gold label wins
  CHECK(aggregate_mixed(V{YesNo::Yes, YesNo::No, YesNo::No}, AggregationMode::OracleBest, true) ==
        YesNo::Yes);
  CHECK(aggregate_mixed(V{YesNo::Yes, YesNo::No, YesNo::No}, AggregationMode::OracleBest, false) ==
        YesNo::No);
  // no variant hit gold: majority of parsed labels
  CHECK(aggregate_mixed(V{YesNo::No, YesNo::No, YesNo::Unparseable}, AggregationMode::OracleBest,
                        true) == YesNo::No);
  // majority mode ignores gold; ties are unparseable
  CHECK(aggregate_mixed(V{YesNo::Yes, YesNo::No}, AggregationMode::Majority, true) ==
        YesNo::Unparseable);
  CHECK(aggregate_mixed(V{YesNo::Yes, YesNo::Yes, YesNo::No}, AggregationMode::Majority, false) ==
        YesNo::Yes);
  // single variant: that variant's parse in both modes
  CHECK(aggregate_mixed(V{YesNo::No}, AggregationMode::OracleBest, true) == YesNo::No);
  CHECK(aggregate_mixed(V{YesNo::No}, AggregationMode::Majority, true) == YesNo::No);
  CHECK_THROWS_AS(aggregate_mixed(V{}, AggregationMode::Majority, true), DataError);
}

TEST_CASE("score_qa echo answers score perfectly; constant wrong answers score zero") {
  KnowledgeStore store = make_synthetic_store({10, 5, 0, 2, true});
  store.freeze();
  auto items = make_qa_items(store, 8, 3, Direction::PhenoToGene);

  AnswerMap echo;
  for (const auto& item : items) echo[{item.item_id, 0}] = item.gold_sentences.front();
  auto report = score_qa(items, echo);
  CHECK(report.metrics.at("bleu") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.metrics.at("acc_p_g") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.metrics.count("acc_g_p") == 0);  // no gene-to-pheno items issued

  AnswerMap wrong;
  for (const auto& item : items) wrong[{item.item_id, 0}] = "The answer is entirely unknown.";
  auto bad = score_qa(items, wrong);
  CHECK(bad.metrics.at("acc_p_g") == 0.0);

  AnswerMap incomplete = echo;
  incomplete.erase({items[0].item_id, 0});
  CHECK_THROWS_AS(score_qa(items, incomplete), DataError);
}

TEST_CASE("score_qa matches a hand-scored mixed fixture") {
  // two items, one answered exactly, one answered with a partial mention
  QaItem a;
  a.item_id = "qa-1";
  a.direction = Direction::PhenoToGene;
  a.style = QaStyle::Question;
  a.prompt_text = "What are genes related to toy disease?";
  a.gold_entities = {{"APP", {}}};
  a.keyword_reference = "APP";
  a.gold_sentences = {"The gene APP is associated with toy disease."};

  QaItem b = a;
  b.item_id = "qa-2";
  b.gold_entities = {{"MAPT", {}}};
  b.keyword_reference = "MAPT";
  b.gold_sentences = {"The gene MAPT is associated with toy disease."};

  AnswerMap answers;
  answers[{"qa-1", 0}] = "The gene APP is associated with toy disease.";  // exact echo
  answers[{"qa-2", 0}] = "PSEN1 seems more likely.";                       // wrong entity

  auto report = score_qa({a, b}, answers);
  // item a: bleu 1, kb1 = 1/8 tokens = 0.125, match 1
  // item b: match 0, kb1 0
  CHECK(report.metrics.at("acc_p_g") == doctest::Approx(0.5));
  CHECK(report.metrics.at("bleu1") == doctest::Approx((0.125 + 0.0) / 2).epsilon(1e-9));
  CHECK(report.item_rows.size() == 2);
}

TEST_CASE("score_relation counts the confusion matrix with UNPARSEABLE as wrong") {
  std::vector<RelationItem> items;
  for (int i = 0; i < 10; ++i) {
    RelationItem item;
    item.item_id = "rel-" + std::to_string(i);
    item.gene = "G";
    item.disease = "D";
    item.evidence = "E";
    item.gold = i < 3;  // 30% positives
    item.prompt_variants = {"p"};
    items.push_back(item);
  }
  std::map<std::string, YesNo> constant_yes;
  for (const auto& item : items) constant_yes[item.item_id] = YesNo::Yes;
  auto report = score_relation(items, constant_yes);
  CHECK(report.metrics.at("precision") == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(report.metrics.at("recall") == doctest::Approx(1.0));
  CHECK(report.counts.at("tp").get<std::size_t>() == 3);
  CHECK(report.counts.at("fp").get<std::size_t>() == 7);

  // all-correct predictions give F1 = 1
  std::map<std::string, YesNo> perfect;
  for (const auto& item : items) perfect[item.item_id] = item.gold ? YesNo::Yes : YesNo::No;
  CHECK(score_relation(items, perfect).metrics.at("f1") == doctest::Approx(1.0));

  // UNPARSEABLE lands on the wrong side of whichever label is gold
  std::map<std::string, YesNo> unparseable;
  for (const auto& item : items) unparseable[item.item_id] = YesNo::Unparseable;
  auto u = score_relation(items, unparseable);
  CHECK(u.counts.at("fn").get<std::size_t>() == 3);
  CHECK(u.counts.at("fp").get<std::size_t>() == 7);
  CHECK(u.metrics.at("accuracy") == 0.0);

  std::map<std::string, YesNo> missing = perfect;
  missing.erase("rel-0");
  CHECK_THROWS_AS(score_relation(items, missing), DataError);
}

TEST_CASE("oracle-best dominates majority on random fixtures") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<RelationItem> items;
    std::map<std::string, std::vector<YesNo>> parsed;
    int n = 10 + int(rng() % 30);
    for (int i = 0; i < n; ++i) {
      RelationItem item;
      item.item_id = "rel-" + std::to_string(i);
      item.gene = "G";
      item.disease = "D";
      item.evidence = "E";
      item.gold = rng() % 2 == 0;
      item.prompt_variants = {"a", "b", "c"};
      items.push_back(item);
      std::vector<YesNo> votes;
      for (int v = 0; v < 3; ++v) {
        int r = int(rng() % 3);
        votes.push_back(r == 0 ? YesNo::Yes : (r == 1 ? YesNo::No : YesNo::Unparseable));
      }
      parsed[item.item_id] = votes;
    }
    std::map<std::string, YesNo> oracle, majority;
    for (const auto& item : items) {
      oracle[item.item_id] = aggregate_mixed(parsed[item.item_id], AggregationMode::OracleBest, item.gold);
      majority[item.item_id] = aggregate_mixed(parsed[item.item_id], AggregationMode::Majority, item.gold);
    }
    double acc_oracle = score_relation(items, oracle).metrics.at("accuracy");
    double acc_majority = score_relation(items, majority).metrics.at("accuracy");
    CAPTURE(trial);
    CHECK(acc_oracle >= acc_majority - 1e-12);
  }
}

TEST_CASE("reports are byte-identical across repeated writes") {
  std::vector<RelationItem> items;
  RelationItem item;
  item.item_id = "rel-0";
  item.gene = "APP";
  item.disease = "AD";
  item.evidence = "text";
  item.gold = true;
  item.prompt_variants = {"p"};
  items.push_back(item);
  std::map<std::string, YesNo> preds{{"rel-0", YesNo::Yes}};
  auto report = score_relation(items, preds);

  fs::create_directories("eval_test");
  write_report(report, "eval_test/r1");
  write_report(report, "eval_test/r2");
  CHECK(read_text_file("eval_test/r1.json") == read_text_file("eval_test/r2.json"));
  CHECK(read_text_file("eval_test/r1.items.tsv") == read_text_file("eval_test/r2.items.tsv"));
}
