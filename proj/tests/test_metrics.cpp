#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gpmap/metrics.hpp"
#include "gpmap/util.hpp"

using namespace gpmap;

TEST_CASE("tokenize lowercases and splits on punctuation") {
  CHECK(tokenize("BRCA-1 is (related)") == TokenList{"brca", "1", "is", "related"});
  CHECK(tokenize("PSEN1") == TokenList{"psen1"});
  CHECK(tokenize("") == TokenList{});
  CHECK(tokenize("...") == TokenList{});
  CHECK(tokenize("Alzheimer disease, type 2") == TokenList{"alzheimer", "disease", "type", "2"});
}

TEST_CASE("porter stemmer matches the reference vocabulary") {
  // Expected values generated with an independent implementation of the
  // 1980 algorithm and spot-checked against the published step examples.
  const std::pair<const char*, const char*> cases[] = {
      {"caresses", "caress"}, {"ponies", "poni"}, {"ties", "ti"}, {"caress", "caress"},
      {"cats", "cat"}, {"feed", "feed"}, {"agreed", "agre"}, {"plastered", "plaster"},
      {"bled", "bled"}, {"motoring", "motor"}, {"sing", "sing"}, {"conflated", "conflat"},
      {"troubled", "troubl"}, {"sized", "size"}, {"hopping", "hop"}, {"tanned", "tan"},
      {"falling", "fall"}, {"hissing", "hiss"}, {"fizzed", "fizz"}, {"failing", "fail"},
      {"filing", "file"}, {"happy", "happi"}, {"sky", "sky"}, {"relational", "relat"},
      {"conditional", "condit"}, {"rational", "ration"}, {"valenci", "valenc"},
      {"hesitanci", "hesit"}, {"digitizer", "digit"}, {"conformabli", "conform"},
      {"radicalli", "radic"}, {"differentli", "differ"}, {"vileli", "vile"},
      {"analogousli", "analog"}, {"vietnamization", "vietnam"}, {"predication", "predic"},
      {"operator", "oper"}, {"feudalism", "feudal"}, {"decisiveness", "decis"},
      {"hopefulness", "hope"}, {"callousness", "callous"}, {"formaliti", "formal"},
      {"sensitiviti", "sensit"}, {"sensibiliti", "sensibl"}, {"triplicate", "triplic"},
      {"formative", "form"}, {"formalize", "formal"}, {"electriciti", "electr"},
      {"electrical", "electr"}, {"hopeful", "hope"}, {"goodness", "good"}, {"revival", "reviv"},
      {"allowance", "allow"}, {"inference", "infer"}, {"airliner", "airlin"},
      {"gyroscopic", "gyroscop"}, {"adjustable", "adjust"}, {"defensible", "defens"},
      {"irritant", "irrit"}, {"replacement", "replac"}, {"adjustment", "adjust"},
      {"dependent", "depend"}, {"adoption", "adopt"}, {"homologou", "homolog"},
      {"communism", "commun"}, {"activate", "activ"}, {"angulariti", "angular"},
      {"homologous", "homolog"}, {"effective", "effect"}, {"bowdlerize", "bowdler"},
      {"probate", "probat"}, {"rate", "rate"}, {"cease", "ceas"}, {"controll", "control"},
      {"roll", "roll"}, {"alzheimer", "alzheim"}, {"disease", "diseas"}, {"diseases", "diseas"},
      {"syndrome", "syndrom"}, {"disorders", "disord"}, {"inherited", "inherit"},
      {"inheritance", "inherit"}, {"mutations", "mutat"}, {"mutation", "mutat"},
      {"neurodegeneration", "neurodegener"}, {"phenotypes", "phenotyp"}, {"genes", "gene"},
      {"genetic", "genet"}, {"familial", "famili"}, {"susceptibility", "suscept"},
      {"associated", "associ"}, {"association", "associ"}, {"precursor", "precursor"},
      {"amyloid", "amyloid"}, {"dementia", "dementia"}, {"parkinson", "parkinson"},
      {"diabetes", "diabet"}, {"carcinoma", "carcinoma"}, {"cardiomyopathy", "cardiomyopathi"},
      {"2", "2"}, {"app", "app"}, {"psen1", "psen1"}, {"brca1", "brca1"},
  };
  for (const auto& [word, expected] : cases) {
    CAPTURE(word);
    CHECK(porter_stem(word) == expected);
  }
}

TEST_CASE("stem_tokens drops stoplist members and deduplicates in order") {
  Stoplist stop = Stoplist::from_tokens({"disease"});
  CHECK(stem_tokens("Alzheimer disease 2", stop) == std::vector<std::string>{"alzheim", "2"});
  CHECK(stem_tokens("APP", Stoplist::defaults()) == std::vector<std::string>{"app"});
  CHECK(stem_tokens("disease disease", stop).empty());
  // plural form is suppressed too: the stoplist stores stems
  CHECK(stem_tokens("diseases", stop).empty());
  CHECK(stem_tokens("Alzheimer alzheimer ALZHEIMER", stop) == std::vector<std::string>{"alzheim"});
}

TEST_CASE("bleu identity and disjoint cases") {
  TokenList cand = tokenize("the cat sat on the mat");
  CHECK(bleu(cand, {cand}, 4, Smoothing::AddOne).score == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bleu(cand, {cand}, 4, Smoothing::None).score == doctest::Approx(1.0).epsilon(1e-12));

  TokenList other = tokenize("zebra quagga okapi");
  CHECK(bleu(other, {cand}, 4, Smoothing::None).score == 0.0);
}

TEST_CASE("bleu clipped precision hand count") {
  // cand "the the cat" vs ref "the cat": clipped unigrams = min(2,1) + 1 = 2
  // of 3, brevity penalty 1 since the candidate is longer.
  auto r = bleu(tokenize("the the cat"), {tokenize("the cat")}, 1, Smoothing::None);
  CHECK(r.score == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("bleu brevity penalty uses the closest reference length") {
  // cand 2 tokens fully matched, ref 3 tokens: BP = exp(1 - 3/2)
  auto r = bleu(tokenize("the cat"), {tokenize("the cat sat")}, 1, Smoothing::None);
  CHECK(r.score == doctest::Approx(std::exp(1.0 - 3.0 / 2.0)).epsilon(1e-9));
}

TEST_CASE("bleu empty candidate scores zero with warning") {
  auto r = bleu({}, {tokenize("the cat")}, 4, Smoothing::AddOne);
  CHECK(r.score == 0.0);
  CHECK(r.empty_candidate);
}

TEST_CASE("bleu identity holds for arbitrary nonempty candidates with add-one smoothing") {
  std::mt19937_64 rng(7);
  const char* vocab[] = {"gene", "protein", "disease", "app", "brca1", "links", "to", "the"};
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t len = 1 + rng() % 6;
    TokenList x;
    for (std::size_t i = 0; i < len; ++i) x.push_back(vocab[rng() % 8]);
    auto r = bleu(x, {x}, 4, Smoothing::AddOne);
    CAPTURE(trial);
    CHECK(r.score == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("keyword_bleu1 clipped unigram precision") {
  CHECK(keyword_bleu1(tokenize("BRCA1"), tokenize("BRCA1")) == doctest::Approx(1.0));
  CHECK(keyword_bleu1(tokenize("BRCA1 is related to it"), tokenize("BRCA1")) ==
        doctest::Approx(0.2).epsilon(1e-12));
  CHECK(keyword_bleu1(tokenize("nothing relevant here"), tokenize("BRCA1")) == 0.0);
  CHECK(keyword_bleu1({}, tokenize("BRCA1")) == 0.0);
  CHECK_THROWS_AS(keyword_bleu1(tokenize("x"), {}), DataError);
}

TEST_CASE("keyword_bleu1 never increases as non-keyword tokens are appended") {
  std::mt19937_64 rng(11);
  const char* filler[] = {"is", "related", "with", "various", "conditions"};
  for (int trial = 0; trial < 30; ++trial) {
    TokenList keyword = tokenize("app gene");
    TokenList cand = {"app"};
    double prev = keyword_bleu1(cand, keyword);
    for (int step = 0; step < 8; ++step) {
      cand.push_back(filler[rng() % 5]);
      double next = keyword_bleu1(cand, keyword);
      CHECK(next <= prev + 1e-12);
      prev = next;
    }
  }
}

TEST_CASE("entity_match basics") {
  Stoplist stop = Stoplist::defaults();
  CHECK(entity_match("...the APP gene is associated...", {{"APP", {}}}, stop).matched);
  CHECK(entity_match("it mentions only A4 here", {{"APP", {"A4"}}}, stop).matched);
  CHECK_FALSE(entity_match("the PSEN1 gene instead", {{"APP", {}}}, stop).matched);

  // all gold stem sets empty -> indeterminate, scored false
  auto r = entity_match("anything", {{"disease", {}}}, stop);
  CHECK_FALSE(r.matched);
  CHECK(r.indeterminate);

  CHECK_THROWS_AS(entity_match("x", {}, stop), DataError);
}

TEST_CASE("entity_match is invariant under case and punctuation changes") {
  Stoplist stop = Stoplist::defaults();
  std::vector<GoldEntity> gold{{"Alzheimer disease 2", {}}};
  const char* variants[] = {
      "the answer is alzheimer 2",
      "ALZHEIMER-2!",
      "(Alzheimer, 2)",
      "alzheimer...2",
  };
  for (const char* text : variants) {
    CAPTURE(text);
    CHECK(entity_match(text, gold, stop).matched);
  }
  // every stem must appear: "alzheimer" alone misses the "2"
  CHECK_FALSE(entity_match("alzheimer", gold, stop).matched);
}

TEST_CASE("confusion_metrics hand values and conventions") {
  auto m = confusion_metrics({1, 1, 1, 1});
  CHECK(m.precision == doctest::Approx(0.5));
  CHECK(m.recall == doctest::Approx(0.5));
  CHECK(m.accuracy == doctest::Approx(0.5));
  CHECK(m.f1 == doctest::Approx(0.5));

  auto perfect = confusion_metrics({5, 0, 0, 5});
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.f1 == 1.0);

  // 0/0 precision convention
  auto never_pos = confusion_metrics({0, 0, 3, 7});
  CHECK(never_pos.precision == 0.0);
  CHECK(never_pos.recall == 0.0);
  CHECK(never_pos.f1 == 0.0);

  CHECK_THROWS_AS(confusion_metrics({0, 0, 0, 0}), DataError);
}

TEST_CASE("confusion_metrics matches a brute-force recount on random prediction lists") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 1 + rng() % 100;
    ConfusionCounts counts;
    std::size_t correct = 0, predicted_pos = 0, actual_pos = 0, true_pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      bool gold = rng() % 2 == 0;
      bool pred = rng() % 2 == 0;
      if (gold && pred) ++counts.tp;
      if (!gold && pred) ++counts.fp;
      if (gold && !pred) ++counts.fn;
      if (!gold && !pred) ++counts.tn;
      if (gold == pred) ++correct;
      if (pred) ++predicted_pos;
      if (gold) ++actual_pos;
      if (gold && pred) ++true_pos;
    }
    auto m = confusion_metrics(counts);
    double precision = predicted_pos ? double(true_pos) / double(predicted_pos) : 0.0;
    double recall = actual_pos ? double(true_pos) / double(actual_pos) : 0.0;
    double f1 = (precision + recall) > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    CHECK(m.precision == doctest::Approx(precision).epsilon(1e-12));
    CHECK(m.recall == doctest::Approx(recall).epsilon(1e-12));
    CHECK(m.accuracy == doctest::Approx(double(correct) / double(n)).epsilon(1e-12));
    CHECK(m.f1 == doctest::Approx(f1).epsilon(1e-12));
  }
}

TEST_CASE("f1 identity holds whenever precision + recall is positive") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    ConfusionCounts c{rng() % 20, rng() % 20, rng() % 20, rng() % 20};
    if (c.tp + c.fp + c.fn + c.tn == 0) c.tn = 1;
    auto m = confusion_metrics(c);
    if (m.precision + m.recall > 0) {
      CHECK(m.f1 ==
            doctest::Approx(2 * m.precision * m.recall / (m.precision + m.recall)).epsilon(1e-12));
    } else {
      CHECK(m.f1 == 0.0);
    }
  }
}
