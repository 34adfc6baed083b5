#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace gpmap {

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------
// Tokens are lowercased runs of letters/digits; punctuation (including
// hyphens) splits. Bytes >= 0x80 are kept inside tokens so multi-byte UTF-8
// words survive; only ASCII is case-folded.

using TokenList = std::vector<std::string>;

TokenList tokenize(std::string_view text);

// ---------------------------------------------------------------------------
// Stemming
// ---------------------------------------------------------------------------

/// Porter (1980) stemmer. Expects a lowercase token; words shorter than
/// three characters are returned unchanged.
std::string porter_stem(std::string word);

/// Stems to ignore when matching entity names. Entries are stored stemmed,
/// so "diseases" in a generation is suppressed by a stoplist entry "disease".
class Stoplist {
 public:
  Stoplist() = default;
  static Stoplist from_tokens(const std::vector<std::string>& tokens);
  static Stoplist load(const std::filesystem::path& path);  // one token per line
  static const Stoplist& defaults();

  bool contains_stem(const std::string& stem) const { return stems_.count(stem) > 0; }
  std::size_t size() const { return stems_.size(); }

 private:
  std::set<std::string> stems_;
};

/// tokenize -> lowercase -> Porter-stem -> drop stoplist members ->
/// deduplicate preserving order. An empty result is allowed.
std::vector<std::string> stem_tokens(std::string_view name, const Stoplist& stoplist);

// ---------------------------------------------------------------------------
// Scores
// ---------------------------------------------------------------------------

enum class Smoothing { None, AddOne };

struct BleuResult {
  double score = 0.0;
  bool empty_candidate = false;  // warning flag: candidate had no tokens
};

/// Sentence BLEU: geometric mean of clipped n-gram precisions up to max_n
/// times the brevity penalty. With Smoothing::AddOne, orders with zero
/// matches score (matches+1)/(total+1); with Smoothing::None any zero-match
/// order forces a 0 score. The effective reference length is the one
/// closest to the candidate length (ties go to the shorter).
BleuResult bleu(const TokenList& candidate, const std::vector<TokenList>& references, int max_n,
                Smoothing smoothing);

/// Keyword BLEU-1: clipped unigram precision of the candidate against a
/// reference consisting solely of the keyword tokens. No brevity penalty,
/// no higher-order n-grams. Empty candidate scores 0.
double keyword_bleu1(const TokenList& candidate, const TokenList& keyword);

struct GoldEntity {
  std::string name;
  std::vector<std::string> synonyms;
};

struct EntityMatchResult {
  bool matched = false;
  bool indeterminate = false;  // every gold surface form stemmed to nothing
};

/// True iff some gold surface form (name or synonym) has all of its stems
/// present in the generation's stems. Forms whose stem set is empty are
/// skipped; if every form is empty the result is flagged indeterminate and
/// scored false.
EntityMatchResult entity_match(std::string_view generation, const std::vector<GoldEntity>& gold,
                               const Stoplist& stoplist);

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct ConfusionMetrics {
  double precision = 0.0, recall = 0.0, accuracy = 0.0, f1 = 0.0;
};

/// Standard confusion-matrix metrics; 0/0 precision or recall is 0 by
/// convention, and f1 is 0 when precision + recall is 0. Throws DataError
/// on all-zero counts.
ConfusionMetrics confusion_metrics(const ConfusionCounts& counts);

}  // namespace gpmap
