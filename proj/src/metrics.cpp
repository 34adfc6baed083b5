#include "gpmap/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "gpmap/util.hpp"

namespace gpmap {

TokenList tokenize(std::string_view text) {
  TokenList out;
  std::string cur;
  for (unsigned char c : text) {
    if (is_token_char(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// ---------------------------------------------------------------------------
// Porter stemmer (the 1980 algorithm)
// ---------------------------------------------------------------------------

namespace porter {

bool is_consonant(const std::string& w, std::size_t i) {
  char c = w[i];
  if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return false;
  if (c == 'y') return i == 0 ? true : !is_consonant(w, i - 1);
  return true;
}

// m in the [C](VC)^m[V] decomposition of the stem.
int measure(const std::string& w, std::size_t len) {
  std::size_t i = 0;
  int m = 0;
  while (i < len && is_consonant(w, i)) ++i;
  while (i < len) {
    while (i < len && !is_consonant(w, i)) ++i;
    if (i >= len) break;
    ++m;
    while (i < len && is_consonant(w, i)) ++i;
  }
  return m;
}

bool has_vowel(const std::string& w, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) {
    if (!is_consonant(w, i)) return true;
  }
  return false;
}

bool double_consonant(const std::string& w) {
  std::size_t n = w.size();
  return n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1);
}

// *o: stem ends consonant-vowel-consonant and the final consonant is not
// w, x or y.
bool cvc(const std::string& w) {
  std::size_t n = w.size();
  if (n < 3) return false;
  if (!is_consonant(w, n - 3) || is_consonant(w, n - 2) || !is_consonant(w, n - 1)) return false;
  char c = w[n - 1];
  return c != 'w' && c != 'x' && c != 'y';
}

bool ends_with(const std::string& w, std::string_view suffix) {
  return w.size() >= suffix.size() && w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct Rule {
  std::string_view suffix;
  std::string_view replacement;
};

// Applies the longest matching suffix rule; if its measure condition fails
// no shorter rule in the same step is tried.
void apply_step_rules(std::string& w, const std::vector<Rule>& rules, int min_measure) {
  const Rule* best = nullptr;
  for (const auto& rule : rules) {
    if (ends_with(w, rule.suffix) && (!best || rule.suffix.size() > best->suffix.size())) {
      best = &rule;
    }
  }
  if (!best) return;
  std::size_t stem_len = w.size() - best->suffix.size();
  if (measure(w, stem_len) > min_measure) {
    w.resize(stem_len);
    w.append(best->replacement);
  }
}

void step1a(std::string& w) {
  if (ends_with(w, "sses")) {
    w.resize(w.size() - 2);
  } else if (ends_with(w, "ies")) {
    w.resize(w.size() - 2);
  } else if (ends_with(w, "ss")) {
    // keep
  } else if (ends_with(w, "s")) {
    w.pop_back();
  }
}

void step1b(std::string& w) {
  if (ends_with(w, "eed")) {
    if (measure(w, w.size() - 3) > 0) w.pop_back();
    return;
  }
  bool stripped = false;
  if (ends_with(w, "ed") && has_vowel(w, w.size() - 2)) {
    w.resize(w.size() - 2);
    stripped = true;
  } else if (ends_with(w, "ing") && has_vowel(w, w.size() - 3)) {
    w.resize(w.size() - 3);
    stripped = true;
  }
  if (!stripped) return;
  if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
    w.push_back('e');
  } else if (double_consonant(w)) {
    char c = w.back();
    if (c != 'l' && c != 's' && c != 'z') w.pop_back();
  } else if (measure(w, w.size()) == 1 && cvc(w)) {
    w.push_back('e');
  }
}

void step1c(std::string& w) {
  if (ends_with(w, "y") && has_vowel(w, w.size() - 1)) w.back() = 'i';
}

void step2(std::string& w) {
  static const std::vector<Rule> rules{
      {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},   {"anci", "ance"},
      {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},     {"entli", "ent"},
      {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
      {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
      {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"}};
  apply_step_rules(w, rules, 0);
}

void step3(std::string& w) {
  static const std::vector<Rule> rules{{"icate", "ic"}, {"ative", ""}, {"alize", "al"},
                                       {"iciti", "ic"}, {"ical", "ic"}, {"ful", ""},
                                       {"ness", ""}};
  apply_step_rules(w, rules, 0);
}

void step4(std::string& w) {
  static const std::vector<Rule> rules{{"ement", ""}, {"ance", ""}, {"ence", ""}, {"able", ""},
                                       {"ible", ""},  {"ment", ""}, {"ant", ""},  {"ent", ""},
                                       {"ism", ""},   {"ate", ""},  {"iti", ""},  {"ous", ""},
                                       {"ive", ""},   {"ize", ""},  {"ion", ""},  {"al", ""},
                                       {"er", ""},    {"ic", ""},   {"ou", ""}};
  const Rule* best = nullptr;
  for (const auto& rule : rules) {
    if (ends_with(w, rule.suffix) && (!best || rule.suffix.size() > best->suffix.size())) {
      best = &rule;
    }
  }
  if (!best) return;
  std::size_t stem_len = w.size() - best->suffix.size();
  if (best->suffix == "ion") {
    if (stem_len == 0 || (w[stem_len - 1] != 's' && w[stem_len - 1] != 't')) return;
  }
  if (measure(w, stem_len) > 1) w.resize(stem_len);
}

void step5a(std::string& w) {
  if (!ends_with(w, "e")) return;
  int a = measure(w, w.size() - 1);
  if (a > 1) {
    w.pop_back();
  } else if (a == 1) {
    std::string stem = w.substr(0, w.size() - 1);
    if (!cvc(stem)) w.pop_back();
  }
}

void step5b(std::string& w) {
  if (w.back() == 'l' && double_consonant(w) && measure(w, w.size()) > 1) w.pop_back();
}

}  // namespace porter

std::string porter_stem(std::string word) {
  if (word.size() < 3) return word;
  porter::step1a(word);
  porter::step1b(word);
  porter::step1c(word);
  porter::step2(word);
  porter::step3(word);
  porter::step4(word);
  porter::step5a(word);
  porter::step5b(word);
  return word;
}

// ---------------------------------------------------------------------------
// Stoplist and stem tokens
// ---------------------------------------------------------------------------

Stoplist Stoplist::from_tokens(const std::vector<std::string>& tokens) {
  Stoplist s;
  for (const auto& t : tokens) {
    for (auto& tok : tokenize(t)) s.stems_.insert(porter_stem(tok));
  }
  return s;
}

Stoplist Stoplist::load(const std::filesystem::path& path) {
  std::vector<std::string> tokens;
  for_each_line(path, [&](std::size_t, const std::string& line) {
    std::string t = trim(line);
    if (!t.empty() && t[0] != '#') tokens.push_back(t);
  });
  return from_tokens(tokens);
}

const Stoplist& Stoplist::defaults() {
  static const Stoplist s = from_tokens({"disease", "syndrome", "disorder", "type", "familial",
                                         "susceptibility", "of", "the", "and", "to"});
  return s;
}

std::vector<std::string> stem_tokens(std::string_view name, const Stoplist& stoplist) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (auto& tok : tokenize(name)) {
    std::string stem = porter_stem(std::move(tok));
    if (stoplist.contains_stem(stem)) continue;
    if (seen.insert(stem).second) out.push_back(std::move(stem));
  }
  return out;
}

// ---------------------------------------------------------------------------
// BLEU family
// ---------------------------------------------------------------------------

namespace {

// n-gram keyed by tokens joined with an unlikely separator byte
std::unordered_map<std::string, std::size_t> ngram_counts(const TokenList& tokens, std::size_t n) {
  std::unordered_map<std::string, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < n; ++k) {
      if (k) key.push_back('\x1f');
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

BleuResult bleu(const TokenList& candidate, const std::vector<TokenList>& references, int max_n,
                Smoothing smoothing) {
  if (max_n < 1) throw DataError("bleu: max_n must be >= 1");
  if (references.empty()) throw DataError("bleu: references must be nonempty");
  bool any_ref = std::any_of(references.begin(), references.end(),
                             [](const TokenList& r) { return !r.empty(); });
  if (!any_ref) throw DataError("bleu: all references are empty");
  if (candidate.empty()) return {0.0, true};

  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    auto cand = ngram_counts(candidate, static_cast<std::size_t>(n));
    std::size_t total = candidate.size() >= static_cast<std::size_t>(n)
                            ? candidate.size() - static_cast<std::size_t>(n) + 1
                            : 0;
    std::unordered_map<std::string, std::size_t> max_ref;
    for (const auto& ref : references) {
      for (auto& [key, count] : ngram_counts(ref, static_cast<std::size_t>(n))) {
        auto& slot = max_ref[key];
        slot = std::max(slot, count);
      }
    }
    std::size_t clipped = 0;
    for (const auto& [key, count] : cand) {
      auto it = max_ref.find(key);
      if (it != max_ref.end()) clipped += std::min(count, it->second);
    }
    double precision;
    if (clipped > 0) {
      precision = static_cast<double>(clipped) / static_cast<double>(total);
    } else if (smoothing == Smoothing::AddOne) {
      precision = 1.0 / static_cast<double>(total + 1);
    } else {
      return {0.0, false};
    }
    log_sum += std::log(precision);
  }

  // effective reference length: closest to candidate length, ties shorter
  std::size_t c = candidate.size();
  std::size_t r = references.front().size();
  for (const auto& ref : references) {
    std::size_t len = ref.size();
    auto dist = [&](std::size_t l) {
      return l > c ? l - c : c - l;
    };
    if (dist(len) < dist(r) || (dist(len) == dist(r) && len < r)) r = len;
  }
  double bp = c >= r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  return {bp * std::exp(log_sum / max_n), false};
}

double keyword_bleu1(const TokenList& candidate, const TokenList& keyword) {
  if (keyword.empty()) throw DataError("keyword_bleu1: keyword must be nonempty");
  if (candidate.empty()) return 0.0;
  auto cand = ngram_counts(candidate, 1);
  auto ref = ngram_counts(keyword, 1);
  std::size_t clipped = 0;
  for (const auto& [key, count] : cand) {
    auto it = ref.find(key);
    if (it != ref.end()) clipped += std::min(count, it->second);
  }
  return static_cast<double>(clipped) / static_cast<double>(candidate.size());
}

EntityMatchResult entity_match(std::string_view generation, const std::vector<GoldEntity>& gold,
                               const Stoplist& stoplist) {
  if (gold.empty()) throw DataError("entity_match: gold entities must be nonempty");
  auto gen_stems_list = stem_tokens(generation, stoplist);
  std::unordered_set<std::string> gen_stems(gen_stems_list.begin(), gen_stems_list.end());

  bool any_usable_form = false;
  for (const auto& entity : gold) {
    std::vector<std::string> forms{entity.name};
    forms.insert(forms.end(), entity.synonyms.begin(), entity.synonyms.end());
    for (const auto& form : forms) {
      auto stems = stem_tokens(form, stoplist);
      if (stems.empty()) continue;
      any_usable_form = true;
      bool all_present = std::all_of(stems.begin(), stems.end(),
                                     [&](const std::string& s) { return gen_stems.count(s) > 0; });
      if (all_present) return {true, false};
    }
  }
  if (!any_usable_form) return {false, true};
  return {false, false};
}

ConfusionMetrics confusion_metrics(const ConfusionCounts& c) {
  std::uint64_t total = c.tp + c.fp + c.fn + c.tn;
  if (total == 0) throw DataError("confusion_metrics: all counts are zero");
  ConfusionMetrics m;
  m.precision = (c.tp + c.fp) == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  m.recall = (c.tp + c.fn) == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
  m.f1 = (m.precision + m.recall) == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

}  // namespace gpmap
