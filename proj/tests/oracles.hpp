#pragma once

// Independent oracle implementations for the acceptance and unit suites.
// These deliberately use different code structure from the library: the
// stemmer is an index-based transcription of the classic C reference, BLEU
// recounts n-grams with ordered maps, the eigensolver is a cyclic Jacobi
// iteration, and silhouette works off a full distance matrix. None of them
// call into gpmap_core internals beyond basic types.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracles {

// ---------------------------------------------------------------------------
// Porter stemmer, index-based transcription
// ---------------------------------------------------------------------------

class PorterOracle {
 public:
  std::string stem(const std::string& word) {
    if (word.size() < 3) return word;
    b_ = word;
    k_ = static_cast<int>(word.size()) - 1;
    j_ = 0;
    step1ab();
    step1c();
    step2();
    step3();
    step4();
    step5();
    return b_.substr(0, static_cast<std::size_t>(k_) + 1);
  }

 private:
  std::string b_;
  int k_ = 0, j_ = 0;

  bool cons(int i) const {
    switch (b_[static_cast<std::size_t>(i)]) {
      case 'a': case 'e': case 'i': case 'o': case 'u': return false;
      case 'y': return i == 0 ? true : !cons(i - 1);
      default: return true;
    }
  }

  int m() const {
    int n = 0, i = 0;
    while (true) {
      if (i > j_) return n;
      if (!cons(i)) break;
      ++i;
    }
    ++i;
    while (true) {
      while (true) {
        if (i > j_) return n;
        if (cons(i)) break;
        ++i;
      }
      ++i;
      ++n;
      while (true) {
        if (i > j_) return n;
        if (!cons(i)) break;
        ++i;
      }
      ++i;
    }
  }

  bool vowelinstem() const {
    for (int i = 0; i <= j_; ++i) {
      if (!cons(i)) return true;
    }
    return false;
  }

  bool doublec(int j) const {
    if (j < 1) return false;
    if (b_[static_cast<std::size_t>(j)] != b_[static_cast<std::size_t>(j - 1)]) return false;
    return cons(j);
  }

  bool cvc(int i) const {
    if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
    char ch = b_[static_cast<std::size_t>(i)];
    return ch != 'w' && ch != 'x' && ch != 'y';
  }

  bool ends(const char* s) {
    int length = static_cast<int>(std::strlen(s));
    if (length > k_ + 1) return false;
    if (b_.compare(static_cast<std::size_t>(k_ - length + 1), static_cast<std::size_t>(length), s) != 0) {
      return false;
    }
    j_ = k_ - length;
    return true;
  }

  void setto(const char* s) {
    int length = static_cast<int>(std::strlen(s));
    b_.replace(static_cast<std::size_t>(j_ + 1), b_.size() - static_cast<std::size_t>(j_ + 1), s);
    k_ = j_ + length;
  }

  void r(const char* s) {
    if (m() > 0) setto(s);
  }

  void step1ab() {
    if (b_[static_cast<std::size_t>(k_)] == 's') {
      if (ends("sses")) {
        k_ -= 2;
      } else if (ends("ies")) {
        setto("i");
      } else if (b_[static_cast<std::size_t>(k_ - 1)] != 's') {
        --k_;
      }
    }
    if (ends("eed")) {
      if (m() > 0) --k_;
    } else if ((ends("ed") || ends("ing")) && vowelinstem()) {
      k_ = j_;
      if (ends("at")) {
        setto("ate");
      } else if (ends("bl")) {
        setto("ble");
      } else if (ends("iz")) {
        setto("ize");
      } else if (doublec(k_)) {
        --k_;
        char ch = b_[static_cast<std::size_t>(k_)];
        if (ch == 'l' || ch == 's' || ch == 'z') ++k_;
      } else if (m() == 1 && cvc(k_)) {
        setto("e");
      }
    }
  }

  void step1c() {
    if (ends("y") && vowelinstem()) b_[static_cast<std::size_t>(k_)] = 'i';
  }

  void step2() {
    if (k_ < 1) return;
    switch (b_[static_cast<std::size_t>(k_ - 1)]) {
      case 'a':
        if (ends("ational")) { r("ate"); break; }
        if (ends("tional")) { r("tion"); break; }
        break;
      case 'c':
        if (ends("enci")) { r("ence"); break; }
        if (ends("anci")) { r("ance"); break; }
        break;
      case 'e':
        if (ends("izer")) { r("ize"); break; }
        break;
      case 'l':
        if (ends("abli")) { r("able"); break; }
        if (ends("alli")) { r("al"); break; }
        if (ends("entli")) { r("ent"); break; }
        if (ends("eli")) { r("e"); break; }
        if (ends("ousli")) { r("ous"); break; }
        break;
      case 'o':
        if (ends("ization")) { r("ize"); break; }
        if (ends("ation")) { r("ate"); break; }
        if (ends("ator")) { r("ate"); break; }
        break;
      case 's':
        if (ends("alism")) { r("al"); break; }
        if (ends("iveness")) { r("ive"); break; }
        if (ends("fulness")) { r("ful"); break; }
        if (ends("ousness")) { r("ous"); break; }
        break;
      case 't':
        if (ends("aliti")) { r("al"); break; }
        if (ends("iviti")) { r("ive"); break; }
        if (ends("biliti")) { r("ble"); break; }
        break;
      default:
        break;
    }
  }

  void step3() {
    switch (b_[static_cast<std::size_t>(k_)]) {
      case 'e':
        if (ends("icate")) { r("ic"); break; }
        if (ends("ative")) { r(""); break; }
        if (ends("alize")) { r("al"); break; }
        break;
      case 'i':
        if (ends("iciti")) { r("ic"); break; }
        break;
      case 'l':
        if (ends("ical")) { r("ic"); break; }
        if (ends("ful")) { r(""); break; }
        break;
      case 's':
        if (ends("ness")) { r(""); break; }
        break;
      default:
        break;
    }
  }

  void step4() {
    if (k_ < 1) return;
    switch (b_[static_cast<std::size_t>(k_ - 1)]) {
      case 'a': if (ends("al")) break; return;
      case 'c': if (ends("ance")) break; if (ends("ence")) break; return;
      case 'e': if (ends("er")) break; return;
      case 'i': if (ends("ic")) break; return;
      case 'l': if (ends("able")) break; if (ends("ible")) break; return;
      case 'n':
        if (ends("ant")) break;
        if (ends("ement")) break;
        if (ends("ment")) break;
        if (ends("ent")) break;
        return;
      case 'o':
        if (ends("ion") && j_ >= 0 &&
            (b_[static_cast<std::size_t>(j_)] == 's' || b_[static_cast<std::size_t>(j_)] == 't')) {
          break;
        }
        if (ends("ou")) break;
        return;
      case 's': if (ends("ism")) break; return;
      case 't': if (ends("ate")) break; if (ends("iti")) break; return;
      case 'u': if (ends("ous")) break; return;
      case 'v': if (ends("ive")) break; return;
      case 'z': if (ends("ize")) break; return;
      default: return;
    }
    if (m() > 1) k_ = j_;
  }

  void step5() {
    j_ = k_;
    if (b_[static_cast<std::size_t>(k_)] == 'e') {
      int a = m();
      if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
    }
    if (b_[static_cast<std::size_t>(k_)] == 'l' && doublec(k_) && m() > 1) --k_;
  }
};

inline std::string porter(const std::string& word) { return PorterOracle{}.stem(word); }

// ---------------------------------------------------------------------------
// Tokenization and stem tokens (ASCII-only recount)
// ---------------------------------------------------------------------------

inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
    if (keep) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::vector<std::string> stem_tokens(const std::string& name,
                                            const std::set<std::string>& stop_stems) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& tok : tokenize(name)) {
    std::string s = porter(tok);
    if (stop_stems.count(s)) continue;
    if (seen.insert(s).second) out.push_back(s);
  }
  return out;
}

inline bool entity_match(const std::string& generation,
                         const std::vector<std::pair<std::string, std::vector<std::string>>>& gold,
                         const std::set<std::string>& stop_stems) {
  auto gen = stem_tokens(generation, stop_stems);
  std::set<std::string> gen_set(gen.begin(), gen.end());
  for (const auto& [name, synonyms] : gold) {
    std::vector<std::string> forms{name};
    forms.insert(forms.end(), synonyms.begin(), synonyms.end());
    for (const auto& form : forms) {
      auto stems = stem_tokens(form, stop_stems);
      if (stems.empty()) continue;
      bool all = true;
      for (const auto& s : stems) {
        if (!gen_set.count(s)) all = false;
      }
      if (all) return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// BLEU recount from the definition
// ---------------------------------------------------------------------------

inline double bleu(const std::vector<std::string>& cand,
                   const std::vector<std::vector<std::string>>& refs, int max_n, bool add_one) {
  if (cand.empty()) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    std::map<std::vector<std::string>, long> cand_counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= cand.size(); ++i) {
      cand_counts[std::vector<std::string>(cand.begin() + static_cast<long>(i),
                                           cand.begin() + static_cast<long>(i) + n)]++;
    }
    long total = 0;
    for (const auto& [gram, count] : cand_counts) total += count;
    long clipped = 0;
    for (const auto& [gram, count] : cand_counts) {
      long best = 0;
      for (const auto& ref : refs) {
        long c = 0;
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= ref.size(); ++i) {
          if (std::equal(gram.begin(), gram.end(), ref.begin() + static_cast<long>(i))) ++c;
        }
        best = std::max(best, c);
      }
      clipped += std::min(count, best);
    }
    double p;
    if (clipped > 0) {
      p = double(clipped) / double(total);
    } else if (add_one) {
      p = 1.0 / double(total + 1);
    } else {
      return 0.0;
    }
    log_sum += std::log(p);
  }
  std::size_t c = cand.size();
  std::size_t r = refs.front().size();
  for (const auto& ref : refs) {
    auto dist = [&](std::size_t l) { return l > c ? l - c : c - l; };
    if (dist(ref.size()) < dist(r) || (dist(ref.size()) == dist(r) && ref.size() < r)) r = ref.size();
  }
  double bp = c >= r ? 1.0 : std::exp(1.0 - double(r) / double(c));
  return bp * std::exp(log_sum / max_n);
}

inline double keyword_bleu1(const std::vector<std::string>& cand,
                            const std::vector<std::string>& keyword) {
  if (cand.empty()) return 0.0;
  std::map<std::string, long> kw;
  for (const auto& t : keyword) ++kw[t];
  std::map<std::string, long> cc;
  for (const auto& t : cand) ++cc[t];
  long clipped = 0;
  for (const auto& [t, count] : cc) {
    auto it = kw.find(t);
    if (it != kw.end()) clipped += std::min(count, it->second);
  }
  return double(clipped) / double(cand.size());
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition via cyclic Jacobi rotations
// ---------------------------------------------------------------------------

struct JacobiResult {
  std::vector<double> eigenvalues;               // descending
  std::vector<std::vector<double>> eigenvectors; // column i matches eigenvalue i
};

inline JacobiResult jacobi_eigen(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    }
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          double aip = a[i][p], aiq = a[i][q];
          a[i][p] = c * aip - s * aiq;
          a[i][q] = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          double api = a[p][i], aqi = a[q][i];
          a[p][i] = c * api - s * aqi;
          a[q][i] = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          double vip = v[i][p], viq = v[i][q];
          v[i][p] = c * vip - s * viq;
          v[i][q] = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  JacobiResult result;
  result.eigenvalues.resize(n);
  result.eigenvectors.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    result.eigenvalues[i] = a[order[i]][order[i]];
    for (std::size_t r = 0; r < n; ++r) result.eigenvectors[r][i] = v[r][order[i]];
  }
  return result;
}

// ---------------------------------------------------------------------------
// Silhouette from the full distance matrix
// ---------------------------------------------------------------------------

inline double silhouette(const std::vector<std::vector<double>>& vectors,
                         const std::vector<std::string>& labels) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].empty()) keep.push_back(i);
  }
  const std::size_t n = keep.size();
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      double sum = 0.0;
      for (std::size_t k = 0; k < vectors[keep[a]].size(); ++k) {
        double d = vectors[keep[a]][k] - vectors[keep[b]][k];
        sum += d * d;
      }
      dist[a][b] = dist[b][a] = std::sqrt(sum);
    }
  }
  std::map<std::string, std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters[labels[keep[i]]].push_back(i);

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& own = clusters[labels[keep[i]]];
    if (own.size() < 2) continue;  // singleton contributes 0
    double a_val = 0.0;
    for (auto jdx : own) {
      if (jdx != i) a_val += dist[i][jdx];
    }
    a_val /= double(own.size() - 1);
    double b_val = std::numeric_limits<double>::infinity();
    for (const auto& [label, members] : clusters) {
      if (label == labels[keep[i]]) continue;
      double mean = 0.0;
      for (auto jdx : members) mean += dist[i][jdx];
      mean /= double(members.size());
      b_val = std::min(b_val, mean);
    }
    double denom = std::max(a_val, b_val);
    total += denom > 0 ? (b_val - a_val) / denom : 0.0;
  }
  return total / double(n);
}

}  // namespace oracles
