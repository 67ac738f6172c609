#pragma once

// Independent reference implementations used only by tests. Nothing here
// calls into the metric code under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

using Words = std::vector<std::string>;

inline Words words(const std::string& s) {
  std::istringstream in(s);
  Words out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

// Occurrences of the n-gram starting at `at` in `seq`, by direct scanning.
inline std::size_t occurrences(const Words& seq, const Words& gram) {
  std::size_t count = 0;
  if (gram.size() > seq.size()) return 0;
  for (std::size_t i = 0; i + gram.size() <= seq.size(); ++i) {
    bool same = true;
    for (std::size_t k = 0; k < gram.size() && same; ++k) same = seq[i + k] == gram[k];
    count += same ? 1 : 0;
  }
  return count;
}

// Clipped matches: every distinct candidate n-gram contributes
// min(count in candidate, count in reference).
inline std::size_t clipped(const Words& cand, const Words& ref, std::size_t n) {
  std::vector<Words> distinct;
  for (std::size_t i = 0; i + n <= cand.size(); ++i) {
    Words g(cand.begin() + i, cand.begin() + i + n);
    if (std::find(distinct.begin(), distinct.end(), g) == distinct.end()) distinct.push_back(g);
  }
  std::size_t m = 0;
  for (const auto& g : distinct) m += std::min(occurrences(cand, g), occurrences(ref, g));
  return m;
}

inline std::size_t total(const Words& seq, std::size_t n) {
  return seq.size() >= n ? seq.size() - n + 1 : 0;
}

inline double bleu(const Words& cand, const Words& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  double p[4];
  for (std::size_t n = 1; n <= 4; ++n) {
    const double m = static_cast<double>(clipped(cand, ref, n));
    const double t = static_cast<double>(total(cand, n));
    p[n - 1] = n == 1 ? m / t : (m + 1.0) / (t + 1.0);
  }
  if (p[0] == 0.0) return 0.0;
  const double geo = std::pow(p[0] * p[1] * p[2] * p[3], 0.25);
  const double c = static_cast<double>(cand.size()), r = static_cast<double>(ref.size());
  return (c > r ? 1.0 : std::exp(1.0 - r / c)) * geo;
}

inline double f1(double overlap, double a, double b) {
  if (overlap == 0.0) return 0.0;
  return 2.0 * overlap / (a + b);  // equals 2PR/(P+R) with P = o/a, R = o/b
}

inline double rouge_n(const Words& cand, const Words& ref, std::size_t n) {
  if (cand.empty() || ref.empty()) return 0.0;
  if (total(cand, n) == 0 && total(ref, n) == 0) return cand == ref ? 1.0 : 0.0;
  return f1(static_cast<double>(clipped(cand, ref, n)), static_cast<double>(total(cand, n)),
            static_cast<double>(total(ref, n)));
}

inline bool is_subsequence(const Words& sub, const Words& seq) {
  std::size_t i = 0;
  for (const auto& w : seq)
    if (i < sub.size() && sub[i] == w) ++i;
  return i == sub.size();
}

// Longest common subsequence by enumerating every subsequence of the shorter
// sequence. Exponential; only for short inputs.
inline std::size_t lcs(const Words& a, const Words& b) {
  const Words& s = a.size() <= b.size() ? a : b;
  const Words& t = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << s.size()); ++mask) {
    Words sub;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (mask & (1u << i)) sub.push_back(s[i]);
    if (sub.size() > best && is_subsequence(sub, t)) best = sub.size();
  }
  return best;
}

inline double rouge_l(const Words& cand, const Words& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  return f1(static_cast<double>(lcs(cand, ref)), static_cast<double>(cand.size()),
            static_cast<double>(ref.size()));
}

// Cosine of plain word-count vectors (no hashing).
inline double count_cosine(const Words& a, const Words& b) {
  std::map<std::string, double> va, vb;
  for (const auto& w : a) va[w] += 1.0;
  for (const auto& w : b) vb[w] += 1.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [w, x] : va) {
    na += x * x;
    if (vb.count(w)) dot += x * vb[w];
  }
  for (const auto& [w, y] : vb) nb += y * y;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

using Sim = std::function<double(const std::string&, const std::string&)>;

inline double best_of(const std::string& cand, const std::vector<std::string>& refs, const Sim& sim) {
  double best = -1e300;
  for (const auto& r : refs) best = std::max(best, sim(cand, r));
  return best;
}

// Specificity with the mismatched term averaged over every j != i.
inline double specificity_exhaustive(const std::vector<std::string>& generated,
                                     const std::vector<std::vector<std::string>>& refs,
                                     const Sim& sim) {
  const std::size_t m = generated.size();
  double own = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    own += best_of(generated[i], refs[i], sim);
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      if (j != i) row += best_of(generated[i], refs[j], sim);
    cross += row / static_cast<double>(m - 1);
  }
  return (own - cross) / static_cast<double>(m);
}

}  // namespace oracle
