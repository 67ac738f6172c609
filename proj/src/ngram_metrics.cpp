#include <algorithm>
#include <cmath>
#include <map>

#include "revgen/error.hpp"
#include "revgen/metrics.hpp"
#include "revgen/text.hpp"

namespace revgen {
namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  return counts;
}

std::size_t clipped_overlap(const NgramCounts& cand, const NgramCounts& ref) {
  std::size_t m = 0;
  for (const auto& [gram, c] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) m += std::min(c, it->second);
  }
  return m;
}

double f1(double overlap, double cand_total, double ref_total) {
  if (overlap == 0.0 || cand_total == 0.0 || ref_total == 0.0) return 0.0;
  const double p = overlap / cand_total, r = overlap / ref_total;
  return 2.0 * p * r / (p + r);
}

void require_refs(std::span<const std::string> references) {
  if (references.empty()) throw InvalidInput("at least one reference is required");
}

}  // namespace

double sentence_bleu(const Tokens& candidate, const Tokens& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto cand = ngrams(candidate, n);
    const auto matches = static_cast<double>(clipped_overlap(cand, ngrams(reference, n)));
    const auto total = static_cast<double>(candidate.size() >= n ? candidate.size() - n + 1 : 0);
    double p;
    if (n == 1) {
      if (matches == 0.0) return 0.0;
      p = matches / total;
    } else {
      p = (matches + 1.0) / (total + 1.0);
    }
    log_sum += std::log(p);
  }
  const auto c = static_cast<double>(candidate.size());
  const auto r = static_cast<double>(reference.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return std::clamp(bp * std::exp(log_sum / 4.0), 0.0, 1.0);
}

std::string to_string(RougeVariant v) {
  switch (v) {
    case RougeVariant::R1: return "rouge1";
    case RougeVariant::R2: return "rouge2";
    case RougeVariant::RL: return "rougeL";
  }
  return "rouge";
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge(const Tokens& candidate, const Tokens& reference, RougeVariant variant) {
  if (candidate.empty() || reference.empty()) return 0.0;
  if (variant == RougeVariant::RL) {
    return f1(static_cast<double>(lcs_length(candidate, reference)),
              static_cast<double>(candidate.size()), static_cast<double>(reference.size()));
  }
  const std::size_t n = variant == RougeVariant::R1 ? 1 : 2;
  // Single-token texts have no bigrams; identity still scores 1.
  if (candidate.size() < n && reference.size() < n) return candidate == reference ? 1.0 : 0.0;
  const auto cand = ngrams(candidate, n);
  const auto ref = ngrams(reference, n);
  const auto total = [n](const Tokens& t) {
    return static_cast<double>(t.size() >= n ? t.size() - n + 1 : 0);
  };
  return f1(static_cast<double>(clipped_overlap(cand, ref)), total(candidate), total(reference));
}

double bleu_max(std::string_view candidate, std::span<const std::string> references) {
  require_refs(references);
  const auto cand = text::tokenize(candidate);
  double best = 0.0;
  for (const auto& r : references) best = std::max(best, sentence_bleu(cand, text::tokenize(r)));
  return best;
}

double rouge_max(std::string_view candidate, std::span<const std::string> references,
                 RougeVariant variant) {
  require_refs(references);
  const auto cand = text::tokenize(candidate);
  double best = 0.0;
  for (const auto& r : references) best = std::max(best, rouge(cand, text::tokenize(r), variant));
  return best;
}

}  // namespace revgen
