#include <algorithm>
#include <cmath>
#include <set>

#include "revgen/error.hpp"
#include "revgen/metrics.hpp"
#include "revgen/text.hpp"

namespace revgen {

std::string to_string(SimilarityKind k) {
  switch (k) {
    case SimilarityKind::ExactMatchOracle: return "exact_match_oracle";
    case SimilarityKind::HashedBowCosine: return "hashed_bow_cosine";
    case SimilarityKind::EmbeddingCosine: return "embedding_cosine";
    case SimilarityKind::TokenGreedyF1: return "token_greedy_f1";
  }
  return "unknown";
}

SimilarityKind parse_similarity_kind(std::string_view name) {
  for (auto k : {SimilarityKind::ExactMatchOracle, SimilarityKind::HashedBowCosine,
                 SimilarityKind::EmbeddingCosine, SimilarityKind::TokenGreedyF1}) {
    if (to_string(k) == text::to_lower_ascii(name)) return k;
  }
  throw ConfigError("unknown similarity kind " + std::string(name));
}

double ExactMatchSimilarity::operator()(std::string_view a, std::string_view b) const {
  return text::tokenize(a) == text::tokenize(b) ? 1.0 : 0.0;
}

HashedBowCosine::HashedBowCosine(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw InvalidInput("hash dimension must be positive");
}

std::map<std::uint64_t, double> HashedBowCosine::vectorize(std::string_view s) const {
  std::map<std::uint64_t, double> v;
  for (const auto& t : text::tokenize(s)) v[text::fnv1a64(t) % dimension_] += 1.0;
  return v;
}

double HashedBowCosine::operator()(std::string_view a, std::string_view b) const {
  const auto va = vectorize(a), vb = vectorize(b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [k, x] : va) {
    na += x * x;
    if (auto it = vb.find(k); it != vb.end()) dot += x * it->second;
  }
  for (const auto& [k, y] : vb) nb += y * y;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

EmbeddingCosine::EmbeddingCosine(Backend& backend) : backend_(backend) {}

std::string EmbeddingCosine::name() const { return "embedding_cosine:" + backend_.profile().name; }

double EmbeddingCosine::operator()(std::string_view a, std::string_view b) const {
  const std::string sa(a), sb(b);
  std::lock_guard lock(mutex_);
  std::vector<std::string> missing;
  if (!cache_.count(sa)) missing.push_back(sa);
  if (sb != sa && !cache_.count(sb)) missing.push_back(sb);
  if (!missing.empty()) {
    auto vectors = backend_.embed(missing);
    for (std::size_t i = 0; i < missing.size(); ++i) cache_[missing[i]] = std::move(vectors[i]);
  }
  return cosine(cache_.at(sa), cache_.at(sb));
}

TokenGreedyF1::TokenGreedyF1(Backend& backend) : backend_(backend) {}

std::string TokenGreedyF1::name() const { return "token_greedy_f1:" + backend_.profile().name; }

std::vector<const Embedding*> TokenGreedyF1::lookup(const Tokens& tokens) const {
  std::lock_guard lock(mutex_);
  std::set<std::string> missing;
  for (const auto& t : tokens)
    if (!cache_.count(t)) missing.insert(t);
  if (!missing.empty()) {
    std::vector<std::string> batch(missing.begin(), missing.end());
    auto vectors = backend_.embed(batch);
    for (std::size_t i = 0; i < batch.size(); ++i) cache_[batch[i]] = std::move(vectors[i]);
  }
  std::vector<const Embedding*> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(&cache_.at(t));
  return out;
}

double TokenGreedyF1::operator()(std::string_view a, std::string_view b) const {
  const auto ta = text::tokenize(a), tb = text::tokenize(b);
  if (ta.empty() || tb.empty()) return 0.0;
  const auto ea = lookup(ta), eb = lookup(tb);
  std::vector<std::vector<double>> sim(ea.size(), std::vector<double>(eb.size()));
  for (std::size_t i = 0; i < ea.size(); ++i)
    for (std::size_t j = 0; j < eb.size(); ++j) sim[i][j] = cosine(*ea[i], *eb[j]);
  double precision = 0.0, recall = 0.0;
  for (std::size_t i = 0; i < ea.size(); ++i)
    precision += *std::max_element(sim[i].begin(), sim[i].end());
  for (std::size_t j = 0; j < eb.size(); ++j) {
    double best = -1.0;
    for (std::size_t i = 0; i < ea.size(); ++i) best = std::max(best, sim[i][j]);
    recall += best;
  }
  precision /= static_cast<double>(ea.size());
  recall /= static_cast<double>(eb.size());
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

std::unique_ptr<Similarity> make_similarity(SimilarityKind kind, Backend* embedder) {
  switch (kind) {
    case SimilarityKind::ExactMatchOracle: return std::make_unique<ExactMatchSimilarity>();
    case SimilarityKind::HashedBowCosine: return std::make_unique<HashedBowCosine>();
    case SimilarityKind::EmbeddingCosine:
    case SimilarityKind::TokenGreedyF1:
      if (!embedder) throw ConfigError(to_string(kind) + " needs an embedding backend");
      if (kind == SimilarityKind::EmbeddingCosine) return std::make_unique<EmbeddingCosine>(*embedder);
      return std::make_unique<TokenGreedyF1>(*embedder);
  }
  throw ConfigError("unknown similarity kind");
}

double sim_max(std::string_view candidate, std::span<const std::string> references,
               const Similarity& sim) {
  if (references.empty()) throw InvalidInput("at least one reference is required");
  double best = -1.0;
  for (const auto& r : references) best = std::max(best, sim(candidate, r));
  return best;
}

}  // namespace revgen
