#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "revgen/backend.hpp"
#include "revgen/corpus.hpp"

namespace revgen {

using Tokens = std::vector<std::string>;

// ---------------------------------------------------------------------------
// N-gram metrics. All take canonical tokens and return values in [0, 1].

/// Sentence-level BLEU-4 with uniform weights and brevity penalty. Unigram
/// precision is unsmoothed; orders 2..4 use add-one smoothing. An empty
/// candidate scores 0.
double sentence_bleu(const Tokens& candidate, const Tokens& reference);

enum class RougeVariant { R1, R2, RL };
std::string to_string(RougeVariant v);

/// F1 of clipped unigram/bigram overlap, or of the LCS for RL.
double rouge(const Tokens& candidate, const Tokens& reference, RougeVariant variant);

std::size_t lcs_length(const Tokens& a, const Tokens& b);

/// Maxima over references, tokenizing with the canonical tokenizer.
/// InvalidInput when `references` is empty.
double bleu_max(std::string_view candidate, std::span<const std::string> references);
double rouge_max(std::string_view candidate, std::span<const std::string> references,
                 RougeVariant variant);

// ---------------------------------------------------------------------------
// Similarity backends.

enum class SimilarityKind { ExactMatchOracle, HashedBowCosine, EmbeddingCosine, TokenGreedyF1 };
std::string to_string(SimilarityKind k);
SimilarityKind parse_similarity_kind(std::string_view name);

/// Symmetric document similarity.
class Similarity {
 public:
  virtual ~Similarity() = default;
  virtual double operator()(std::string_view a, std::string_view b) const = 0;
  virtual std::string name() const = 0;
};

/// 1 when the canonical token sequences are equal, else 0.
class ExactMatchSimilarity final : public Similarity {
 public:
  double operator()(std::string_view a, std::string_view b) const override;
  std::string name() const override { return "exact_match_oracle"; }
};

/// Cosine of feature-hashed token count vectors (sparse, FNV-1a buckets).
class HashedBowCosine final : public Similarity {
 public:
  explicit HashedBowCosine(std::size_t dimension = std::size_t{1} << 20);
  double operator()(std::string_view a, std::string_view b) const override;
  std::string name() const override { return "hashed_bow_cosine"; }

  std::map<std::uint64_t, double> vectorize(std::string_view text) const;

 private:
  std::size_t dimension_;
};

/// Cosine of whole-document embeddings from a backend; embeddings are cached.
class EmbeddingCosine final : public Similarity {
 public:
  explicit EmbeddingCosine(Backend& backend);
  double operator()(std::string_view a, std::string_view b) const override;
  std::string name() const override;

 private:
  Backend& backend_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, Embedding> cache_;
};

/// Greedy token matching F1 over token embeddings: recall averages, over
/// tokens of b, the best cosine against tokens of a; precision the reverse.
class TokenGreedyF1 final : public Similarity {
 public:
  explicit TokenGreedyF1(Backend& backend);
  double operator()(std::string_view a, std::string_view b) const override;
  std::string name() const override;

 private:
  std::vector<const Embedding*> lookup(const Tokens& tokens) const;

  Backend& backend_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, Embedding> cache_;
};

/// `embedder` is required for the embedding kinds.
std::unique_ptr<Similarity> make_similarity(SimilarityKind kind, Backend* embedder = nullptr);

double sim_max(std::string_view candidate, std::span<const std::string> references,
               const Similarity& sim);

// ---------------------------------------------------------------------------
// Specificity, coverability, control.

/// Outputs keyed by (paper, prompt review_index).
using PromptedOutputs = std::map<ReviewKey, std::string>;

enum class SpecificityMode {
  Sampled,          // `shuffles` random derangements
  AllDerangements,  // every derangement once (small m only)
  Exhaustive,       // direct double sum over j != i
};

struct SpecificityConfig {
  int shuffles = 10;
  std::uint64_t rng_seed = 0;
  SpecificityMode mode = SpecificityMode::Sampled;
};

struct SpecificityResult {
  double value = 0.0;      // own - mean(cross)
  double variance = 0.0;   // population variance of per-shuffle values
  int shuffles = 0;
  double own = 0.0;        // mean_i max_n sim(y^_i, y_i^n)
  double mismatched = 0.0; // mean over shuffles of mean_i max_n sim(y^_i, y_j^n)
};

/// Drop in best-reference similarity when each generated review is paired
/// with another paper's references. Each shuffle pairs every paper i with a
/// distinct j != i via a uniform random derangement. Papers without generated
/// output or references are ignored; TooFewPapers when fewer than two remain.
SpecificityResult specificity(const std::map<std::string, std::string>& generated,
                              const ReferenceSets& references, const Similarity& sim,
                              const SpecificityConfig& config = {});

/// All derangements of {0..m-1} in lexicographic order. m <= 9.
std::vector<std::vector<std::size_t>> all_derangements(std::size_t m);
/// Uniform random derangement (rejection sampling over shuffles). m >= 2.
std::vector<std::size_t> random_derangement(std::size_t m, std::uint64_t seed);

struct CoverabilityResult {
  double value = 0.0;  // mean_i (g_i - h_i), in [-1, 1]
  std::size_t papers = 0;
  double scaled() const { return value * 100.0; }
};

/// g_i - h_i averaged over papers with at least two references and two
/// generated outputs, where g_i (h_i) is the mean similarity over ordered
/// pairs of distinct generated (reference) reviews. NoEligiblePapers when no
/// paper qualifies.
CoverabilityResult coverability(const PromptedOutputs& generated,
                                const ReferenceSets& references, const Similarity& sim);

struct ControlResult {
  double avg_single = 0.0;
  double avg_prompted = 0.0;
  double max_single = 0.0;
  double max_prompted = 0.0;
};

/// Average- and max-similarity of single-stage vs prompted outputs against
/// the references. Every paper with references must have a single output and
/// one prompted output per reference index; MissingOutputs otherwise.
ControlResult control_metrics(const std::map<std::string, std::string>& single,
                              const PromptedOutputs& prompted,
                              const ReferenceSets& references, const Similarity& sim);

}  // namespace revgen
