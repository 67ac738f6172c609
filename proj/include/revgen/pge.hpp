#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "revgen/backend.hpp"
#include "revgen/corpus.hpp"
#include "revgen/rng.hpp"
#include "revgen/templates.hpp"

namespace revgen {

/// One accepted (prompt, review) demonstration.
struct PoolEntry {
  AspectPrompt prompt;
  std::string review_text;
};

/// The growing store of accepted demonstrations sampled for in-context
/// generation. Append-only; every entry carries score 5. Appends and reads are
/// internally synchronized, so a sampler always observes a prefix.
class ExamplePool {
 public:
  ExamplePool() = default;
  /// Seeds are curated demonstrations; they are stored with score 5.
  explicit ExamplePool(std::vector<PoolEntry> seeds);
  ExamplePool(const ExamplePool& other);
  ExamplePool& operator=(const ExamplePool& other);

  /// Throws InvalidInput unless the prompt scored 5.
  void append(PoolEntry entry);

  std::size_t size() const;
  std::size_t seed_count() const;
  PoolEntry at(std::size_t index) const;
  std::vector<PoolEntry> snapshot() const;

  /// Seed pool JSONL: one {"questions": [...], "review_text": "..."} per line.
  static ExamplePool load_seed_jsonl(const std::filesystem::path& path);
  void write_jsonl(std::ostream& out) const;

 private:
  mutable std::mutex mutex_;
  std::deque<PoolEntry> entries_;
  std::size_t seed_count_ = 0;
};

struct RubricExample {
  std::vector<std::string> questions;
  std::string answer;
  std::string assessment;
  int score = 0;
};

/// The fixed 5-point scale and one worked example per score, identical for
/// every evaluation in a run.
struct Rubric {
  std::array<std::string, 5> descriptors;  // index 0 describes score 1
  std::array<RubricExample, 5> examples;   // ascending score order

  static const Rubric& standard();
  /// Throws InvalidInput unless there is exactly one example per score 1..5.
  void validate() const;
  std::string scale_text() const;
};

struct PromptCallOptions {
  int max_output_tokens = 512;
  double temperature = kGenerationTemperature;
  const TemplateSet* templates = nullptr;  // builtin when null
};

struct GenerationRequest {
  ChatRequest request;
  /// Pool indices of the demonstrations, in rendered order.
  std::vector<std::size_t> example_indices;
  /// The sampled demonstration that did not fit, if the pool was not exhausted.
  std::optional<std::size_t> rejected_index;
};

/// Renders the generation prompt for one review with as many demonstrations
/// as fit: pool indices are drawn uniformly without replacement and added
/// until the next one would overflow the profile's budget. The target review
/// is always present; ContextOverflow when it does not fit on its own.
GenerationRequest build_generation_request(std::string_view review_text,
                                           const ExamplePool& pool,
                                           const BackendProfile& profile, Rng& rng,
                                           const PromptCallOptions& options = {},
                                           const TokenEstimator& estimator = estimate_tokens);

/// Numbered lines ("3." or "3)") become questions; other lines are ignored.
/// Raises NoQuestionsFound when there is none.
std::vector<std::string> parse_prompt_output(std::string_view text);

/// Rubric scale, the five worked examples in ascending score order, then the
/// candidate (questions, review) pair, ending at "Assessment:".
ChatRequest build_evaluation_request(const std::vector<std::string>& questions,
                                     std::string_view review_text, const Rubric& rubric,
                                     const PromptCallOptions& options = {
                                         512, kEvaluationTemperature, nullptr});

struct EvaluationResult {
  std::string explanation;
  int score = 0;
};

/// score = the last integer in 1..5 after the final case-insensitive "score"
/// word; explanation = the text before that word. Raises ScoreNotFound.
EvaluationResult parse_evaluation_output(std::string_view text);

struct PgeConfig {
  int attempt_limit = 5;
  std::uint64_t rng_seed = 0;
  /// Reviews processed in parallel. With more than one worker the pool grows
  /// in completion order, so replay is only byte-exact at 1.
  std::size_t concurrency = 1;
  PromptCallOptions generation{512, kGenerationTemperature, nullptr};
  PromptCallOptions evaluation{512, kEvaluationTemperature, nullptr};
  const Rubric* rubric = nullptr;  // standard when null
  bool include_meta_reviews = false;
};

enum class AttemptOutcome {
  Accepted,
  LowScore,
  Overflow,
  NoQuestions,
  Duplicate,
  NoScore,
};
std::string to_string(AttemptOutcome outcome);

struct AttemptTrace {
  ReviewKey review;
  int attempt = 0;
  std::vector<std::size_t> example_indices;
  std::vector<std::string> questions;
  std::optional<int> score;
  AttemptOutcome outcome = AttemptOutcome::LowScore;
};

struct PgeStats {
  std::map<int, std::size_t> attempts_histogram;  // stored prompts only
  std::size_t stored_count = 0;
  std::size_t excluded_count = 0;
  std::size_t skipped_count = 0;  // already prompted before the run
  std::size_t pool_size = 0;
  std::size_t seed_count = 0;

  /// Share of processed reviews stored within `attempts` generations.
  double fraction_stored_within(int attempts) const;
  nlohmann::json to_json() const;
};

struct PgeResult {
  Corpus corpus;
  PgeStats stats;
  std::vector<AttemptTrace> trace;
  /// Pool size after each review finished, in completion order.
  std::vector<std::size_t> pool_size_history;
};

/// Generation/evaluation loop over every reference review lacking a prompt.
/// Accepted prompts (score 5) are attached to the corpus and appended to the
/// pool; after `attempt_limit` failed generations the review is marked
/// excluded. Unparsable output, a repeated candidate, or a prompt that does
/// not fit each consume an attempt. Backend errors abort the run.
PgeResult run_pge(const Corpus& corpus, Backend& backend, ExamplePool& pool,
                  const PgeConfig& config = {});

}  // namespace revgen
