#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "revgen/backend.hpp"
#include "revgen/corpus.hpp"
#include "revgen/templates.hpp"

namespace revgen {

/// Review generation variants. R2 and R2_E are two-stage (aspect prompt, then
/// review); the *_E variants read an extractive summary instead of the full
/// paper; SingleS_E0 is the zero-shot instruction.
enum class Variant { R2, R2_E, SingleS, SingleS_E, SingleS_E0 };

std::string to_string(Variant v);
Variant parse_variant(std::string_view name);
bool is_two_stage(Variant v);
bool uses_summary(Variant v);

struct ExtractedSummary {
  std::string paper_id;
  std::vector<std::string> sentences;  // document order
  std::int64_t budget_tokens = 0;

  std::string text() const;  // sentences joined by single spaces
};

/// Budget-bounded diverse sentence selection. Abstract sentences are seeded
/// first; then the sentence with the highest ratio of not-yet-covered distinct
/// tokens to its token length is added, skipping any that would break the
/// budget. The result is returned in document order. EmptyPaper when the
/// paper has no sentences.
ExtractedSummary extract_summary(const Paper& paper, std::int64_t budget_tokens,
                                 const TokenEstimator& estimator = estimate_tokens);

/// Sentences of a paper in document order: abstract first, then sections.
std::vector<std::string> paper_sentences(const Paper& paper);
std::size_t abstract_sentence_count(const Paper& paper);

/// Plain-text rendering: title, abstract, sections, optionally references.
std::string render_paper(const Paper& paper, bool include_references = true);

/// Paper text that fits `budget_tokens`: the full rendering when it fits,
/// otherwise references are dropped, then trailing sections are dropped and
/// the last kept section is cut at a word boundary. ContextOverflow when even
/// title and abstract do not fit.
std::string fit_paper_text(const Paper& paper, std::int64_t budget_tokens,
                           const TokenEstimator& estimator = estimate_tokens);

struct ReviewGenOptions {
  int max_output_tokens = 1024;
  double temperature = kGenerationTemperature;
  const TemplateSet* templates = nullptr;
};

/// Queries the aspect-prompt stage once and turns each returned question into
/// a single-question prompt (review_index = position). At most `k_max`.
std::vector<AspectPrompt> generate_aspect_prompts(const Paper& paper, Backend& backend,
                                                  int k_max,
                                                  const ReviewGenOptions& options = {});

/// What the review stage reads: the full paper or its extractive summary.
struct ReviewInput {
  std::string paper_id;
  const Paper* paper = nullptr;
  std::optional<ExtractedSummary> summary;

  static ReviewInput full(const Paper& paper);
  static ReviewInput extracted(const Paper& paper, ExtractedSummary summary);
};

struct GeneratedReview {
  std::string paper_id;
  Variant variant = Variant::SingleS;
  std::optional<AspectPrompt> prompt_used;
  std::string text;
  std::string backend_tag;
  std::string timestamp;

  /// review_index of the prompt, or -1 for single-stage outputs.
  int prompt_index() const;
  friend bool operator==(const GeneratedReview&, const GeneratedReview&) = default;
};

nlohmann::json to_json(const GeneratedReview& review);
GeneratedReview generated_review_from_json(const nlohmann::json& j);
std::vector<GeneratedReview> read_generated_jsonl(const std::filesystem::path& path);

/// Renders the review request. Two-stage variants append the numbered aspect
/// questions; single-stage variants have no question block.
ChatRequest build_review_request(const ReviewInput& input, const AspectPrompt* prompt,
                                 Variant variant, const BackendProfile& profile,
                                 const ReviewGenOptions& options = {},
                                 const TokenEstimator& estimator = estimate_tokens);

/// One review-stage call. InvalidInput when the prompt/variant or input kind
/// does not match the variant.
GeneratedReview generate_review(const ReviewInput& input, const AspectPrompt* prompt,
                                Backend& backend, Variant variant,
                                const ReviewGenOptions& options = {},
                                std::string timestamp = {});

enum class PromptSource { Pge, Generated };
enum class PromptSelection { First, All, Index };

struct VariantConfig {
  PromptSource prompt_source = PromptSource::Pge;
  int k_max = 4;
  PromptSelection selection = PromptSelection::All;
  int selection_index = 0;
  std::int64_t summary_budget_tokens = 1500;
  ReviewGenOptions generation;
  /// Backend for the aspect-prompt stage when prompts are generated; the
  /// review backend is used when null.
  Backend* prompt_backend = nullptr;
  /// Append-only output log. Items already present are skipped.
  std::optional<std::filesystem::path> output;
  std::size_t concurrency = 1;
  /// Timestamp for each output; UTC wall clock when unset.
  std::function<std::string()> clock;
};

struct ItemFailure {
  std::string paper_id;
  int prompt_index = -1;
  std::string error_kind;
  std::string message;
};

struct VariantRun {
  std::vector<GeneratedReview> outputs;  // persisted + new, in item order
  std::vector<ItemFailure> failures;
  std::size_t resumed = 0;
};

/// One output per paper for single-stage variants, one per (paper, prompt)
/// for two-stage variants. Per-item errors are collected, not thrown.
VariantRun run_variant(const Corpus& corpus, Variant variant, Backend& backend,
                       const VariantConfig& config = {});

std::string utc_timestamp_now();

}  // namespace revgen
