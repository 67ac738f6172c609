#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "revgen/corpus.hpp"
#include "revgen/genreview.hpp"
#include "revgen/metrics.hpp"

namespace revgen {

struct PaperMetrics {
  std::string paper_id;
  std::string venue;
  std::size_t outputs = 0;
  double bleu_max = 0.0;
  double rouge1_max = 0.0;
  double rouge2_max = 0.0;
  double rougeL_max = 0.0;
  double sim_max = 0.0;
};

struct QualityMeans {
  std::size_t papers = 0;
  double bleu_max = 0.0;
  double rouge1_max = 0.0;
  double rouge2_max = 0.0;
  double rougeL_max = 0.0;
  double sim_max = 0.0;
};

/// Everything `eval` computes for one generated-output set. Values are kept
/// in [0, 1]; rendered tables multiply by 100.
struct MetricReport {
  std::string variant;
  std::string similarity;
  std::vector<PaperMetrics> papers;
  std::map<std::string, QualityMeans> venue_means;
  QualityMeans overall;
  std::optional<SpecificityResult> spe;
  std::string spe_note;
  std::map<std::string, CoverabilityResult> cov;  // per venue
  std::optional<CoverabilityResult> cov_overall;
  std::string cov_note;
  std::optional<ControlResult> control;
  std::string control_baseline;
  std::string control_note;
};

struct EvalConfig {
  SpecificityConfig specificity;
  bool include_meta_reviews = false;
};

/// Per-paper rows average the metrics of that paper's outputs. Specificity
/// uses one output per paper (the lowest prompt index). Coverability needs a
/// two-stage variant; control needs `baseline` single-stage outputs too.
/// MissingOutputs when `generated` is empty.
MetricReport evaluate(const Corpus& corpus, const std::vector<GeneratedReview>& generated,
                      const Similarity& sim, const EvalConfig& config = {},
                      const std::vector<GeneratedReview>* baseline = nullptr);

nlohmann::json to_json(const MetricReport& report);
MetricReport report_from_json(const nlohmann::json& j);

/// Quality, control and coverability tables, values x100.
std::string render_report(const MetricReport& report);

}  // namespace revgen
