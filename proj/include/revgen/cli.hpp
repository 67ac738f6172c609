#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "revgen/backend.hpp"
#include "revgen/corpus.hpp"
#include "revgen/genreview.hpp"
#include "revgen/metrics.hpp"

namespace revgen::cli {

struct BackendConfig {
  std::string kind = "mock";  // mock | http
  std::string name;
  std::int64_t context_window = 4096;
  bool supports_embeddings = false;
  // http
  std::string base_url;
  std::string model;
  std::string embedding_model;
  std::string api_key_env = "CHAT_API_KEY";
  int retry_limit = 3;
  int max_concurrency = 4;
  int timeout_seconds = 120;
  // mock
  double accept_probability = 0.65;
  std::size_t embedding_dimension = 4096;
};

/// Parsed configuration file. API keys never live here; only the names of
/// the environment variables that hold them.
struct RunConfig {
  nlohmann::json raw;  // normalized JSON the hash is computed from
  std::filesystem::path base_dir;

  std::uint64_t seed = 0;
  std::map<std::string, BackendConfig> backends;  // chat, long_chat, embedding
  std::string chat_backend = "chat";

  int attempt_limit = 5;
  double generation_temperature = kGenerationTemperature;
  double evaluation_temperature = kEvaluationTemperature;
  int pge_max_output_tokens = 512;
  std::optional<std::filesystem::path> seed_pool;
  std::optional<std::filesystem::path> templates_dir;

  PromptSource prompt_source = PromptSource::Pge;
  int k_max = 4;
  PromptSelection selection = PromptSelection::All;
  int selection_index = 0;
  std::int64_t summary_budget_tokens = 1500;
  int review_max_output_tokens = 1024;
  std::size_t concurrency = 1;

  SplitRatios ratios;
  std::vector<Venue> in_domain{Venue{VenueKind::ICLR, {}}, Venue{VenueKind::NeurIPS, {}}};

  SimilarityKind similarity = SimilarityKind::HashedBowCosine;
  int shuffles = 10;
  bool include_meta_reviews = false;
  /// "wall" or "epoch"; defaults to epoch when the chat backend is a mock.
  std::string clock;

  /// FNV-1a of the normalized JSON (seed override included).
  std::string hash() const;
};

/// Loads and validates a config. Relative paths resolve against the config
/// file's directory and must exist. `seed_override` replaces "seed".
RunConfig load_config(const std::filesystem::path& path,
                      std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                           std::optional<std::uint64_t> seed_override = std::nullopt);

/// Instantiates the backend behind a profile; keys come from the environment.
std::unique_ptr<Backend> make_backend(const BackendConfig& config, std::uint64_t seed);

/// Provenance block stamped into every artifact.
nlohmann::json manifest(const RunConfig& config, const std::string& command);

/// Runs the `revgen` command line. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace revgen::cli
