#include <cstdlib>
#include <fstream>
#include <set>

#include "revgen/cli.hpp"
#include "revgen/error.hpp"
#include "revgen/http_backend.hpp"
#include "revgen/mock_backends.hpp"
#include "revgen/rng.hpp"
#include "revgen/text.hpp"

#ifndef REVGEN_VERSION
#define REVGEN_VERSION "0.0.0"
#endif

namespace revgen::cli {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key \"" + key + "\" in " + where);
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

std::filesystem::path existing(const std::filesystem::path& base, const std::string& rel,
                               const std::string& what) {
  auto p = std::filesystem::path(rel);
  if (p.is_relative()) p = base / p;
  if (!std::filesystem::exists(p)) throw ConfigError(what + " does not exist: " + rel);
  return p;
}

BackendConfig backend_from_json(const std::string& name, const json& j) {
  const auto where = "backends." + name;
  check_keys(j, where,
             {"kind", "context_window", "supports_embeddings", "base_url", "model",
              "embedding_model", "api_key_env", "retry_limit", "max_concurrency",
              "timeout_seconds", "accept_probability", "embedding_dimension"});
  BackendConfig b;
  b.name = name;
  b.kind = get_or<std::string>(j, "kind", b.kind, where);
  b.context_window = get_or<std::int64_t>(j, "context_window", b.context_window, where);
  b.supports_embeddings = get_or<bool>(j, "supports_embeddings", b.supports_embeddings, where);
  b.base_url = get_or<std::string>(j, "base_url", b.base_url, where);
  b.model = get_or<std::string>(j, "model", b.model, where);
  b.embedding_model = get_or<std::string>(j, "embedding_model", b.embedding_model, where);
  b.api_key_env = get_or<std::string>(j, "api_key_env", name == "embedding" ? "EMBED_API_KEY" : "CHAT_API_KEY", where);
  b.retry_limit = get_or<int>(j, "retry_limit", b.retry_limit, where);
  b.max_concurrency = get_or<int>(j, "max_concurrency", b.max_concurrency, where);
  b.timeout_seconds = get_or<int>(j, "timeout_seconds", b.timeout_seconds, where);
  b.accept_probability = get_or<double>(j, "accept_probability", b.accept_probability, where);
  b.embedding_dimension = get_or<std::size_t>(j, "embedding_dimension", b.embedding_dimension, where);

  if (b.kind != "mock" && b.kind != "http") throw ConfigError(where + ".kind must be mock or http");
  if (b.kind == "http" && (b.base_url.empty() || b.model.empty()))
    throw ConfigError(where + " needs base_url and model");
  if (b.context_window <= 0) throw ConfigError(where + ".context_window must be positive");
  if (b.retry_limit < 0 || b.max_concurrency < 1 || b.timeout_seconds < 1)
    throw ConfigError(where + " has an invalid retry/concurrency/timeout setting");
  if (!(b.accept_probability >= 0.0 && b.accept_probability <= 1.0))
    throw ConfigError(where + ".accept_probability must be in [0, 1]");
  if (b.embedding_dimension == 0) throw ConfigError(where + ".embedding_dimension must be positive");
  return b;
}

}  // namespace

std::string RunConfig::hash() const { return text::hex64(text::fnv1a64(raw.dump())); }

RunConfig config_from_json(const json& input, const std::filesystem::path& base_dir,
                           std::optional<std::uint64_t> seed_override) {
  check_keys(input, "config",
             {"seed", "backends", "chat_backend", "pge", "generate", "split", "eval",
              "templates_dir", "clock"});
  RunConfig c;
  c.raw = input;
  if (seed_override) c.raw["seed"] = *seed_override;
  c.base_dir = base_dir;
  const auto& j = c.raw;

  c.seed = get_or<std::uint64_t>(j, "seed", 0, "config");

  if (auto it = j.find("backends"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("backends must be an object");
    for (const auto& [name, value] : it->items()) c.backends[name] = backend_from_json(name, value);
  }
  if (!c.backends.count("chat")) {
    BackendConfig chat;
    chat.name = "chat";
    c.backends["chat"] = chat;
  }
  c.chat_backend = get_or<std::string>(j, "chat_backend", c.chat_backend, "config");
  if (!c.backends.count(c.chat_backend)) throw ConfigError("chat_backend names an unknown backend");

  if (auto it = j.find("templates_dir"); it != j.end() && !it->is_null())
    c.templates_dir = existing(base_dir, it->get<std::string>(), "templates_dir");

  const auto section = [&](const char* name) {
    auto it = j.find(name);
    return it == j.end() ? json::object() : *it;
  };

  const auto pge = section("pge");
  check_keys(pge, "pge", {"attempt_limit", "generation_temperature", "evaluation_temperature",
                          "max_output_tokens", "seed_pool"});
  c.attempt_limit = get_or<int>(pge, "attempt_limit", c.attempt_limit, "pge");
  c.generation_temperature = get_or<double>(pge, "generation_temperature", c.generation_temperature, "pge");
  c.evaluation_temperature = get_or<double>(pge, "evaluation_temperature", c.evaluation_temperature, "pge");
  c.pge_max_output_tokens = get_or<int>(pge, "max_output_tokens", c.pge_max_output_tokens, "pge");
  if (auto p = get_or<std::string>(pge, "seed_pool", "", "pge"); !p.empty())
    c.seed_pool = existing(base_dir, p, "pge.seed_pool");
  if (c.attempt_limit < 1) throw ConfigError("pge.attempt_limit must be at least 1");
  if (c.generation_temperature < 0 || c.evaluation_temperature < 0)
    throw ConfigError("temperatures must be >= 0");

  const auto gen = section("generate");
  check_keys(gen, "generate", {"prompt_source", "k_max", "selection", "selection_index",
                               "summary_budget_tokens", "max_output_tokens", "concurrency"});
  const auto source = get_or<std::string>(gen, "prompt_source", "pge", "generate");
  if (source == "pge") c.prompt_source = PromptSource::Pge;
  else if (source == "generated") c.prompt_source = PromptSource::Generated;
  else throw ConfigError("generate.prompt_source must be pge or generated");
  c.k_max = get_or<int>(gen, "k_max", c.k_max, "generate");
  const auto selection = get_or<std::string>(gen, "selection", "all", "generate");
  if (selection == "all") c.selection = PromptSelection::All;
  else if (selection == "first") c.selection = PromptSelection::First;
  else if (selection == "index") c.selection = PromptSelection::Index;
  else throw ConfigError("generate.selection must be first, all or index");
  c.selection_index = get_or<int>(gen, "selection_index", c.selection_index, "generate");
  c.summary_budget_tokens = get_or<std::int64_t>(gen, "summary_budget_tokens", c.summary_budget_tokens, "generate");
  c.review_max_output_tokens = get_or<int>(gen, "max_output_tokens", c.review_max_output_tokens, "generate");
  c.concurrency = get_or<std::size_t>(gen, "concurrency", c.concurrency, "generate");
  if (c.k_max < 1 || c.summary_budget_tokens < 1 || c.review_max_output_tokens < 1 || c.concurrency < 1)
    throw ConfigError("generate settings must be positive");

  const auto split = section("split");
  check_keys(split, "split", {"train", "validation", "test", "in_domain"});
  c.ratios.train = get_or<double>(split, "train", c.ratios.train, "split");
  c.ratios.validation = get_or<double>(split, "validation", c.ratios.validation, "split");
  c.ratios.test = get_or<double>(split, "test", c.ratios.test, "split");
  if (auto it = split.find("in_domain"); it != split.end()) {
    c.in_domain.clear();
    for (const auto& v : *it) c.in_domain.push_back(Venue::parse(v.get<std::string>()));
  }

  const auto eval = section("eval");
  check_keys(eval, "eval", {"similarity", "shuffles", "include_meta_reviews"});
  c.similarity = parse_similarity_kind(get_or<std::string>(eval, "similarity", "hashed_bow_cosine", "eval"));
  c.shuffles = get_or<int>(eval, "shuffles", c.shuffles, "eval");
  c.include_meta_reviews = get_or<bool>(eval, "include_meta_reviews", c.include_meta_reviews, "eval");
  if (c.shuffles < 1) throw ConfigError("eval.shuffles must be at least 1");

  c.clock = get_or<std::string>(j, "clock", "", "config");
  if (c.clock.empty()) c.clock = c.backends.at(c.chat_backend).kind == "mock" ? "epoch" : "wall";
  if (c.clock != "epoch" && c.clock != "wall") throw ConfigError("clock must be epoch or wall");
  return c;
}

RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path(), seed_override);
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config, std::uint64_t seed) {
  BackendProfile profile{config.name, config.context_window, config.supports_embeddings};
  if (config.kind == "mock") {
    SyntheticBackendOptions options;
    options.seed = derive_seed(seed, "backend:" + config.name);
    options.accept_probability = config.accept_probability;
    options.embedding_dimension = config.embedding_dimension;
    return std::make_unique<SyntheticBackend>(profile, options);
  }
  HttpBackendOptions options;
  options.model = config.model;
  options.embedding_model = config.embedding_model;
  if (const char* key = std::getenv(config.api_key_env.c_str())) options.api_key = key;
  options.retry.retry_limit = config.retry_limit;
  options.max_concurrency = config.max_concurrency;
  return std::make_unique<HttpBackend>(
      profile, make_http_transport(config.base_url, std::chrono::seconds(config.timeout_seconds)),
      options);
}

json manifest(const RunConfig& config, const std::string& command) {
  return {{"tool", "revgen"},
          {"version", REVGEN_VERSION},
          {"command", command},
          {"config_hash", config.hash()},
          {"seed", config.seed}};
}

}  // namespace revgen::cli
