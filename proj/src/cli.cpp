#include "revgen/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "revgen/error.hpp"
#include "revgen/pge.hpp"
#include "revgen/report.hpp"
#include "revgen/templates.hpp"

namespace revgen::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
  RunConfig config;
  fs::path workdir;
  std::string backend_override;
  std::optional<TemplateSet> templates;
  std::ostream& out;
  std::ostream& err;

  fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : workdir / p; }
  const TemplateSet* template_set() const { return templates ? &*templates : nullptr; }

  std::unique_ptr<Backend> backend(const std::string& fallback) const {
    const auto& name = backend_override.empty() ? fallback : backend_override;
    auto it = config.backends.find(name);
    if (it == config.backends.end()) throw ConfigError("no backend profile named " + name);
    return make_backend(it->second, config.seed);
  }
};

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path.filename().string());
  out << content;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_sidecar(const Context& ctx, const fs::path& path, const std::string& command) {
  write_json(fs::path(path.string() + ".manifest.json"), manifest(ctx.config, command));
}

void write_corpus(const Context& ctx, const Corpus& corpus, const fs::path& path,
                  const std::string& command) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_corpus_jsonl(corpus, path);
  write_sidecar(ctx, path, command);
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".json") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  return files;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::vector<std::string> inputs;
  std::string out = "corpus.jsonl";
  std::string papers_dir;
  bool lenient = false;
};

int cmd_ingest(Context& ctx, const IngestArgs& a) {
  Corpus corpus;
  json skipped = json::array();
  for (const auto& file : expand_inputs(a.inputs)) {
    try {
      auto record = load_venue_file(file, a.papers_dir.empty() ? fs::path{} : fs::path(a.papers_dir));
      corpus.add(std::move(record.paper), std::move(record.reviews));
    } catch (const Error& e) {
      ctx.err << file.filename().string() << ": " << e.what() << "\n";
      skipped.push_back({{"file", file.filename().string()}, {"error", e.kind()}, {"message", e.what()}});
    }
  }
  if (!skipped.empty() && !a.lenient) {
    ctx.err << skipped.size() << " input file(s) failed; nothing written (use --lenient to skip them)\n";
    return 1;
  }
  if (corpus.empty()) {
    ctx.err << "no papers ingested\n";
    return 1;
  }
  const auto out = ctx.resolve(a.out);
  write_corpus(ctx, corpus, out, "ingest");
  auto stats = stats_to_json(compute_stats(corpus));
  stats["skipped_files"] = skipped;
  stats["manifest"] = manifest(ctx.config, "ingest");
  write_json(out.parent_path() / "stats.json", stats);
  ctx.out << "ingested " << corpus.papers.size() << " papers, " << corpus.review_count()
          << " reviews";
  if (!skipped.empty()) ctx.out << " (" << skipped.size() << " file(s) skipped)";
  ctx.out << "\n";
  return 0;
}

int cmd_stats(Context& ctx, const std::string& corpus_path, bool as_json) {
  const auto table = compute_stats(read_corpus_jsonl(ctx.resolve(corpus_path)));
  if (as_json) {
    ctx.out << stats_to_json(table).dump(2) << "\n";
  } else {
    ctx.out << render_stats(table);
  }
  return 0;
}

int cmd_split(Context& ctx, const std::string& corpus_path, const std::string& out_dir) {
  const auto corpus = read_corpus_jsonl(ctx.resolve(corpus_path));
  const auto split = split_corpus(corpus, ctx.config.ratios, ctx.config.seed, ctx.config.in_domain);
  const auto dir = ctx.resolve(out_dir);
  write_corpus(ctx, split.train, dir / "train.jsonl", "split");
  write_corpus(ctx, split.validation, dir / "validation.jsonl", "split");
  write_corpus(ctx, split.test, dir / "test.jsonl", "split");
  ctx.out << "train " << split.train.papers.size() << ", validation "
          << split.validation.papers.size() << ", test " << split.test.papers.size() << "\n";
  return 0;
}

struct PgeArgs {
  std::string corpus = "corpus.jsonl";
  std::string out = "corpus.pge.jsonl";
  std::string pool_out = "pool.jsonl";
  std::string stats_out = "pge_stats.json";
};

int cmd_pge(Context& ctx, const PgeArgs& a) {
  const auto corpus = read_corpus_jsonl(ctx.resolve(a.corpus));
  auto backend = ctx.backend(ctx.config.chat_backend);
  ExamplePool pool = ctx.config.seed_pool ? ExamplePool::load_seed_jsonl(*ctx.config.seed_pool)
                                          : ExamplePool{};
  PgeConfig cfg;
  cfg.attempt_limit = ctx.config.attempt_limit;
  cfg.rng_seed = ctx.config.seed;
  cfg.generation = {ctx.config.pge_max_output_tokens, ctx.config.generation_temperature, ctx.template_set()};
  cfg.evaluation = {ctx.config.pge_max_output_tokens, ctx.config.evaluation_temperature, ctx.template_set()};
  cfg.include_meta_reviews = ctx.config.include_meta_reviews;
  const auto result = run_pge(corpus, *backend, pool, cfg);

  write_corpus(ctx, result.corpus, ctx.resolve(a.out), "pge");
  const auto pool_path = ctx.resolve(a.pool_out);
  std::ostringstream pool_text;
  pool.write_jsonl(pool_text);
  write_text(pool_path, pool_text.str());
  write_sidecar(ctx, pool_path, "pge");
  auto stats = result.stats.to_json();
  stats["manifest"] = manifest(ctx.config, "pge");
  write_json(ctx.resolve(a.stats_out), stats);
  ctx.out << "stored " << result.stats.stored_count << ", excluded " << result.stats.excluded_count
          << ", skipped " << result.stats.skipped_count << ", pool " << result.stats.pool_size << "\n";
  return 0;
}

struct GenerateArgs {
  std::string corpus = "corpus.pge.jsonl";
  std::string variant;
  std::string prompts;
  std::string out;
};

int cmd_generate(Context& ctx, const GenerateArgs& a) {
  const auto variant = parse_variant(a.variant);
  const auto corpus = read_corpus_jsonl(ctx.resolve(a.corpus));
  const auto& c = ctx.config;
  auto backend = ctx.backend(c.backends.count("long_chat") ? "long_chat" : c.chat_backend);

  VariantConfig cfg;
  cfg.prompt_source = c.prompt_source;
  if (a.prompts == "pge") cfg.prompt_source = PromptSource::Pge;
  else if (a.prompts == "generated") cfg.prompt_source = PromptSource::Generated;
  cfg.k_max = c.k_max;
  cfg.selection = c.selection;
  cfg.selection_index = c.selection_index;
  cfg.summary_budget_tokens = c.summary_budget_tokens;
  cfg.generation = {c.review_max_output_tokens, c.generation_temperature, ctx.template_set()};
  cfg.concurrency = c.concurrency;
  if (c.clock == "epoch") cfg.clock = [] { return std::string("1970-01-01T00:00:00Z"); };
  const auto out = ctx.resolve(a.out.empty() ? "generated/" + to_string(variant) + ".jsonl" : a.out);
  cfg.output = out;

  std::string command = "generate --variant " + to_string(variant);
  if (is_two_stage(variant))
    command += cfg.prompt_source == PromptSource::Pge ? " --prompts pge" : " --prompts generated";
  const auto run = run_variant(corpus, variant, *backend, cfg);
  write_sidecar(ctx, out, command);

  ctx.out << run.outputs.size() << " outputs (" << run.resumed << " resumed), "
          << run.failures.size() << " failures\n";
  if (run.failures.empty()) return 0;
  json report = json::array();
  for (const auto& f : run.failures) {
    ctx.err << f.paper_id << " prompt " << f.prompt_index << ": " << f.error_kind << ": "
            << f.message << "\n";
    report.push_back({{"paper_id", f.paper_id},
                      {"prompt_index", f.prompt_index},
                      {"error", f.error_kind},
                      {"message", f.message}});
  }
  write_json(fs::path(out.string() + ".failures.json"), report);
  return 1;
}

struct EvalArgs {
  std::string corpus = "corpus.pge.jsonl";
  std::string variant = "R2";
  std::string generated;
  std::string baseline;
  std::string out = "report.json";
};

int cmd_eval(Context& ctx, const EvalArgs& a) {
  const auto variant = parse_variant(a.variant);
  const auto corpus = read_corpus_jsonl(ctx.resolve(a.corpus));
  const auto generated = read_generated_jsonl(
      ctx.resolve(a.generated.empty() ? "generated/" + to_string(variant) + ".jsonl" : a.generated));
  std::optional<std::vector<GeneratedReview>> baseline;
  if (!a.baseline.empty()) baseline = read_generated_jsonl(ctx.resolve(a.baseline));

  std::unique_ptr<Backend> embedder;
  if (ctx.config.similarity == SimilarityKind::EmbeddingCosine ||
      ctx.config.similarity == SimilarityKind::TokenGreedyF1) {
    if (!ctx.config.backends.count("embedding")) throw ConfigError("no embedding backend configured");
    embedder = make_backend(ctx.config.backends.at("embedding"), ctx.config.seed);
  }
  const auto sim = make_similarity(ctx.config.similarity, embedder.get());

  EvalConfig cfg;
  cfg.specificity.shuffles = ctx.config.shuffles;
  cfg.specificity.rng_seed = ctx.config.seed;
  cfg.include_meta_reviews = ctx.config.include_meta_reviews;
  const auto report = evaluate(corpus, generated, *sim, cfg, baseline ? &*baseline : nullptr);

  auto j = to_json(report);
  j["manifest"] = manifest(ctx.config, "eval --variant " + to_string(variant));
  write_json(ctx.resolve(a.out), j);
  ctx.out << render_report(report);
  return 0;
}

int cmd_report(Context& ctx, const std::string& report_path, const std::string& out) {
  const auto path = ctx.resolve(report_path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingOutputs("no report at " + report_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw MalformedRecord(std::string("report: ") + e.what());
  }
  const auto text = render_report(report_from_json(j));
  if (!out.empty()) write_text(ctx.resolve(out), text);
  ctx.out << text;
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Aspect-prompted review generation and evaluation", "revgen"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(REVGEN_VERSION));

  std::string config_path, backend_name, workdir = ".";
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "Run configuration (JSON)");
  app.add_option("--seed", seed, "Override the configured seed");
  app.add_option("--backend", backend_name, "Backend profile to use for chat calls");
  app.add_option("--workdir", workdir, "Directory that relative artifact paths resolve against");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Convert venue files into the unified corpus");
  c_ingest->add_option("inputs", ingest.inputs, "Venue files or directories")->required();
  c_ingest->add_option("--out", ingest.out, "Corpus JSONL")->capture_default_str();
  c_ingest->add_option("--papers-dir", ingest.papers_dir, "Science-Parse records by paper id");
  auto* strict = c_ingest->add_flag("--strict", "Fail when any input fails (default)");
  c_ingest->add_flag("--lenient", ingest.lenient, "Skip inputs that fail")->excludes(strict);

  std::string stats_corpus = "corpus.jsonl";
  bool stats_json = false;
  auto* c_stats = app.add_subcommand("stats", "Print corpus statistics");
  c_stats->add_option("--corpus", stats_corpus)->capture_default_str();
  c_stats->add_flag("--json", stats_json, "Print JSON instead of a table");

  std::string split_corpus_path = "corpus.jsonl", split_dir = "splits";
  auto* c_split = app.add_subcommand("split", "Split the corpus into train/validation/test");
  c_split->add_option("--corpus", split_corpus_path)->capture_default_str();
  c_split->add_option("--out-dir", split_dir)->capture_default_str();

  PgeArgs pge;
  auto* c_pge = app.add_subcommand("pge", "Generate and self-evaluate an aspect prompt per review");
  c_pge->add_option("--corpus", pge.corpus)->capture_default_str();
  c_pge->add_option("--out", pge.out)->capture_default_str();
  c_pge->add_option("--pool-out", pge.pool_out)->capture_default_str();
  c_pge->add_option("--stats-out", pge.stats_out)->capture_default_str();

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Generate reviews with one variant");
  c_gen->add_option("--corpus", gen.corpus)->capture_default_str();
  c_gen->add_option("--variant", gen.variant, "R2, R2_E, SingleS, SingleS_E or SingleS_E0")->required();
  c_gen->add_option("--prompts", gen.prompts, "Aspect prompt source for two-stage variants")
      ->check(CLI::IsMember({"pge", "generated"}));
  c_gen->add_option("--out", gen.out, "Output JSONL (default generated/<variant>.jsonl)");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Score generated reviews against the references");
  c_eval->add_option("--corpus", ev.corpus)->capture_default_str();
  c_eval->add_option("--variant", ev.variant)->capture_default_str();
  c_eval->add_option("--generated", ev.generated, "Generated JSONL (default generated/<variant>.jsonl)");
  c_eval->add_option("--baseline", ev.baseline, "Single-stage outputs for the control comparison");
  c_eval->add_option("--out", ev.out)->capture_default_str();

  std::string report_path = "report.json", report_out;
  auto* c_report = app.add_subcommand("report", "Render a report.json as tables");
  c_report->add_option("--report", report_path)->capture_default_str();
  c_report->add_option("--out", report_out, "Also write the tables to this file");

  std::vector<const char*> argv{"revgen"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    Context ctx{config_path.empty() ? config_from_json(json::object(), ".", seed)
                                    : load_config(config_path, seed),
                workdir, backend_name, std::nullopt, out, err};
    if (ctx.config.templates_dir) ctx.templates = TemplateSet::load(*ctx.config.templates_dir);
    fs::create_directories(ctx.workdir);

    if (c_ingest->parsed()) return cmd_ingest(ctx, ingest);
    if (c_stats->parsed()) return cmd_stats(ctx, stats_corpus, stats_json);
    if (c_split->parsed()) return cmd_split(ctx, split_corpus_path, split_dir);
    if (c_pge->parsed()) return cmd_pge(ctx, pge);
    if (c_gen->parsed()) return cmd_generate(ctx, gen);
    if (c_eval->parsed()) return cmd_eval(ctx, ev);
    if (c_report->parsed()) return cmd_report(ctx, report_path, report_out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace revgen::cli
