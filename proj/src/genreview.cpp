#include "revgen/genreview.hpp"

#include <algorithm>
#include <ctime>
#include <limits>
#include <fstream>
#include <map>
#include <thread>

#include "revgen/error.hpp"
#include "revgen/pge.hpp"
#include "revgen/text.hpp"

namespace revgen {

using nlohmann::json;

std::string to_string(Variant v) {
  switch (v) {
    case Variant::R2: return "R2";
    case Variant::R2_E: return "R2_E";
    case Variant::SingleS: return "SingleS";
    case Variant::SingleS_E: return "SingleS_E";
    case Variant::SingleS_E0: return "SingleS_E0";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (auto v : {Variant::R2, Variant::R2_E, Variant::SingleS, Variant::SingleS_E,
                 Variant::SingleS_E0}) {
    auto n = to_string(v);
    if (text::to_lower_ascii(n) == text::to_lower_ascii(name)) return v;
    std::replace(n.begin(), n.end(), '_', '-');
    if (text::to_lower_ascii(n) == text::to_lower_ascii(name)) return v;
  }
  throw InvalidInput("unknown variant " + std::string(name));
}

bool is_two_stage(Variant v) { return v == Variant::R2 || v == Variant::R2_E; }

bool uses_summary(Variant v) {
  return v == Variant::R2_E || v == Variant::SingleS_E || v == Variant::SingleS_E0;
}

namespace {

const TemplateSet& templates_of(const ReviewGenOptions& options) {
  return options.templates ? *options.templates : TemplateSet::builtin();
}

std::string summary_text(const Paper& paper, const ExtractedSummary& summary) {
  return "Title: " + paper.title + "\n\nExtracted content:\n" + summary.text();
}

// Builds a single-turn request whose {{paper}} slot is filled by `fill`, given
// the token budget left once everything else is rendered.
template <typename Fill>
ChatRequest fitted_request(const std::string& system, const std::string& template_name,
                           TemplateVars vars, const TemplateSet& templates,
                           const BackendProfile& profile, const ReviewGenOptions& options,
                           const TokenEstimator& estimator, Fill fill) {
  ChatRequest request;
  request.system = system;
  request.temperature = options.temperature;
  request.max_output_tokens = options.max_output_tokens;
  vars["paper"] = "";
  request.turns = {{Role::User, templates.render(template_name, vars)}};
  const auto remaining =
      prompt_budget(profile, options.max_output_tokens) - request_tokens(request, estimator);
  if (remaining <= 0) throw ContextOverflow("instructions alone exceed the " + profile.name + " budget");
  vars["paper"] = fill(remaining);
  request.turns = {{Role::User, templates.render(template_name, vars)}};
  return request;
}

}  // namespace

std::vector<AspectPrompt> generate_aspect_prompts(const Paper& paper, Backend& backend, int k_max,
                                                  const ReviewGenOptions& options) {
  if (k_max < 1) throw InvalidInput("k_max must be at least 1");
  const auto& templates = templates_of(options);
  auto request = fitted_request(templates.get("system"), "aspect_prompts", {}, templates,
                                backend.profile(), options, backend.estimator(),
                                [&](std::int64_t budget) {
                                  return fit_paper_text(paper, budget, backend.estimator());
                                });
  request.task = "aspect_prompts";
  const auto questions = parse_prompt_output(backend.complete(request).text);
  std::vector<AspectPrompt> out;
  for (std::size_t i = 0; i < questions.size() && out.size() < static_cast<std::size_t>(k_max); ++i) {
    AspectPrompt p;
    p.paper_id = paper.id;
    p.review_index = static_cast<int>(i);
    p.questions = {questions[i]};
    p.attempts = 1;
    out.push_back(std::move(p));
  }
  return out;
}

ReviewInput ReviewInput::full(const Paper& paper) { return {paper.id, &paper, std::nullopt}; }

ReviewInput ReviewInput::extracted(const Paper& paper, ExtractedSummary summary) {
  return {paper.id, &paper, std::move(summary)};
}

int GeneratedReview::prompt_index() const { return prompt_used ? prompt_used->review_index : -1; }

json to_json(const GeneratedReview& r) {
  return {{"paper_id", r.paper_id},
          {"variant", to_string(r.variant)},
          {"prompt_index", r.prompt_index()},
          {"prompt_used", r.prompt_used ? to_json(*r.prompt_used) : json(nullptr)},
          {"text", r.text},
          {"backend_tag", r.backend_tag},
          {"timestamp", r.timestamp}};
}

GeneratedReview generated_review_from_json(const json& j) {
  try {
    GeneratedReview r;
    r.paper_id = j.at("paper_id").get<std::string>();
    r.variant = parse_variant(j.at("variant").get<std::string>());
    if (auto it = j.find("prompt_used"); it != j.end() && !it->is_null())
      r.prompt_used = prompt_from_json(*it);
    r.text = j.at("text").get<std::string>();
    r.backend_tag = j.value("backend_tag", std::string{});
    r.timestamp = j.value("timestamp", std::string{});
    if (is_two_stage(r.variant) != r.prompt_used.has_value())
      throw MalformedRecord("generated review for " + r.paper_id + " has an inconsistent prompt");
    return r;
  } catch (const json::exception& e) {
    throw MalformedRecord(std::string("generated review: ") + e.what());
  }
}

std::vector<GeneratedReview> read_generated_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingOutputs("no generated outputs at " + path.string());
  std::vector<GeneratedReview> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(generated_review_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw MalformedRecord(path.string() + ": " + e.what());
    }
  }
  return out;
}

ChatRequest build_review_request(const ReviewInput& input, const AspectPrompt* prompt,
                                 Variant variant, const BackendProfile& profile,
                                 const ReviewGenOptions& options,
                                 const TokenEstimator& estimator) {
  if (!input.paper) throw InvalidInput("review input has no paper");
  if (is_two_stage(variant) != (prompt != nullptr))
    throw InvalidInput(to_string(variant) + (prompt ? " takes no aspect prompt" : " needs an aspect prompt"));
  if (uses_summary(variant) != input.summary.has_value())
    throw InvalidInput(to_string(variant) + (uses_summary(variant) ? " reads an extracted summary"
                                                                   : " reads the full paper"));
  if (prompt && prompt->questions.empty()) throw InvalidInput("aspect prompt has no questions");

  const auto& templates = templates_of(options);
  TemplateVars vars;
  vars["questions_block"] =
      prompt ? templates.render("review_questions", {{"questions", prompt->numbered()}}) : "";
  const auto name = variant == Variant::SingleS_E0 ? "review_zero_shot" : "review";
  auto request = fitted_request(templates.get("system"), name, vars, templates, profile, options,
                                estimator, [&](std::int64_t budget) {
                                  if (input.summary) return summary_text(*input.paper, *input.summary);
                                  return fit_paper_text(*input.paper, budget, estimator);
                                });
  request.task = "review." + to_string(variant);
  return request;
}

GeneratedReview generate_review(const ReviewInput& input, const AspectPrompt* prompt,
                                Backend& backend, Variant variant,
                                const ReviewGenOptions& options, std::string timestamp) {
  const auto request =
      build_review_request(input, prompt, variant, backend.profile(), options, backend.estimator());
  GeneratedReview out;
  out.paper_id = input.paper_id;
  out.variant = variant;
  if (prompt) out.prompt_used = *prompt;
  out.text = backend.complete(request).text;
  out.backend_tag = backend.profile().name;
  out.timestamp = std::move(timestamp);
  return out;
}

std::string utc_timestamp_now() {
  const auto now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

using ItemKey = std::pair<std::string, int>;

struct Item {
  const Paper* paper = nullptr;
  std::optional<AspectPrompt> prompt;
  ItemKey key() const { return {paper->id, prompt ? prompt->review_index : -1}; }
};

// Drops a trailing partial line left by an interrupted writer.
void repair_log(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return;
  std::string content;
  {
    std::ifstream in(path, std::ios::binary);
    content.assign(std::istreambuf_iterator<char>(in), {});
  }
  if (content.empty() || content.back() == '\n') return;
  const auto cut = content.rfind('\n');
  std::filesystem::resize_file(path, cut == std::string::npos ? 0 : cut + 1);
}

ItemFailure failure_of(const Item& item, const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  return {item.paper->id, item.prompt ? item.prompt->review_index : -1,
          err ? err->kind() : "Error", e.what()};
}

}  // namespace

VariantRun run_variant(const Corpus& corpus, Variant variant, Backend& backend,
                       const VariantConfig& config) {
  VariantRun run;
  std::vector<Item> items;
  for (const auto& [id, paper] : corpus.papers) {
    if (!is_two_stage(variant)) {
      items.push_back({&paper, std::nullopt});
      continue;
    }
    std::vector<AspectPrompt> prompts;
    if (config.prompt_source == PromptSource::Pge) {
      for (auto it = corpus.prompts.lower_bound({id, std::numeric_limits<int>::min()});
           it != corpus.prompts.end() && it->first.paper_id == id; ++it) {
        if (!it->second.excluded && it->second.score == 5) prompts.push_back(it->second);
      }
    } else {
      try {
        prompts = generate_aspect_prompts(paper, config.prompt_backend ? *config.prompt_backend : backend,
                                          config.k_max, config.generation);
      } catch (const Error& e) {
        run.failures.push_back({id, -1, e.kind(), e.what()});
        continue;
      }
    }
    if (config.selection == PromptSelection::First && prompts.size() > 1) {
      prompts.resize(1);
    } else if (config.selection == PromptSelection::Index) {
      const auto i = static_cast<std::size_t>(config.selection_index);
      if (config.selection_index < 0 || i >= prompts.size()) {
        run.failures.push_back({id, config.selection_index, "InvalidInput",
                                "paper has no prompt at index " + std::to_string(i)});
        continue;
      }
      prompts = {prompts[i]};
    }
    for (auto& p : prompts) items.push_back({&paper, std::move(p)});
  }

  std::map<ItemKey, GeneratedReview> done;
  std::ofstream log;
  if (config.output) {
    const auto& path = *config.output;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    repair_log(path);
    if (std::filesystem::exists(path)) {
      for (auto& r : read_generated_jsonl(path)) {
        if (r.variant == variant) done.emplace(ItemKey{r.paper_id, r.prompt_index()}, std::move(r));
      }
    }
    log.open(path, std::ios::binary | std::ios::app);
    if (!log) throw InvalidInput("cannot append to " + path.string());
  }

  std::map<std::string, ExtractedSummary> summaries;
  auto input_for = [&](const Paper& paper) {
    if (!uses_summary(variant)) return ReviewInput::full(paper);
    auto it = summaries.find(paper.id);
    if (it == summaries.end())
      it = summaries.emplace(paper.id, extract_summary(paper, config.summary_budget_tokens,
                                                       backend.estimator())).first;
    return ReviewInput::extracted(paper, it->second);
  };

  std::vector<const Item*> pending;
  for (const auto& item : items) {
    if (done.count(item.key())) {
      ++run.resumed;
    } else {
      pending.push_back(&item);
    }
  }

  const auto batch = std::max<std::size_t>(1, config.concurrency);
  for (std::size_t start = 0; start < pending.size(); start += batch) {
    const auto end = std::min(pending.size(), start + batch);
    std::vector<std::optional<ReviewInput>> inputs(end - start);
    std::vector<std::optional<GeneratedReview>> results(end - start);
    std::vector<std::optional<ItemFailure>> errors(end - start);
    // Inputs are prepared serially so the summary cache is never shared.
    for (std::size_t i = start; i < end; ++i) {
      try {
        inputs[i - start] = input_for(*pending[i]->paper);
      } catch (const Error& e) {
        errors[i - start] = failure_of(*pending[i], e);
      }
    }
    auto work = [&](std::size_t i) {
      if (!inputs[i - start]) return;
      const auto& item = *pending[i];
      try {
        results[i - start] =
            generate_review(*inputs[i - start], item.prompt ? &*item.prompt : nullptr, backend,
                            variant, config.generation,
                            config.clock ? config.clock() : utc_timestamp_now());
      } catch (const Error& e) {
        errors[i - start] = failure_of(item, e);
      }
    };
    if (end - start == 1) {
      work(start);
    } else {
      std::vector<std::thread> threads;
      for (std::size_t i = start; i < end; ++i) threads.emplace_back(work, i);
      for (auto& t : threads) t.join();
    }
    for (std::size_t i = start; i < end; ++i) {
      if (errors[i - start]) run.failures.push_back(*errors[i - start]);
      if (!results[i - start]) continue;
      if (log.is_open()) {
        log << to_json(*results[i - start]).dump() << '\n';
        log.flush();
      }
      done.emplace(pending[i]->key(), std::move(*results[i - start]));
    }
  }

  for (const auto& item : items) {
    if (auto it = done.find(item.key()); it != done.end()) run.outputs.push_back(it->second);
  }
  return run;
}

}  // namespace revgen
