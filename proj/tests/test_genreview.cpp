#include <doctest.h>

#include "generators.hpp"
#include "revgen/error.hpp"
#include "revgen/genreview.hpp"
#include "revgen/mock_backends.hpp"
#include "test_support.hpp"

using namespace revgen;

namespace {

Corpus prompted_corpus(gen::Source& src, std::size_t papers, std::size_t reviews_each) {
  Corpus c;
  for (std::size_t i = 0; i < papers; ++i) {
    const auto id = "p" + std::to_string(i);
    std::vector<Review> reviews;
    for (std::size_t r = 0; r < reviews_each; ++r) {
      reviews.push_back(gen::review(id, static_cast<int>(r), src.sentence(8, 16, 12) + "."));
      c.prompts[{id, static_cast<int>(r)}] =
          AspectPrompt{id, static_cast<int>(r), {"What is new about " + id + "?"}, 5, 1, false};
    }
    c.add(gen::paper(id, VenueKind::ICLR, src), reviews);
  }
  return c;
}

std::string fixed_clock() { return "1970-01-01T00:00:00Z"; }

}  // namespace

TEST_CASE("variant names") {
  for (auto v : {Variant::R2, Variant::R2_E, Variant::SingleS, Variant::SingleS_E, Variant::SingleS_E0})
    CHECK(parse_variant(to_string(v)) == v);
  CHECK(parse_variant("singles-e0") == Variant::SingleS_E0);
  CHECK_THROWS_AS(parse_variant("R3"), InvalidInput);
  CHECK(is_two_stage(Variant::R2_E));
  CHECK_FALSE(is_two_stage(Variant::SingleS));
  CHECK(uses_summary(Variant::SingleS_E0));
  CHECK_FALSE(uses_summary(Variant::R2));
}

TEST_CASE("review requests carry the question block only for two-stage variants") {
  gen::Source src(3);
  const auto paper = gen::paper("p", VenueKind::ICLR, src);
  const AspectPrompt prompt{"p", 0, {"Is the loss novel?", "Are baselines fair?"}, 5, 1, false};
  EchoBackend echo(chat_profile_4k());

  const auto two = generate_review(ReviewInput::full(paper), &prompt, echo, Variant::R2, {}, "t");
  CHECK(two.text.find("Questions to address:\n1. Is the loss novel?\n2. Are baselines fair?") !=
        std::string::npos);
  CHECK(two.text.find(render_paper(paper)) != std::string::npos);
  CHECK(two.prompt_index() == 0);
  CHECK(two.backend_tag == "chat-4k");

  const auto one = generate_review(ReviewInput::full(paper), nullptr, echo, Variant::SingleS, {}, "t");
  CHECK(one.text.find("Questions to address") == std::string::npos);
  CHECK(one.prompt_index() == -1);

  const auto summary = extract_summary(paper, 60);
  const auto e0 = generate_review(ReviewInput::extracted(paper, summary), nullptr, echo,
                                  Variant::SingleS_E0, {}, "t");
  CHECK(e0.text.find("Extracted content:\n" + summary.text()) != std::string::npos);
  CHECK(e0.text.find(TemplateSet::builtin().get("review_zero_shot").substr(0, 30)) == 0);

  const auto transcript = echo.transcript();
  REQUIRE(transcript.size() == 3);
  CHECK(transcript[0].request.task == "review.R2");
  CHECK(transcript[2].request.task == "review.SingleS_E0");
}

TEST_CASE("variant and input mismatches are rejected") {
  gen::Source src(3);
  const auto paper = gen::paper("p", VenueKind::ICLR, src);
  const AspectPrompt prompt{"p", 0, {"Q?"}, 5, 1, false};
  const AspectPrompt empty{"p", 0, {}, 5, 1, false};
  const auto profile = chat_profile_4k();
  CHECK_THROWS_AS(build_review_request(ReviewInput::full(paper), nullptr, Variant::R2, profile), InvalidInput);
  CHECK_THROWS_AS(build_review_request(ReviewInput::full(paper), &prompt, Variant::SingleS, profile), InvalidInput);
  CHECK_THROWS_AS(build_review_request(ReviewInput::full(paper), nullptr, Variant::SingleS_E, profile), InvalidInput);
  CHECK_THROWS_AS(build_review_request(ReviewInput::extracted(paper, extract_summary(paper, 50)), nullptr,
                                       Variant::SingleS, profile),
                  InvalidInput);
  CHECK_THROWS_AS(build_review_request(ReviewInput::full(paper), &empty, Variant::R2, profile), InvalidInput);
}

TEST_CASE("long papers are cut to the context budget") {
  gen::Source src(8);
  const auto paper = gen::paper("p", VenueKind::ICLR, src, 2000);
  const auto profile = chat_profile_4k();
  ReviewGenOptions opts;
  const auto req = build_review_request(ReviewInput::full(paper), nullptr, Variant::SingleS, profile, opts);
  CHECK(request_tokens(req) <= prompt_budget(profile, opts.max_output_tokens));
  CHECK(request_tokens(req) > prompt_budget(profile, opts.max_output_tokens) - 50);
}

TEST_CASE("aspect prompts from the prompt stage") {
  gen::Source src(5);
  const auto paper = gen::paper("p", VenueKind::ICLR, src);
  ScriptedBackend scripted(chat_profile_4k(), {"1. A?\n2. B?\n3. C?\n4. D?\n5. E?"});
  const auto prompts = generate_aspect_prompts(paper, scripted, 4);
  REQUIRE(prompts.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(prompts[i].review_index == static_cast<int>(i));
    CHECK(prompts[i].questions.size() == 1);
  }
  CHECK(prompts[3].questions[0] == "D?");
  CHECK(scripted.transcript()[0].request.task == "aspect_prompts");
  CHECK_THROWS_AS(generate_aspect_prompts(paper, scripted, 0), InvalidInput);
}

TEST_CASE("run_variant cardinality") {
  gen::Source src(6);
  auto c = prompted_corpus(src, 4, 3);
  c.prompts[{"p1", 2}].excluded = true;
  SyntheticBackend backend(long_context_profile_32k(), {1, 0.65, 64});
  VariantConfig cfg;
  cfg.clock = fixed_clock;

  CHECK(run_variant(c, Variant::SingleS, backend, cfg).outputs.size() == 4);
  CHECK(run_variant(c, Variant::SingleS_E0, backend, cfg).outputs.size() == 4);
  const auto r2 = run_variant(c, Variant::R2, backend, cfg);
  CHECK(r2.outputs.size() == 11);
  CHECK(r2.failures.empty());
  for (const auto& o : r2.outputs) CHECK(o.prompt_used.has_value());
  CHECK(run_variant(c, Variant::R2_E, backend, cfg).outputs.size() == 11);

  cfg.selection = PromptSelection::First;
  CHECK(run_variant(c, Variant::R2, backend, cfg).outputs.size() == 4);
  cfg.selection = PromptSelection::Index;
  cfg.selection_index = 2;
  const auto indexed = run_variant(c, Variant::R2, backend, cfg);
  CHECK(indexed.outputs.size() == 3);
  CHECK(indexed.failures.size() == 1);

  cfg.selection = PromptSelection::All;
  cfg.prompt_source = PromptSource::Generated;
  cfg.k_max = 2;
  const auto generated = run_variant(c, Variant::R2, backend, cfg);
  CHECK(generated.outputs.size() == 8);
}

TEST_CASE("run_variant is deterministic across concurrency") {
  gen::Source src(7);
  const auto c = prompted_corpus(src, 5, 2);
  VariantConfig cfg;
  cfg.clock = fixed_clock;
  SyntheticBackend a(long_context_profile_32k(), {2, 0.65, 64});
  const auto serial = run_variant(c, Variant::R2, a, cfg);
  cfg.concurrency = 4;
  SyntheticBackend b(long_context_profile_32k(), {2, 0.65, 64});
  const auto parallel = run_variant(c, Variant::R2, b, cfg);
  CHECK(serial.outputs == parallel.outputs);
}

TEST_CASE("run_variant resumes from its log") {
  gen::Source src(9);
  const auto c = prompted_corpus(src, 3, 2);
  support::TempDir dir("resume");
  const auto log = dir / "out" / "R2.jsonl";
  VariantConfig cfg;
  cfg.clock = fixed_clock;
  cfg.output = log;
  SyntheticBackend first(long_context_profile_32k(), {4, 0.65, 64});
  const auto full = run_variant(c, Variant::R2, first, cfg);
  CHECK(full.outputs.size() == 6);
  const auto complete_log = support::slurp(log);

  // Keep two whole lines plus a torn third one.
  std::size_t cut = 0;
  for (int i = 0; i < 2; ++i) cut = complete_log.find('\n', cut) + 1;
  support::spit(log, complete_log.substr(0, cut) + complete_log.substr(cut, 15));
  SyntheticBackend second(long_context_profile_32k(), {4, 0.65, 64});
  const auto resumed = run_variant(c, Variant::R2, second, cfg);
  CHECK(resumed.resumed == 2);
  CHECK(second.call_count() == 4);
  CHECK(resumed.outputs == full.outputs);
  CHECK(support::slurp(log) == complete_log);

  SyntheticBackend third(long_context_profile_32k(), {4, 0.65, 64});
  const auto noop = run_variant(c, Variant::R2, third, cfg);
  CHECK(noop.resumed == 6);
  CHECK(third.call_count() == 0);
}

TEST_CASE("per-item failures are collected") {
  gen::Source src(10);
  const auto c = prompted_corpus(src, 3, 1);
  ScriptedBackend b(long_context_profile_32k(), {"only one reply"});
  VariantConfig cfg;
  cfg.clock = fixed_clock;
  const auto run = run_variant(c, Variant::SingleS, b, cfg);
  CHECK(run.outputs.size() == 1);
  REQUIRE(run.failures.size() == 2);
  CHECK(run.failures[0].error_kind == "BackendRefusal");
}

TEST_CASE("generated review JSON") {
  GeneratedReview r{"p", Variant::R2, AspectPrompt{"p", 1, {"Q?"}, 5, 2, false}, "text", "tag", "ts"};
  const auto j = to_json(r);
  CHECK(j["prompt_index"] == 1);
  CHECK(generated_review_from_json(j) == r);
  auto bad = j;
  bad["prompt_used"] = nullptr;
  CHECK_THROWS_AS(generated_review_from_json(bad), MalformedRecord);
  CHECK_THROWS_AS(read_generated_jsonl("/no/such/file.jsonl"), MissingOutputs);
  CHECK(utc_timestamp_now().size() == 20);
}
