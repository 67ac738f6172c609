#include <doctest.h>

#include <set>
#include <sstream>

#include "generators.hpp"
#include "revgen/error.hpp"
#include "revgen/mock_backends.hpp"
#include "revgen/pge.hpp"
#include "test_support.hpp"

using namespace revgen;

namespace {

PoolEntry entry(std::vector<std::string> questions, std::string review) {
  AspectPrompt p;
  p.questions = std::move(questions);
  p.score = 5;
  return {p, std::move(review)};
}

Corpus single_review_corpus(const std::string& text = "The method is new. The experiments are thin.") {
  Corpus c;
  gen::Source src(1);
  c.add(gen::paper("p", VenueKind::ICLR, src), {gen::review("p", 0, text)});
  return c;
}

// Independent rendering of the generation prompt for a given example order.
std::string render_generation(const std::string& review, const std::vector<PoolEntry>& entries,
                              const std::vector<std::size_t>& order) {
  const auto& t = TemplateSet::builtin();
  std::string examples;
  for (auto i : order) {
    std::string numbered;
    for (std::size_t q = 0; q < entries[i].prompt.questions.size(); ++q)
      numbered += (q ? "\n" : "") + std::to_string(q + 1) + ". " + entries[i].prompt.questions[q];
    examples += t.render("pge_generation_example",
                         {{"review", entries[i].review_text}, {"questions", numbered}}) + "\n\n";
  }
  return t.render("pge_generation", {{"examples", examples}, {"review", review}});
}

}  // namespace

TEST_CASE("pool accepts only score-5 entries") {
  ExamplePool pool({entry({"q"}, "seed review")});
  CHECK(pool.size() == 1);
  CHECK(pool.seed_count() == 1);
  CHECK(pool.at(0).prompt.score == 5);
  auto low = entry({"q"}, "r");
  low.prompt.score = 4;
  CHECK_THROWS_AS(pool.append(low), InvalidInput);
  pool.append(entry({"q2"}, "r2"));
  CHECK(pool.size() == 2);
  CHECK(pool.seed_count() == 1);
  ExamplePool copy = pool;
  CHECK(copy.snapshot().size() == 2);
}

TEST_CASE("seed pool file") {
  const auto pool = ExamplePool::load_seed_jsonl(support::fixtures() / "seed_pool.jsonl");
  CHECK(pool.size() == 5);
  CHECK(pool.seed_count() == 5);
  for (const auto& e : pool.snapshot()) {
    CHECK_FALSE(e.prompt.questions.empty());
    CHECK_FALSE(e.review_text.empty());
  }
  std::ostringstream out;
  pool.write_jsonl(out);
  const auto written = out.str();
  CHECK(std::count(written.begin(), written.end(), '\n') == 5);
}

TEST_CASE("rubric") {
  const auto& r = Rubric::standard();
  CHECK_NOTHROW(r.validate());
  for (int s = 1; s <= 5; ++s) CHECK(r.examples[static_cast<std::size_t>(s - 1)].score == s);
  CHECK(r.scale_text().rfind("1: ", 0) == 0);
  CHECK(r.scale_text().find("\n5: ") != std::string::npos);
  Rubric broken = r;
  std::swap(broken.examples[0], broken.examples[1]);
  CHECK_THROWS_AS(broken.validate(), InvalidInput);
}

TEST_CASE("evaluation request lists the rubric examples in ascending order") {
  const auto req = build_evaluation_request({"Is it new?"}, "It is new.", Rubric::standard());
  const auto& body = req.last_user_content();
  CHECK(req.task == "pge.evaluate");
  CHECK(req.temperature == 0.0);
  std::size_t last = 0;
  for (int s = 1; s <= 5; ++s) {
    const auto at = body.find("Score: " + std::to_string(s));
    REQUIRE(at != std::string::npos);
    CHECK(at > last);
    last = at;
  }
  CHECK(body.size() >= 12);
  CHECK(body.substr(body.size() - 11) == "Assessment:");
  CHECK(body.find("1. Is it new?\nAnswer:\nIt is new.") != std::string::npos);
  CHECK_THROWS_AS(build_evaluation_request({}, "x", Rubric::standard()), InvalidInput);
}

TEST_CASE("prompt output parsing") {
  CHECK(parse_prompt_output("Here you go:\n1. First?\n2) Second?\n  10. Tenth?\nnot numbered\n3.") ==
        std::vector<std::string>{"First?", "Second?", "Tenth?"});
  CHECK_THROWS_AS(parse_prompt_output("no list here"), NoQuestionsFound);
  CHECK_THROWS_AS(parse_prompt_output(""), NoQuestionsFound);
}

TEST_CASE("score parsing") {
  CHECK(parse_evaluation_output("Good.\nScore: 5").score == 5);
  CHECK(parse_evaluation_output("Good.\nScore: 5").explanation == "Good.");
  // Last integer in range after the final token, so a fraction yields its denominator.
  CHECK(parse_evaluation_output("score 2 ... Final SCORE: 4/5").score == 5);
  CHECK(parse_evaluation_output("score 2 ... Final SCORE: 4").score == 4);
  CHECK(parse_evaluation_output("Score: 05").score == 5);
  CHECK(parse_evaluation_output("Score: 4 out of 5").score == 5);
  CHECK(parse_evaluation_output("Score: 3 (not 9)").score == 3);
  CHECK_THROWS_AS(parse_evaluation_output("Score: 7"), ScoreNotFound);
  CHECK_THROWS_AS(parse_evaluation_output("scores 5"), ScoreNotFound);
  CHECK_THROWS_AS(parse_evaluation_output("5 is the score"), ScoreNotFound);
  CHECK_THROWS_AS(parse_evaluation_output(""), ScoreNotFound);
  const auto& worked = Rubric::standard().examples[2].assessment;
  CHECK(parse_evaluation_output(worked).score == 3);
}

TEST_CASE("score parsing fuzz") {
  gen::Source src(99);
  for (int i = 0; i < 2000; ++i) {
    const auto s = src.noisy(25);
    try {
      const auto r = parse_evaluation_output(s);
      CHECK(r.score >= 1);
      CHECK(r.score <= 5);
    } catch (const ScoreNotFound&) {
    }
  }
}

TEST_CASE("generation request packs examples until the next one overflows") {
  gen::Source src(5);
  for (int trial = 0; trial < 150; ++trial) {
    std::vector<PoolEntry> entries;
    const auto n = src.below(25);
    for (std::size_t i = 0; i < n; ++i)
      entries.push_back(entry({src.sentence(3, 8) + "?", src.sentence(3, 8) + "?"},
                              src.sentence(5, 5 + src.below(150))));
    ExamplePool pool(entries);
    const BackendProfile profile{"p", static_cast<std::int64_t>(src.between(300, 6000)), false};
    PromptCallOptions opts;
    opts.max_output_tokens = static_cast<int>(src.between(16, 256));
    const auto review = src.sentence(5, 5 + src.below(400));
    const auto budget = prompt_budget(profile, opts.max_output_tokens);
    Rng rng(src.below(1 << 20));

    auto tokens_for = [&](const std::vector<std::size_t>& order) {
      ChatRequest r;
      r.system = TemplateSet::builtin().get("system");
      r.turns = {{Role::User, render_generation(review, entries, order)}};
      return estimate_tokens(render_llama2(r));
    };

    if (tokens_for({}) > budget) {
      CHECK_THROWS_AS(build_generation_request(review, pool, profile, rng, opts), ContextOverflow);
      continue;
    }
    const auto g = build_generation_request(review, pool, profile, rng, opts);
    CHECK(g.request.task == "pge.generate");
    CHECK(g.request.last_user_content() == render_generation(review, entries, g.example_indices));
    CHECK(request_tokens(g.request) <= budget);
    std::set<std::size_t> distinct(g.example_indices.begin(), g.example_indices.end());
    CHECK(distinct.size() == g.example_indices.size());
    if (g.rejected_index) {
      CHECK(distinct.count(*g.rejected_index) == 0);
      auto more = g.example_indices;
      more.push_back(*g.rejected_index);
      CHECK(tokens_for(more) > budget);
    } else {
      CHECK(g.example_indices.size() == entries.size());
    }
  }
}

TEST_CASE("scripted scores 3, 4, 5 store the prompt on the third attempt") {
  ScriptedBackend b(chat_profile_4k(),
                    {"1. A?", "Score: 3", "1. B?", "Score: 4", "1. C?\n2. D?", "Fine.\nScore: 5"});
  ExamplePool pool;
  const auto r = run_pge(single_review_corpus(), b, pool);
  const auto& prompt = r.corpus.prompts.at({"p", 0});
  CHECK(prompt.attempts == 3);
  CHECK(prompt.score == 5);
  CHECK_FALSE(prompt.excluded);
  CHECK(prompt.questions == std::vector<std::string>{"C?", "D?"});
  CHECK(pool.size() == 1);
  CHECK(r.stats.stored_count == 1);
  CHECK(r.stats.attempts_histogram.at(3) == 1);
  CHECK(b.remaining() == 0);
  REQUIRE(r.trace.size() == 3);
  CHECK(r.trace[0].outcome == AttemptOutcome::LowScore);
  CHECK(r.trace[2].outcome == AttemptOutcome::Accepted);
}

TEST_CASE("five low scores exclude the review") {
  std::vector<std::string> script;
  for (int i = 0; i < 5; ++i) {
    script.push_back("1. Q" + std::to_string(i) + "?");
    script.push_back("Score: 1");
  }
  script.push_back("1. never used?");
  ScriptedBackend b(chat_profile_4k(), script);
  ExamplePool pool;
  const auto r = run_pge(single_review_corpus(), b, pool);
  const auto& prompt = r.corpus.prompts.at({"p", 0});
  CHECK(prompt.excluded);
  CHECK(prompt.attempts == 5);
  CHECK(prompt.score == 1);
  CHECK(pool.size() == 0);
  CHECK(b.transcript().size() == 10);
  CHECK(r.stats.excluded_count == 1);
  CHECK(r.stats.fraction_stored_within(5) == 0.0);
}

TEST_CASE("unparsable and repeated outputs consume attempts") {
  ScriptedBackend b(chat_profile_4k(),
                    {"no questions", "1. A?", "Score: 2", "1. A?", "1. B?", "no score here", "1. C?",
                     "Score: 5"});
  ExamplePool pool;
  const auto r = run_pge(single_review_corpus(), b, pool);
  REQUIRE(r.trace.size() == 5);
  CHECK(r.trace[0].outcome == AttemptOutcome::NoQuestions);
  CHECK(r.trace[1].outcome == AttemptOutcome::LowScore);
  CHECK(r.trace[2].outcome == AttemptOutcome::Duplicate);
  CHECK(r.trace[3].outcome == AttemptOutcome::NoScore);
  CHECK(r.trace[4].outcome == AttemptOutcome::Accepted);
  CHECK(r.corpus.prompts.at({"p", 0}).attempts == 5);
}

TEST_CASE("a review that cannot fit is excluded without backend calls") {
  ScriptedBackend b({"tiny", 300, false}, {});
  ExamplePool pool;
  const auto r = run_pge(single_review_corpus(std::string(4000, 'w') + "."), b, pool);
  CHECK(r.corpus.prompts.at({"p", 0}).excluded);
  CHECK(b.transcript().empty());
  for (const auto& t : r.trace) CHECK(t.outcome == AttemptOutcome::Overflow);
}

TEST_CASE("meta-reviews and existing prompts are skipped") {
  Corpus c;
  gen::Source src(2);
  auto meta = gen::review("p", 1, "Meta decision.");
  meta.is_meta = true;
  c.add(gen::paper("p", VenueKind::ICLR, src),
        {gen::review("p", 0, "First review."), meta, gen::review("p", 2, "Third review.")});
  c.prompts[{"p", 2}] = AspectPrompt{"p", 2, {"Existing?"}, 5, 1, false};
  ScriptedBackend b(chat_profile_4k(), {"1. Q?", "Score: 5"});
  ExamplePool pool;
  const auto r = run_pge(c, b, pool);
  CHECK(r.stats.skipped_count == 1);
  CHECK(r.stats.stored_count == 1);
  CHECK(r.corpus.prompts.size() == 2);
  CHECK(r.corpus.prompts.count({"p", 1}) == 0);
}

TEST_CASE("pool grows monotonically and runs replay exactly") {
  Corpus c;
  gen::Source src(17);
  for (int i = 0; i < 20; ++i) {
    const auto id = "p" + std::to_string(i);
    std::vector<Review> reviews;
    for (int r = 0; r < 2; ++r)
      reviews.push_back(gen::review(id, r, src.sentence(10, 30, 12) + ". " + src.sentence(10, 30, 12) + "."));
    c.add(gen::paper(id, VenueKind::ICLR, src), reviews);
  }
  auto run = [&] {
    SyntheticBackend b(chat_profile_4k(), {7, 0.65, 64});
    ExamplePool pool(ExamplePool::load_seed_jsonl(support::fixtures() / "seed_pool.jsonl"));
    PgeConfig cfg;
    cfg.rng_seed = 7;
    return run_pge(c, b, pool, cfg);
  };
  const auto a = run();
  REQUIRE(a.pool_size_history.size() == 40);
  for (std::size_t i = 1; i < a.pool_size_history.size(); ++i)
    CHECK(a.pool_size_history[i] >= a.pool_size_history[i - 1]);
  CHECK(a.stats.stored_count + a.stats.excluded_count == 40);
  CHECK(a.stats.pool_size == 5 + a.stats.stored_count);
  const auto b = run();
  CHECK(b.corpus == a.corpus);
  CHECK(b.pool_size_history == a.pool_size_history);
  CHECK(a.stats.to_json() == b.stats.to_json());
}

TEST_CASE("concurrent runs store every review") {
  Corpus c;
  gen::Source src(23);
  for (int i = 0; i < 12; ++i) {
    const auto id = "q" + std::to_string(i);
    c.add(gen::paper(id, VenueKind::NeurIPS, src), {gen::review(id, 0, src.sentence(10, 20, 12) + ".")});
  }
  SyntheticBackend b(chat_profile_4k(), {3, 1.0, 64});
  ExamplePool pool;
  PgeConfig cfg;
  cfg.concurrency = 4;
  const auto r = run_pge(c, b, pool, cfg);
  CHECK(r.stats.stored_count == 12);
  CHECK(pool.size() == 12);
  CHECK(r.corpus.prompts.size() == 12);
}
