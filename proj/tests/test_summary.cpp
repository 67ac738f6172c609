#include <doctest.h>

#include <set>

#include "generators.hpp"
#include "revgen/error.hpp"
#include "revgen/genreview.hpp"
#include "revgen/text.hpp"

using namespace revgen;

namespace {

// Step-by-step replay of the greedy selection. Every step scans all remaining
// sentences; nothing is cached between steps.
std::vector<std::size_t> greedy_oracle(const Paper& paper, std::int64_t budget) {
  const auto sentences = paper_sentences(paper);
  const auto n_abstract = abstract_sentence_count(paper);
  std::vector<bool> chosen(sentences.size(), false);
  auto cost_with = [&](std::size_t extra) {
    std::string joined;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      if (!chosen[i] && i != extra) continue;
      if (!joined.empty()) joined += ' ';
      joined += sentences[i];
    }
    return estimate_tokens(joined);
  };
  for (std::size_t i = 0; i < n_abstract; ++i)
    if (cost_with(i) <= budget) chosen[i] = true;

  for (;;) {
    std::set<std::string> covered;
    for (std::size_t i = 0; i < sentences.size(); ++i)
      if (chosen[i])
        for (const auto& t : text::tokenize(sentences[i])) covered.insert(t);
    std::optional<std::size_t> best;
    std::size_t best_novel = 0, best_len = 1;
    for (std::size_t i = n_abstract; i < sentences.size(); ++i) {
      if (chosen[i]) continue;
      const auto tokens = text::tokenize(sentences[i]);
      if (tokens.empty() || cost_with(i) > budget) continue;
      std::set<std::string> distinct(tokens.begin(), tokens.end());
      std::size_t novel = 0;
      for (const auto& t : distinct) novel += covered.count(t) ? 0 : 1;
      // novel / len > best_novel / best_len, compared exactly
      if (!best || novel * best_len > best_novel * tokens.size()) {
        best = i;
        best_novel = novel;
        best_len = tokens.size();
      }
    }
    if (!best) break;
    chosen[*best] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sentences.size(); ++i)
    if (chosen[i]) out.push_back(i);
  return out;
}

}  // namespace

TEST_CASE("paper rendering") {
  Paper p;
  p.id = "x";
  p.title = "T";
  p.abstract_text = "A.";
  p.sections = {{"1 Intro", "Body."}, {"", "Tail."}};
  p.references = {{"Ref", {}, "Venue", 2020, "", ""}};
  CHECK(render_paper(p) == "Title: T\n\nAbstract:\nA.\n\n1 Intro\nBody.\n\nTail.\n\nReferences:\n- Ref. Venue, 2020");
  CHECK(render_paper(p, false) == "Title: T\n\nAbstract:\nA.\n\n1 Intro\nBody.\n\nTail.");
}

TEST_CASE("paper text is cut to the budget") {
  gen::Source src(4);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = gen::paper("p", VenueKind::ICLR, src, src.between(2, 40));
    p.references = {{"Some reference title", {}, "Venue", 2020, "", ""}};
    const auto full = render_paper(p);
    const auto head_tokens = estimate_tokens("Title: " + p.title + "\n\nAbstract:\n" + p.abstract_text);
    const auto budget = static_cast<std::int64_t>(src.between(1, static_cast<std::size_t>(estimate_tokens(full)) + 10));
    if (budget < head_tokens) {
      CHECK_THROWS_AS(fit_paper_text(p, budget), ContextOverflow);
      continue;
    }
    const auto fitted = fit_paper_text(p, budget);
    CHECK(estimate_tokens(fitted) <= budget);
    CHECK(full.rfind(fitted, 0) == 0);  // always a prefix of the full rendering
    if (estimate_tokens(full) <= budget) CHECK(fitted == full);
    // never cuts inside a word
    if (fitted.size() < full.size()) {
      const char next = full[fitted.size()];
      CHECK((next == ' ' || next == '\n'));
    }
  }
}

TEST_CASE("extractive summary follows the greedy rule") {
  gen::Source src(31);
  for (int trial = 0; trial < 120; ++trial) {
    const auto p = gen::paper("p", VenueKind::ICLR, src, src.between(1, 25));
    const auto budget = static_cast<std::int64_t>(src.between(5, 300));
    const auto summary = extract_summary(p, budget);
    const auto expected = greedy_oracle(p, budget);
    const auto sentences = paper_sentences(p);
    std::vector<std::string> want;
    for (auto i : expected) want.push_back(sentences[i]);
    CHECK(summary.sentences == want);
    CHECK(estimate_tokens(summary.text()) <= budget);
    CHECK(summary.budget_tokens == budget);
  }
}

TEST_CASE("summary budget and input errors") {
  gen::Source src(1);
  auto p = gen::paper("p", VenueKind::ICLR, src);
  CHECK_THROWS_AS(extract_summary(p, 0), InvalidInput);
  const auto everything = extract_summary(p, 100000);
  CHECK(everything.sentences == paper_sentences(p));
  p.abstract_text.clear();
  p.sections.clear();
  CHECK_THROWS_AS(extract_summary(p, 100), EmptyPaper);
}

TEST_CASE("abstract sentences are seeded first") {
  Paper p;
  p.id = "p";
  p.title = "T";
  p.abstract_text = "Alpha beta. Gamma delta.";
  p.sections = {{"S", "Completely unrelated words appear here. Alpha beta again."}};
  const auto s = extract_summary(p, 12);
  REQUIRE(s.sentences.size() >= 2);
  CHECK(s.sentences[0] == "Alpha beta.");
  CHECK(s.sentences[1] == "Gamma delta.");
}
