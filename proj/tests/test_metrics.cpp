#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "oracles.hpp"
#include "revgen/error.hpp"
#include "revgen/metrics.hpp"
#include "revgen/mock_backends.hpp"
#include "revgen/text.hpp"

using namespace revgen;

namespace {

struct Fixture {
  std::string candidate;
  std::vector<std::string> references;
};

Fixture random_fixture(gen::Source& src) {
  Fixture f;
  f.candidate = src.sentence(0, 10, 5);
  const auto n = src.between(1, 3);
  for (std::size_t i = 0; i < n; ++i) f.references.push_back(src.sentence(0, 10, 5));
  if (src.below(4) == 0) f.references.push_back(f.candidate);
  return f;
}

double oracle_max(const Fixture& f, const std::function<double(const oracle::Words&, const oracle::Words&)>& m) {
  double best = 0.0;
  for (const auto& r : f.references) best = std::max(best, m(oracle::words(f.candidate), oracle::words(r)));
  return best;
}

}  // namespace

TEST_CASE("bleu and rouge agree with brute-force counting") {
  gen::Source src(2024);
  for (int trial = 0; trial < 400; ++trial) {
    const auto f = random_fixture(src);
    CHECK(std::abs(bleu_max(f.candidate, f.references) - oracle_max(f, oracle::bleu)) < 1e-9);
    CHECK(std::abs(rouge_max(f.candidate, f.references, RougeVariant::R1) -
                   oracle_max(f, [](auto& a, auto& b) { return oracle::rouge_n(a, b, 1); })) < 1e-9);
    CHECK(std::abs(rouge_max(f.candidate, f.references, RougeVariant::R2) -
                   oracle_max(f, [](auto& a, auto& b) { return oracle::rouge_n(a, b, 2); })) < 1e-9);
    CHECK(std::abs(rouge_max(f.candidate, f.references, RougeVariant::RL) -
                   oracle_max(f, oracle::rouge_l)) < 1e-9);
  }
}

TEST_CASE("lcs agrees with subsequence enumeration") {
  gen::Source src(8);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = oracle::words(src.sentence(0, 10, 4));
    const auto b = oracle::words(src.sentence(0, 10, 4));
    CHECK(lcs_length(a, b) == oracle::lcs(a, b));
    CHECK(lcs_length(a, b) == lcs_length(b, a));
  }
}

TEST_CASE("known metric values") {
  const Tokens t{"the", "cat", "sat", "on", "the", "mat"};
  CHECK(sentence_bleu(t, t) == doctest::Approx(1.0));
  CHECK(rouge(t, t, RougeVariant::R2) == doctest::Approx(1.0));
  CHECK(sentence_bleu({}, t) == 0.0);
  CHECK(sentence_bleu({"dog"}, t) == 0.0);
  CHECK(rouge({"cat"}, {"cat"}, RougeVariant::R2) == 1.0);
  CHECK(rouge({"cat"}, {"dog"}, RougeVariant::R2) == 0.0);
  // two of three unigrams match on each side
  CHECK(rouge({"a", "b", "c"}, {"a", "b", "d"}, RougeVariant::R1) == doctest::Approx(2.0 / 3.0));
  CHECK(rouge({"a", "b", "c", "d"}, {"a", "c", "d"}, RougeVariant::RL) == doctest::Approx(6.0 / 7.0));
  CHECK(to_string(RougeVariant::RL) == "rougeL");
  CHECK_THROWS_AS(bleu_max("x", std::vector<std::string>{}), InvalidInput);
  CHECK_THROWS_AS(rouge_max("x", std::vector<std::string>{}, RougeVariant::R1), InvalidInput);
}

TEST_CASE("metric ranges, symmetry and max-over-references monotonicity") {
  gen::Source src(77);
  HashedBowCosine bow;
  ExactMatchSimilarity exact;
  for (int trial = 0; trial < 200; ++trial) {
    auto f = random_fixture(src);
    const double b = bleu_max(f.candidate, f.references);
    const double r1 = rouge_max(f.candidate, f.references, RougeVariant::R1);
    const double rl = rouge_max(f.candidate, f.references, RougeVariant::RL);
    for (double v : {b, r1, rl}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-12);
    }
    const auto& other = f.references[0];
    CHECK(rouge(text::tokenize(f.candidate), text::tokenize(other), RougeVariant::R1) ==
          doctest::Approx(rouge(text::tokenize(other), text::tokenize(f.candidate), RougeVariant::R1)));
    CHECK(bow(f.candidate, other) == doctest::Approx(bow(other, f.candidate)));
    CHECK(exact(f.candidate, other) == exact(other, f.candidate));

    const double sm = sim_max(f.candidate, f.references, bow);
    f.references.push_back(src.sentence(0, 10, 5));
    CHECK(bleu_max(f.candidate, f.references) >= b);
    CHECK(rouge_max(f.candidate, f.references, RougeVariant::R1) >= r1);
    CHECK(rouge_max(f.candidate, f.references, RougeVariant::RL) >= rl);
    CHECK(sim_max(f.candidate, f.references, bow) >= sm);
  }
}

TEST_CASE("hashed cosine matches plain count cosine") {
  gen::Source src(13);
  HashedBowCosine bow;
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = src.sentence(0, 15, 12), b = src.sentence(0, 15, 12);
    CHECK(std::abs(bow(a, b) - oracle::count_cosine(oracle::words(a), oracle::words(b))) < 1e-9);
  }
  CHECK(bow("", "x") == 0.0);
  CHECK(bow("Same words.", "same WORDS") == doctest::Approx(1.0));
}

TEST_CASE("exact match oracle") {
  ExactMatchSimilarity exact;
  CHECK(exact("The model, works.", "the model works") == 1.0);
  CHECK(exact("the model works", "the model fails") == 0.0);
  CHECK(exact.name() == "exact_match_oracle");
}

TEST_CASE("embedding similarities") {
  SyntheticBackend embedder({"emb", 8192, true}, {1, 0.65, 256});
  auto doc = make_similarity(SimilarityKind::EmbeddingCosine, &embedder);
  auto tok = make_similarity(SimilarityKind::TokenGreedyF1, &embedder);
  gen::Source src(4);
  for (int trial = 0; trial < 60; ++trial) {
    const auto a = src.sentence(1, 12, 12), b = src.sentence(1, 12, 12);
    for (const auto* s : {doc.get(), tok.get()}) {
      const double v = (*s)(a, b);
      CHECK(v >= -1.0);
      CHECK(v <= 1.0 + 1e-9);
      CHECK(v == doctest::Approx((*s)(b, a)));
      CHECK((*s)(a, a) == doctest::Approx(1.0));
    }
  }
  CHECK((*tok)("", "x") == 0.0);
  EchoBackend no_embeddings(chat_profile_4k());
  auto broken = make_similarity(SimilarityKind::EmbeddingCosine, &no_embeddings);
  CHECK_THROWS_AS((*broken)("a", "b"), UnsupportedOperation);
  CHECK_THROWS_AS(make_similarity(SimilarityKind::TokenGreedyF1), ConfigError);
  CHECK(parse_similarity_kind("token_greedy_f1") == SimilarityKind::TokenGreedyF1);
  CHECK_THROWS(parse_similarity_kind("bertscore-large"));
}
