#include <doctest.h>

#include <set>

#include "generators.hpp"
#include "revgen/rng.hpp"
#include "revgen/text.hpp"

using namespace revgen;

TEST_CASE("tokenize folds case and strips edge punctuation") {
  CHECK(text::tokenize("The Model, (clearly) works!") ==
        std::vector<std::string>{"the", "model", "clearly", "works"});
  CHECK(text::tokenize("state-of-the-art e.g. U.S.") ==
        std::vector<std::string>{"state-of-the-art", "e.g", "u.s"});
  CHECK(text::tokenize("  -- ... !! ").empty());
  CHECK(text::tokenize("\xC3\x89T\xC3\x89") == std::vector<std::string>{"\xC3\xA9t\xC3\xA9"});
  // U+00A0 and U+2003 separate words
  CHECK(text::tokenize("a\xC2\xA0" "b\xE2\x80\x83" "c").size() == 3);
}

TEST_CASE("tokenize properties") {
  gen::Source src(11);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = src.noisy(40);
    const auto tokens = text::tokenize(s);
    for (const auto& t : tokens) {
      CHECK_FALSE(t.empty());
      CHECK(t.find(' ') == std::string::npos);
      CHECK(text::to_lower_ascii(t) == t);
    }
    CHECK(text::tokenize(text::join(tokens, " ")) == tokens);
    CHECK(text::word_count(s) == tokens.size());
  }
}

TEST_CASE("utf8 validation") {
  CHECK(text::is_valid_utf8("plain ascii"));
  CHECK(text::is_valid_utf8("caf\xC3\xA9 \xE2\x82\xAC \xF0\x9F\x98\x80"));
  CHECK_FALSE(text::is_valid_utf8("\xC3"));
  CHECK_FALSE(text::is_valid_utf8("\xC0\xAF"));          // overlong
  CHECK_FALSE(text::is_valid_utf8("\xED\xA0\x80"));      // surrogate
  CHECK_FALSE(text::is_valid_utf8("\xF5\x80\x80\x80"));  // beyond U+10FFFF
  CHECK_FALSE(text::is_valid_utf8("\xFF"));
}

TEST_CASE("sentence splitting") {
  CHECK(text::split_sentences("One. Two!  Three?\nFour") ==
        std::vector<std::string>{"One.", "Two!", "Three?", "Four"});
  CHECK(text::split_sentences("e.g.works here. Next") ==
        std::vector<std::string>{"e.g.works here.", "Next"});
  CHECK(text::split_sentences("Heading\n\nBody line\ncontinues.") ==
        std::vector<std::string>{"Heading", "Body line continues."});
  CHECK(text::split_sentences(" \n\n ").empty());
}

TEST_CASE("whitespace and email helpers") {
  CHECK(text::trim("\t a b \n") == "a b");
  CHECK(text::collapse_whitespace(" a \n\n b\tc ") == "a b c");
  CHECK(text::scrub_emails("Contact <jane.doe@uni.edu> or x_y@lab.org now") == "Contact or now");
  CHECK(text::join({"a", "b", "c"}, ", ") == "a, b, c");
}

TEST_CASE("fnv1a64 matches published vectors") {
  CHECK(text::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(text::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(text::fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(text::hex64(255) == "00000000000000ff");
}

TEST_CASE("rng is reproducible and in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng r(5);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto k = r.uniform_index(7);
    REQUIRE(k < 7);
    ++hits[k];
    const double u = r.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int h : hits) CHECK(h > 800);
}

TEST_CASE("rng shuffle is a permutation") {
  Rng r(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> v(static_cast<std::size_t>(trial % 12));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<int>(i);
    r.shuffle(std::span<int>(v));
    std::multiset<int> seen(v.begin(), v.end());
    CHECK(seen.size() == v.size());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(seen.count(static_cast<int>(i)) == 1);
  }
}

TEST_CASE("derive_seed separates keys and bases") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t base : {0ULL, 1ULL, 7ULL}) {
    for (const char* key : {"", "a", "b", "paper-1", "paper-2"}) {
      seen.insert(derive_seed(base, key));
      CHECK(derive_seed(base, key) == derive_seed(base, key));
    }
  }
  CHECK(seen.size() == 15);
}
