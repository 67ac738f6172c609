#pragma once

// Hand-rolled random generators for property tests.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "revgen/corpus.hpp"

namespace gen {

class Source {
 public:
  explicit Source(std::uint64_t seed) : engine_(seed) {}

  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  bool coin() { return below(2) == 1; }

  std::string word(std::size_t vocabulary = 6) {
    static const char* const words[] = {"model", "data", "the", "results", "method", "paper",
                                        "novel", "graph", "loss", "unclear", "strong", "weak"};
    return words[below(std::min<std::size_t>(vocabulary, 12))];
  }

  std::string sentence(std::size_t min_words, std::size_t max_words, std::size_t vocabulary = 6) {
    std::string out;
    const auto n = between(min_words, max_words);
    for (std::size_t i = 0; i < n; ++i) out += (i ? " " : "") + word(vocabulary);
    return out;
  }

  // Arbitrary bytes biased toward text that exercises the score parser.
  std::string noisy(std::size_t max_len) {
    static const std::vector<std::string> pieces{
        "score", "Score", "SCORE", "Score:", "scores", "scored", " ", "\n", ":", "1", "2", "3",
        "4", "5", "6", "0", "10", "42", "07", ".", ",", "of", "a", "is", "the answer", "-",
        "é", "score5", "5score", "\t", "/5", "(", ")", "**"};
    std::string out;
    const auto n = below(max_len + 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (below(8) == 0) {
        out.push_back(static_cast<char>(below(256)));
      } else {
        out += pieces[below(pieces.size())];
      }
    }
    return out;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// A minimal paper with `sentences` sentences spread over two sections.
inline revgen::Paper paper(const std::string& id, revgen::VenueKind venue, Source& src,
                           std::size_t sentences = 6) {
  revgen::Paper p;
  p.id = id;
  p.venue = revgen::Venue{venue, {}};
  p.title = "Paper " + id;
  p.abstract_text = "We study " + src.sentence(3, 6, 12) + ".";
  std::string a, b;
  for (std::size_t i = 0; i < sentences; ++i) {
    auto& target = i % 2 ? b : a;
    target += (target.empty() ? "" : " ") + src.sentence(4, 10, 12) + ".";
  }
  p.sections = {{"Method", a}, {"Results", b}};
  p.metadata.id = id;
  p.metadata.title = p.title;
  return p;
}

inline revgen::Review review(const std::string& paper_id, int index, std::string text) {
  revgen::Review r;
  r.paper_id = paper_id;
  r.review_index = index;
  r.components = {{"", std::move(text)}};
  return r;
}

}  // namespace gen
