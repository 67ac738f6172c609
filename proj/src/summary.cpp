#include <algorithm>
#include <set>

#include "revgen/error.hpp"
#include "revgen/genreview.hpp"
#include "revgen/text.hpp"

namespace revgen {
namespace {

std::string render_head(const Paper& paper) {
  std::string out = "Title: " + paper.title;
  if (!paper.abstract_text.empty()) out += "\n\nAbstract:\n" + paper.abstract_text;
  return out;
}

std::string render_section(const Section& s, std::string_view body) {
  std::string out = "\n\n";
  if (!s.heading.empty()) out += s.heading + "\n";
  out += body;
  return out;
}

std::string render_references(const Paper& paper) {
  if (paper.references.empty()) return {};
  std::string out = "\n\nReferences:";
  for (const auto& r : paper.references) {
    out += "\n- " + r.title;
    if (!r.venue.empty()) out += ". " + r.venue;
    if (r.year) out += ", " + std::to_string(*r.year);
  }
  return out;
}

// Byte offsets just past each whitespace-delimited word.
std::vector<std::size_t> word_ends(std::string_view s) {
  std::vector<std::size_t> ends;
  bool in_word = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool space = s[i] == ' ' || s[i] == '\n' || s[i] == '\t' || s[i] == '\r';
    if (in_word && space) ends.push_back(i);
    in_word = !space;
  }
  if (in_word) ends.push_back(s.size());
  return ends;
}

}  // namespace

std::string render_paper(const Paper& paper, bool include_references) {
  std::string out = render_head(paper);
  for (const auto& s : paper.sections) out += render_section(s, s.text);
  if (include_references) out += render_references(paper);
  return out;
}

std::string fit_paper_text(const Paper& paper, std::int64_t budget_tokens,
                           const TokenEstimator& estimator) {
  auto fits = [&](const std::string& s) { return estimator(s) <= budget_tokens; };
  if (auto full = render_paper(paper, true); fits(full)) return full;
  if (auto no_refs = render_paper(paper, false); fits(no_refs)) return no_refs;

  std::string kept = render_head(paper);
  if (!fits(kept)) {
    throw ContextOverflow("title and abstract of " + paper.id + " exceed " +
                          std::to_string(budget_tokens) + " tokens");
  }
  for (const auto& s : paper.sections) {
    auto next = kept + render_section(s, s.text);
    if (fits(next)) {
      kept = std::move(next);
      continue;
    }
    // Keep the longest word-boundary prefix of this section that still fits.
    const auto ends = word_ends(s.text);
    std::size_t lo = 0, hi = ends.size();
    while (lo < hi) {
      const auto mid = (lo + hi + 1) / 2;
      if (fits(kept + render_section(s, std::string_view(s.text).substr(0, ends[mid - 1]))))
        lo = mid;
      else
        hi = mid - 1;
    }
    if (lo > 0) kept += render_section(s, std::string_view(s.text).substr(0, ends[lo - 1]));
    break;
  }
  return kept;
}

std::vector<std::string> paper_sentences(const Paper& paper) {
  auto out = text::split_sentences(paper.abstract_text);
  for (const auto& s : paper.sections) {
    for (auto& sentence : text::split_sentences(s.text)) out.push_back(std::move(sentence));
  }
  return out;
}

std::size_t abstract_sentence_count(const Paper& paper) {
  return text::split_sentences(paper.abstract_text).size();
}

std::string ExtractedSummary::text() const { return text::join(sentences, " "); }

ExtractedSummary extract_summary(const Paper& paper, std::int64_t budget_tokens,
                                 const TokenEstimator& estimator) {
  if (budget_tokens <= 0) throw InvalidInput("summary budget must be positive");
  const auto sentences = paper_sentences(paper);
  if (sentences.empty()) throw EmptyPaper("paper " + paper.id + " has no sentences");
  const auto n_abstract = abstract_sentence_count(paper);

  std::vector<std::set<std::string>> vocab(sentences.size());
  std::vector<std::size_t> length(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto tokens = text::tokenize(sentences[i]);
    length[i] = tokens.size();
    vocab[i].insert(tokens.begin(), tokens.end());
  }

  std::vector<bool> chosen(sentences.size(), false);
  std::set<std::string> covered;
  auto fits_with = [&](std::size_t candidate) {
    std::vector<std::string> parts;
    for (std::size_t i = 0; i < sentences.size(); ++i)
      if (chosen[i] || i == candidate) parts.push_back(sentences[i]);
    return estimator(text::join(parts, " ")) <= budget_tokens;
  };
  auto take = [&](std::size_t i) {
    chosen[i] = true;
    covered.insert(vocab[i].begin(), vocab[i].end());
  };

  for (std::size_t i = 0; i < n_abstract; ++i)
    if (fits_with(i)) take(i);

  // Candidates that stop fitting never fit again, so they are dropped for good.
  std::vector<std::size_t> open;
  for (std::size_t i = n_abstract; i < sentences.size(); ++i)
    if (length[i] > 0) open.push_back(i);

  while (!open.empty()) {
    std::vector<std::pair<double, std::size_t>> ranked;
    for (auto i : open) {
      std::size_t novel = 0;
      for (const auto& t : vocab[i]) novel += covered.count(t) ? 0 : 1;
      ranked.emplace_back(static_cast<double>(novel) / static_cast<double>(length[i]), i);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::optional<std::size_t> pick;
    std::set<std::size_t> dropped;
    for (const auto& [ratio, i] : ranked) {
      if (fits_with(i)) {
        pick = i;
        break;
      }
      dropped.insert(i);
    }
    std::erase_if(open, [&](std::size_t i) { return dropped.count(i) || (pick && i == *pick); });
    if (!pick) break;
    take(*pick);
  }

  ExtractedSummary out;
  out.paper_id = paper.id;
  out.budget_tokens = budget_tokens;
  for (std::size_t i = 0; i < sentences.size(); ++i)
    if (chosen[i]) out.sentences.push_back(sentences[i]);
  return out;
}

}  // namespace revgen
