#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>

#include "revgen/corpus.hpp"
#include "revgen/text.hpp"

namespace revgen {
namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double StatsRow::words_per_paper_mean() const { return ratio(paper_words, paper_count); }
double StatsRow::words_per_review_mean() const { return ratio(review_words, review_count); }
double StatsRow::words_per_prompt_mean() const { return ratio(prompt_words, prompt_count); }
double StatsRow::accept_fraction() const { return ratio(accepted_count, paper_count); }

StatsRow& StatsRow::operator+=(const StatsRow& o) {
  paper_count += o.paper_count;
  paper_words += o.paper_words;
  review_count += o.review_count;
  review_words += o.review_words;
  prompt_count += o.prompt_count;
  prompt_words += o.prompt_words;
  accepted_count += o.accepted_count;
  return *this;
}

StatsTable compute_stats(const Corpus& corpus) {
  StatsTable table;
  for (const auto& [id, paper] : corpus.papers) {
    StatsRow row;
    row.paper_count = 1;
    row.paper_words = paper.word_count();
    row.accepted_count = paper.metadata.decision == Decision::Accept ? 1 : 0;
    for (const auto& review : corpus.reviews_of(id)) {
      if (review.is_meta) continue;
      ++row.review_count;
      row.review_words += text::word_count(review_text(review));
      auto p = corpus.prompts.find({id, review.review_index});
      if (p != corpus.prompts.end() && !p->second.excluded && p->second.score == 5) {
        ++row.prompt_count;
        for (const auto& q : p->second.questions) row.prompt_words += text::word_count(q);
      }
    }
    table.venues[paper.venue] += row;
    table.total += row;
  }
  return table;
}

nlohmann::json stats_to_json(const StatsTable& table) {
  auto row_json = [](const StatsRow& r) {
    return nlohmann::json{{"paper_count", r.paper_count},
                          {"paper_words", r.paper_words},
                          {"words_per_paper_mean", r.words_per_paper_mean()},
                          {"review_count", r.review_count},
                          {"review_words", r.review_words},
                          {"words_per_review_mean", r.words_per_review_mean()},
                          {"prompt_count", r.prompt_count},
                          {"prompt_words", r.prompt_words},
                          {"words_per_prompt_mean", r.words_per_prompt_mean()},
                          {"accepted_count", r.accepted_count},
                          {"accept_fraction", r.accept_fraction()}};
  };
  nlohmann::json venues = nlohmann::json::object();
  for (const auto& [venue, row] : table.venues) venues[venue.name()] = row_json(row);
  return {{"venues", std::move(venues)}, {"total", row_json(table.total)}};
}

std::string render_stats(const StatsTable& table) {
  std::vector<std::pair<std::string, const StatsRow*>> columns;
  for (const auto& [venue, row] : table.venues) columns.emplace_back(venue.name(), &row);
  columns.emplace_back("total", &table.total);

  auto rounded = [](double v) { return std::to_string(std::llround(v)); };
  const std::vector<std::pair<std::string, std::function<std::string(const StatsRow&)>>> rows{
      {"# papers", [](const StatsRow& r) { return std::to_string(r.paper_count); }},
      {"# words per paper", [&](const StatsRow& r) { return rounded(r.words_per_paper_mean()); }},
      {"# reviews", [](const StatsRow& r) { return std::to_string(r.review_count); }},
      {"# words per review", [&](const StatsRow& r) { return rounded(r.words_per_review_mean()); }},
      {"# prompts", [](const StatsRow& r) { return std::to_string(r.prompt_count); }},
      {"# words per prompt", [&](const StatsRow& r) { return rounded(r.words_per_prompt_mean()); }},
      {"% accepted", [&](const StatsRow& r) { return rounded(100.0 * r.accept_fraction()) + "%"; }},
  };

  std::ostringstream out;
  out << std::left << std::setw(20) << "";
  for (const auto& [name, row] : columns) out << std::right << std::setw(12) << name;
  out << '\n';
  for (const auto& [label, cell] : rows) {
    out << std::left << std::setw(20) << label;
    for (const auto& [name, row] : columns) out << std::right << std::setw(12) << cell(*row);
    out << '\n';
  }
  return out.str();
}

}  // namespace revgen
