#include <fstream>
#include <limits>
#include <sstream>

#include "revgen/corpus.hpp"
#include "revgen/error.hpp"
#include "revgen/text.hpp"

namespace revgen {

using nlohmann::json;

namespace {

json optional_year(const std::optional<int>& y) { return y ? json(*y) : json(nullptr); }

std::optional<int> year_from(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<int>();
}

}  // namespace

json to_json(const Paper& p) {
  json sections = json::array();
  for (const auto& s : p.sections) sections.push_back({{"heading", s.heading}, {"text", s.text}});
  json references = json::array();
  for (const auto& r : p.references) {
    references.push_back({{"title", r.title},
                          {"author", r.authors},
                          {"venue", r.venue},
                          {"citeRegEx", r.cite_regex},
                          {"shortCiteRegEx", r.short_cite_regex},
                          {"year", optional_year(r.year)}});
  }
  json mentions = json::array();
  for (const auto& m : p.reference_mentions) {
    mentions.push_back({{"referenceID", m.reference_index},
                        {"context", m.context},
                        {"startOffset", m.start_offset},
                        {"endOffset", m.end_offset}});
  }
  return {{"id", p.id},
          {"venue", p.venue.name()},
          {"title", p.title},
          {"authors", p.authors},
          {"sections", std::move(sections)},
          {"references", std::move(references)},
          {"referenceMentions", std::move(mentions)},
          {"year", optional_year(p.year)},
          {"abstractText", p.abstract_text}};
}

json to_json(const Metadata& m) {
  return {{"id", m.id},
          {"conference", m.conference},
          {"decision", to_string(m.decision)},
          {"url", m.url},
          {"review_url", m.review_url},
          {"title", m.title},
          {"authors", m.authors}};
}

json to_json(const Review& r) {
  json components = json::array();
  for (const auto& c : r.components) components.push_back({{"label", c.label}, {"text", c.text}});
  json j{{"paper_id", r.paper_id},
         {"review_index", r.review_index},
         {"format", r.format == ReviewFormat::Structured ? "structured" : "freeform"},
         {"components", std::move(components)},
         {"is_meta_review", r.is_meta}};
  j["scores"] = r.scores ? json(*r.scores) : json(nullptr);
  return j;
}

json to_json(const AspectPrompt& p) {
  json j{{"paper_id", p.paper_id},
         {"review_index", p.review_index},
         {"questions", p.questions},
         {"attempts", p.attempts},
         {"excluded", p.excluded}};
  j["score"] = p.score ? json(*p.score) : json(nullptr);
  return j;
}

Paper paper_from_json(const json& j) {
  Paper p;
  p.id = j.at("id").get<std::string>();
  p.venue = Venue::parse(j.value("venue", std::string{}));
  p.title = j.value("title", std::string{});
  p.authors = j.value("authors", std::vector<std::string>{});
  p.abstract_text = j.value("abstractText", std::string{});
  p.year = year_from(j, "year");
  for (const auto& s : j.value("sections", json::array()))
    p.sections.push_back({s.at("heading").get<std::string>(), s.at("text").get<std::string>()});
  for (const auto& r : j.value("references", json::array())) {
    Reference ref;
    ref.title = r.value("title", std::string{});
    ref.authors = r.value("author", std::vector<std::string>{});
    ref.venue = r.value("venue", std::string{});
    ref.cite_regex = r.value("citeRegEx", std::string{});
    ref.short_cite_regex = r.value("shortCiteRegEx", std::string{});
    ref.year = year_from(r, "year");
    p.references.push_back(std::move(ref));
  }
  for (const auto& m : j.value("referenceMentions", json::array())) {
    p.reference_mentions.push_back({m.at("referenceID").get<std::size_t>(),
                                    m.value("context", std::string{}),
                                    m.value("startOffset", std::int64_t{0}),
                                    m.value("endOffset", std::int64_t{0})});
  }
  return p;
}

Review review_from_json(const json& j) {
  Review r;
  r.paper_id = j.at("paper_id").get<std::string>();
  r.review_index = j.at("review_index").get<int>();
  r.format = j.value("format", std::string{"freeform"}) == "structured" ? ReviewFormat::Structured
                                                                         : ReviewFormat::Freeform;
  for (const auto& c : j.at("components"))
    r.components.push_back({c.value("label", std::string{}), c.value("text", std::string{})});
  r.is_meta = j.value("is_meta_review", false);
  if (auto it = j.find("scores"); it != j.end() && !it->is_null())
    r.scores = it->get<std::map<std::string, double>>();
  return r;
}

AspectPrompt prompt_from_json(const json& j) {
  AspectPrompt p;
  p.paper_id = j.at("paper_id").get<std::string>();
  p.review_index = j.at("review_index").get<int>();
  p.questions = j.value("questions", std::vector<std::string>{});
  p.attempts = j.value("attempts", 1);
  p.excluded = j.value("excluded", false);
  if (auto it = j.find("score"); it != j.end() && !it->is_null()) p.score = it->get<int>();
  return p;
}

void write_corpus_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& [id, paper] : corpus.papers) {
    json reviews = json::array();
    for (const auto& r : corpus.reviews_of(id)) reviews.push_back(to_json(r));
    json prompts = json::array();
    for (auto it = corpus.prompts.lower_bound(ReviewKey{id, std::numeric_limits<int>::min()});
         it != corpus.prompts.end() && it->first.paper_id == id; ++it) {
      prompts.push_back(to_json(it->second));
    }
    json line{{"paper", to_json(paper)},
              {"metadata", to_json(paper.metadata)},
              {"reviews", std::move(reviews)},
              {"prompts", std::move(prompts)}};
    out << line.dump() << '\n';
  }
}

void write_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path.string());
  write_corpus_jsonl(corpus, out);
}

Corpus read_corpus_jsonl(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      Paper paper = paper_from_json(j.at("paper"));
      paper.metadata = parse_metadata(j.at("metadata"));
      std::vector<Review> reviews;
      for (const auto& r : j.value("reviews", json::array())) reviews.push_back(review_from_json(r));
      const auto id = paper.id;
      corpus.add(std::move(paper), std::move(reviews));
      for (const auto& p : j.value("prompts", json::array())) {
        auto prompt = prompt_from_json(p);
        corpus.prompts[{prompt.paper_id, prompt.review_index}] = std::move(prompt);
      }
    } catch (const json::exception& e) {
      throw MalformedRecord("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  corpus.validate();
  return corpus;
}

Corpus read_corpus_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read corpus " + path.string());
  return read_corpus_jsonl(in);
}

}  // namespace revgen
