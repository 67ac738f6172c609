#include "revgen/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "revgen/error.hpp"
#include "revgen/rng.hpp"
#include "revgen/text.hpp"

namespace revgen {
namespace {

using nlohmann::json;

std::string get_string(const json& j, const char* key, const char* what = "record") {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw MalformedRecord(std::string(what) + " field '" + key + "' is not a string");
}

std::optional<int> get_year(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (it->is_number_integer()) return it->get<int>();
  if (it->is_number()) return static_cast<int>(it->get<double>());
  if (it->is_string()) {
    const auto s = text::trim(it->get<std::string>());
    if (s.empty()) return std::nullopt;
    try {
      std::size_t used = 0;
      int y = std::stoi(s, &used);
      if (used == s.size()) return y;
    } catch (const std::exception&) {
    }
  }
  throw MalformedRecord(std::string("field '") + key + "' is not a year");
}

std::vector<std::string> get_string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return out;
  if (!it->is_array()) throw MalformedRecord(std::string("field '") + key + "' is not a list");
  for (const auto& v : *it) {
    if (!v.is_string()) continue;
    auto s = text::scrub_emails(v.get<std::string>());
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

const json& array_field(const json& j, const char* key) {
  static const json empty = json::array();
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return empty;
  if (!it->is_array()) throw MalformedRecord(std::string("field '") + key + "' is not a list");
  return *it;
}

// Science Parse wraps the paper as {"name": ..., "metadata": {...}}.
const json& unwrap_science_parse(const json& record) {
  if (record.contains("title") || record.contains("sections") || record.contains("abstractText"))
    return record;
  auto it = record.find("metadata");
  if (it != record.end() && it->is_object() &&
      (it->contains("sections") || it->contains("abstractText") || it->contains("title")))
    return *it;
  return record;
}

// Library type errors from nlohmann (e.g. a string where a number belongs)
// surface as MalformedRecord so callers see only declared errors.
template <typename F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw MalformedRecord(e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------

Venue Venue::parse(std::string_view conference) {
  const auto lower = text::to_lower_ascii(text::trim(conference));
  std::size_t n = 0;
  while (n < lower.size() && lower[n] >= 'a' && lower[n] <= 'z') ++n;
  const auto head = lower.substr(0, n);
  if (head == "iclr") return {VenueKind::ICLR, {}};
  if (head == "neurips" || head == "nips") return {VenueKind::NeurIPS, {}};
  if (head == "acl") return {VenueKind::ACL, {}};
  if (head == "arr") return {VenueKind::ARR, {}};
  if (head == "coling") return {VenueKind::COLING, {}};
  if (head == "conll") return {VenueKind::CONLL, {}};
  auto other = text::trim(conference);
  return {VenueKind::Other, other.empty() ? "other" : other};
}

std::string Venue::name() const {
  switch (kind) {
    case VenueKind::CONLL: return "CONLL";
    case VenueKind::ACL: return "ACL";
    case VenueKind::COLING: return "COLING";
    case VenueKind::ARR: return "ARR";
    case VenueKind::ICLR: return "ICLR";
    case VenueKind::NeurIPS: return "NeurIPS";
    case VenueKind::Other: break;
  }
  return other.empty() ? "other" : other;
}

Decision parse_decision(std::string_view s) {
  const auto lower = text::to_lower_ascii(s);
  if (lower.find("reject") != std::string::npos) return Decision::Reject;
  if (lower.find("accept") != std::string::npos) return Decision::Accept;
  return Decision::Unknown;
}

std::string to_string(Decision d) {
  switch (d) {
    case Decision::Accept: return "accept";
    case Decision::Reject: return "reject";
    case Decision::Unknown: break;
  }
  return "unknown";
}

std::size_t Paper::word_count() const {
  std::size_t n = text::word_count(abstract_text);
  for (const auto& s : sections) n += text::word_count(s.text);
  return n;
}

std::string AspectPrompt::numbered() const {
  std::string out;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (i) out.push_back('\n');
    out += std::to_string(i + 1) + ". " + questions[i];
  }
  return out;
}

// ---------------------------------------------------------------------------

void Corpus::add(Paper paper, std::vector<Review> paper_reviews) {
  if (paper.id.empty()) throw InvalidInput("paper without id");
  if (papers.count(paper.id)) throw InvalidInput("duplicate paper id " + paper.id);
  std::set<int> seen;
  for (const auto& r : paper_reviews) {
    if (r.paper_id != paper.id)
      throw InvalidInput("review for " + r.paper_id + " filed under " + paper.id);
    if (!seen.insert(r.review_index).second)
      throw InvalidInput("duplicate review index " + std::to_string(r.review_index) + " for " +
                         paper.id);
  }
  auto id = paper.id;
  papers.emplace(id, std::move(paper));
  reviews[id] = std::move(paper_reviews);
}

void Corpus::validate() const {
  for (const auto& [id, list] : reviews) {
    if (!papers.count(id)) throw InvalidInput("reviews for unknown paper " + id);
    std::set<int> seen;
    for (const auto& r : list) {
      if (r.paper_id != id) throw InvalidInput("review paper id mismatch for " + id);
      if (!seen.insert(r.review_index).second) throw InvalidInput("duplicate review index");
    }
  }
  for (const auto& [key, prompt] : prompts) {
    const auto& list = reviews_of(key.paper_id);
    const bool found = std::any_of(list.begin(), list.end(), [&](const Review& r) {
      return r.review_index == key.review_index;
    });
    if (!found)
      throw InvalidInput("prompt for missing review " + key.paper_id + "#" +
                         std::to_string(key.review_index));
    if (prompt.paper_id != key.paper_id || prompt.review_index != key.review_index)
      throw InvalidInput("prompt key mismatch for " + key.paper_id);
  }
}

const std::vector<Review>& Corpus::reviews_of(const std::string& paper_id) const {
  static const std::vector<Review> none;
  auto it = reviews.find(paper_id);
  return it == reviews.end() ? none : it->second;
}

std::vector<std::string> Corpus::references(const std::string& paper_id,
                                            bool include_meta) const {
  std::vector<std::string> out;
  for (const auto& r : reviews_of(paper_id)) {
    if (r.is_meta && !include_meta) continue;
    out.push_back(review_text(r));
  }
  return out;
}

std::size_t Corpus::review_count(bool include_meta) const {
  std::size_t n = 0;
  for (const auto& [id, list] : reviews)
    for (const auto& r : list) n += (include_meta || !r.is_meta) ? 1 : 0;
  return n;
}

ReferenceSets reference_sets(const Corpus& corpus, bool include_meta) {
  ReferenceSets out;
  for (const auto& [id, paper] : corpus.papers) {
    auto refs = corpus.references(id, include_meta);
    if (!refs.empty()) out.emplace(id, std::move(refs));
  }
  return out;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& science_parse_fields() {
  static const std::vector<std::string> fields{
      "title",     "authors", "emails", "sections",     "references",
      "referenceMentions",    "year",   "abstractText"};
  return fields;
}

namespace {

Paper parse_science_parse_impl(const json& input, std::string id) {
  if (!input.is_object()) throw MalformedRecord("paper record is not a JSON object");
  const json& record = unwrap_science_parse(input);

  Paper paper;
  paper.id = id.empty() ? get_string(input, "id") : std::move(id);
  paper.title = text::collapse_whitespace(get_string(record, "title", "paper"));
  paper.authors = get_string_list(record, "authors");
  // "emails" is recognized and deliberately not retained.
  paper.abstract_text = text::trim(get_string(record, "abstractText", "paper"));
  paper.year = get_year(record, "year");

  for (const auto& s : array_field(record, "sections")) {
    if (!s.is_object()) throw MalformedRecord("section is not an object");
    Section section{text::collapse_whitespace(get_string(s, "heading", "section")),
                    text::trim(get_string(s, "text", "section"))};
    if (text::collapse_whitespace(section.text).empty()) continue;
    paper.sections.push_back(std::move(section));
  }

  for (const auto& r : array_field(record, "references")) {
    if (!r.is_object()) throw MalformedRecord("reference is not an object");
    Reference ref;
    ref.title = get_string(r, "title", "reference");
    ref.authors = get_string_list(r, "author");
    if (ref.authors.empty()) ref.authors = get_string_list(r, "authors");
    ref.venue = get_string(r, "venue", "reference");
    ref.year = get_year(r, "year");
    ref.cite_regex = get_string(r, "citeRegEx", "reference");
    ref.short_cite_regex = get_string(r, "shortCiteRegEx", "reference");
    paper.references.push_back(std::move(ref));
  }

  for (const auto& m : array_field(record, "referenceMentions")) {
    if (!m.is_object()) throw MalformedRecord("reference mention is not an object");
    auto idx = m.find("referenceID");
    if (idx == m.end() || !idx->is_number_integer()) continue;
    const auto index = idx->get<long long>();
    if (index < 0 || static_cast<std::size_t>(index) >= paper.references.size()) continue;
    ReferenceMention mention;
    mention.reference_index = static_cast<std::size_t>(index);
    mention.context = get_string(m, "context", "reference mention");
    mention.start_offset = m.value("startOffset", std::int64_t{0});
    mention.end_offset = m.value("endOffset", std::int64_t{0});
    paper.reference_mentions.push_back(std::move(mention));
  }

  if (paper.title.empty()) throw MalformedRecord("paper record has no title");
  if (paper.sections.empty() && paper.abstract_text.empty())
    throw MalformedRecord("paper record has no sections and no abstract");
  return paper;
}

}  // namespace

Paper parse_science_parse(const json& input, std::string id) {
  return guarded([&] { return parse_science_parse_impl(input, std::move(id)); });
}

Metadata parse_metadata(const json& record) {
  return guarded([&] {
  if (!record.is_object()) throw MalformedRecord("metadata is not a JSON object");
  Metadata m;
  m.id = text::trim(get_string(record, "id", "metadata"));
  m.conference = text::trim(get_string(record, "conference", "metadata"));
  m.decision = parse_decision(get_string(record, "decision", "metadata"));
  m.url = get_string(record, "url", "metadata");
  m.review_url = get_string(record, "review_url", "metadata");
  m.title = text::scrub_emails(get_string(record, "title", "metadata"));
  m.authors = get_string_list(record, "authors");
  return m;
  });
}

namespace {

Review parse_review_impl(const json& record, const std::string& paper_id, int review_index) {
  if (!record.is_object()) throw MalformedRecord("review is not a JSON object");
  Review review;
  review.paper_id = paper_id;
  review.review_index = review_index;

  if (auto it = record.find("components"); it != record.end() && !it->is_null()) {
    if (!it->is_array()) throw MalformedRecord("review components is not a list");
    for (const auto& c : *it) {
      if (!c.is_object()) throw MalformedRecord("review component is not an object");
      review.components.push_back(
          {text::trim(get_string(c, "label", "component")), get_string(c, "text", "component")});
    }
    const bool labeled = std::any_of(review.components.begin(), review.components.end(),
                                     [](const auto& c) { return !c.label.empty(); });
    review.format = labeled ? ReviewFormat::Structured : ReviewFormat::Freeform;
  } else {
    for (const char* key : {"comments", "review", "text"}) {
      auto s = get_string(record, key, "review");
      if (!s.empty()) {
        review.components.push_back({"", std::move(s)});
        break;
      }
    }
    review.format = ReviewFormat::Freeform;
  }

  const auto format = get_string(record, "format", "review");
  if (format == "structured") review.format = ReviewFormat::Structured;
  else if (format == "freeform") review.format = ReviewFormat::Freeform;
  else if (!format.empty()) throw MalformedRecord("unknown review format '" + format + "'");

  if (auto it = record.find("scores"); it != record.end() && it->is_object()) {
    std::map<std::string, double> scores;
    for (const auto& [label, v] : it->items()) {
      if (v.is_number()) {
        scores[label] = v.get<double>();
      } else if (v.is_string()) {
        // Venue forms often store "6: marginally above the threshold".
        try {
          scores[label] = std::stod(v.get<std::string>());
        } catch (const std::exception&) {
        }
      }
    }
    review.scores = std::move(scores);
  }

  review.is_meta = record.value("is_meta_review", false) || record.value("is_meta", false) ||
                   get_string(record, "type", "review") == "meta_review";
  return review;
}

}  // namespace

Review parse_review(const json& record, const std::string& paper_id, int review_index) {
  return guarded([&] { return parse_review_impl(record, paper_id, review_index); });
}

namespace {

IngestedRecord parse_venue_record_impl(const json& record,
                                       const std::filesystem::path& papers_dir) {
  if (!record.is_object()) throw MalformedRecord("venue record is not a JSON object");
  auto meta_it = record.find("metadata");
  if (meta_it == record.end()) throw MalformedRecord("venue record has no metadata");
  Metadata metadata = parse_metadata(*meta_it);

  IngestedRecord out;
  if (auto it = record.find("paper"); it != record.end() && !it->is_null()) {
    out.paper = parse_science_parse(*it, metadata.id);
  } else if (!papers_dir.empty() && !metadata.id.empty()) {
    out.paper = parse_science_parse(read_json_file(papers_dir / (metadata.id + ".json")),
                                    metadata.id);
  } else {
    throw MalformedRecord("venue record has no paper content");
  }
  if (out.paper.id.empty()) throw MalformedRecord("venue record has no paper id");
  if (metadata.id.empty()) metadata.id = out.paper.id;
  if (metadata.title.empty()) metadata.title = out.paper.title;
  out.paper.venue = Venue::parse(metadata.conference);
  out.paper.metadata = std::move(metadata);

  const auto& list = array_field(record, "reviews");
  for (std::size_t i = 0; i < list.size(); ++i) {
    auto review = parse_review(list[i], out.paper.id, static_cast<int>(i));
    try {
      (void)review_text(review);
    } catch (const EmptyReview&) {
      continue;  // no text part; nothing to learn from
    }
    out.reviews.push_back(std::move(review));
  }
  return out;
}

}  // namespace

IngestedRecord parse_venue_record(const json& record, const std::filesystem::path& papers_dir) {
  return guarded([&] { return parse_venue_record_impl(record, papers_dir); });
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedRecord("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto bytes = buf.str();
  if (!text::is_valid_utf8(bytes)) throw EncodingError(path.string() + " is not valid UTF-8");
  try {
    return json::parse(bytes);
  } catch (const json::exception& e) {
    throw MalformedRecord(path.string() + ": " + e.what());
  }
}

IngestedRecord load_venue_file(const std::filesystem::path& path,
                               const std::filesystem::path& papers_dir) {
  return parse_venue_record(read_json_file(path), papers_dir);
}

// ---------------------------------------------------------------------------

std::string review_text(const Review& review) {
  std::vector<std::string> parts;
  for (const auto& c : review.components) {
    auto body = text::trim(c.text);
    if (body.empty()) continue;
    if (review.format == ReviewFormat::Structured && !c.label.empty()) {
      parts.push_back(c.label + "\n" + body);
    } else {
      parts.push_back(std::move(body));
    }
  }
  if (parts.empty())
    throw EmptyReview("review " + std::to_string(review.review_index) + " of " +
                      review.paper_id + " has no text");
  return text::join(parts, "\n\n");
}

// ---------------------------------------------------------------------------

CorpusSplit split_corpus(const Corpus& corpus, const SplitRatios& ratios, std::uint64_t seed,
                         const std::vector<Venue>& in_domain) {
  for (double r : {ratios.train, ratios.validation, ratios.test}) {
    if (!std::isfinite(r) || r < 0.0) throw InvalidRatios("ratios must be finite and >= 0");
  }
  if (std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9)
    throw InvalidRatios("ratios must sum to 1");

  std::vector<std::string> domain_ids;
  std::vector<std::string> other_ids;
  for (const auto& [id, paper] : corpus.papers) {
    const bool inside = std::find(in_domain.begin(), in_domain.end(), paper.venue) != in_domain.end();
    (inside ? domain_ids : other_ids).push_back(id);
  }

  Rng rng(seed);
  rng.shuffle(std::span<std::string>(domain_ids));

  const auto n = domain_ids.size();
  // The epsilon absorbs representation error such as 10 * 0.1.
  const auto n_val = static_cast<std::size_t>(std::floor(n * ratios.validation + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(n * ratios.test + 1e-9));
  const auto n_train = n - std::min(n, n_val + n_test);

  CorpusSplit out;
  auto move_paper = [&](const std::string& id, Corpus& target) {
    target.add(corpus.papers.at(id), corpus.reviews_of(id));
    for (auto it = corpus.prompts.lower_bound(ReviewKey{id, std::numeric_limits<int>::min()});
         it != corpus.prompts.end() && it->first.paper_id == id; ++it) {
      target.prompts.insert(*it);
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    Corpus& target = i < n_train ? out.train : (i < n_train + n_val ? out.validation : out.test);
    move_paper(domain_ids[i], target);
  }
  for (const auto& id : other_ids) move_paper(id, out.test);
  return out;
}

}  // namespace revgen
