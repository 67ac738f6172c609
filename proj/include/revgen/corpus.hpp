#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace revgen {

enum class VenueKind { CONLL, ACL, COLING, ARR, ICLR, NeurIPS, Other };

struct Venue {
  VenueKind kind = VenueKind::Other;
  std::string other;  // original name when kind == Other

  /// Maps a conference string such as "ICLR 2017", "NIPS" or "acl-17" to a
  /// venue. Unrecognized names become Other.
  static Venue parse(std::string_view conference);
  std::string name() const;

  friend bool operator==(const Venue&, const Venue&) = default;
  friend auto operator<=>(const Venue&, const Venue&) = default;
};

enum class Decision { Accept, Reject, Unknown };

/// "accept", "Accept (Poster)", "reject" ... ; anything else is Unknown.
Decision parse_decision(std::string_view text);
std::string to_string(Decision d);

struct Section {
  std::string heading;
  std::string text;
  friend bool operator==(const Section&, const Section&) = default;
};

struct Reference {
  std::string title;
  std::vector<std::string> authors;
  std::string venue;
  std::optional<int> year;
  std::string cite_regex;
  std::string short_cite_regex;
  friend bool operator==(const Reference&, const Reference&) = default;
};

struct ReferenceMention {
  std::size_t reference_index = 0;
  std::string context;
  std::int64_t start_offset = 0;
  std::int64_t end_offset = 0;
  friend bool operator==(const ReferenceMention&, const ReferenceMention&) = default;
};

struct Metadata {
  std::string id;
  std::string conference;
  Decision decision = Decision::Unknown;
  std::string url;
  std::string review_url;
  std::string title;
  std::vector<std::string> authors;
  friend bool operator==(const Metadata&, const Metadata&) = default;
};

struct Paper {
  std::string id;
  Venue venue;
  std::string title;
  std::vector<std::string> authors;
  std::string abstract_text;
  std::vector<Section> sections;
  std::vector<Reference> references;
  std::vector<ReferenceMention> reference_mentions;
  std::optional<int> year;
  Metadata metadata;

  /// Abstract plus body section text; headings and references excluded.
  std::size_t word_count() const;
  friend bool operator==(const Paper&, const Paper&) = default;
};

enum class ReviewFormat { Structured, Freeform };

struct ReviewComponent {
  std::string label;
  std::string text;
  friend bool operator==(const ReviewComponent&, const ReviewComponent&) = default;
};

struct Review {
  std::string paper_id;
  int review_index = 0;
  std::vector<ReviewComponent> components;
  std::optional<std::map<std::string, double>> scores;
  ReviewFormat format = ReviewFormat::Freeform;
  bool is_meta = false;  // meta-reviews are stored but are not references
  friend bool operator==(const Review&, const Review&) = default;
};

struct ReviewKey {
  std::string paper_id;
  int review_index = 0;
  friend bool operator==(const ReviewKey&, const ReviewKey&) = default;
  friend auto operator<=>(const ReviewKey&, const ReviewKey&) = default;
};

/// A numbered-question prompt tied to one review.
struct AspectPrompt {
  std::string paper_id;
  int review_index = 0;
  std::vector<std::string> questions;
  std::optional<int> score;
  int attempts = 1;
  bool excluded = false;

  /// "1. q1\n2. q2 ..."
  std::string numbered() const;
  friend bool operator==(const AspectPrompt&, const AspectPrompt&) = default;
};

/// Papers, their reviews, and (after PGE) one prompt per review.
/// Ordered containers keep every serialization deterministic.
struct Corpus {
  std::map<std::string, Paper> papers;
  std::map<std::string, std::vector<Review>> reviews;
  std::map<ReviewKey, AspectPrompt> prompts;

  /// Inserts a paper and its reviews; throws InvalidInput on a duplicate id
  /// or a review that points elsewhere.
  void add(Paper paper, std::vector<Review> paper_reviews = {});

  /// Checks the cross-reference invariants; throws InvalidInput.
  void validate() const;

  const std::vector<Review>& reviews_of(const std::string& paper_id) const;

  /// Serialized texts of the paper's reference reviews (Y), in review order.
  std::vector<std::string> references(const std::string& paper_id,
                                      bool include_meta = false) const;

  std::size_t review_count(bool include_meta = false) const;
  bool empty() const { return papers.empty(); }
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Paper -> reference review texts.
using ReferenceSets = std::map<std::string, std::vector<std::string>>;
ReferenceSets reference_sets(const Corpus& corpus, bool include_meta = false);

// ---------------------------------------------------------------------------
// Ingestion

/// Parses a Science-Parse style paper record. Accepts both the flat layout and
/// the `{"name": ..., "metadata": {...}}` wrapper Science Parse emits.
/// Unknown fields are ignored; author e-mails are dropped.
Paper parse_science_parse(const nlohmann::json& record, std::string id = {});

/// Field names recognized in a Science-Parse paper record.
const std::vector<std::string>& science_parse_fields();

Metadata parse_metadata(const nlohmann::json& record);

/// Parses one entry of a venue review list.
Review parse_review(const nlohmann::json& record, const std::string& paper_id,
                    int review_index);

struct IngestedRecord {
  Paper paper;
  std::vector<Review> reviews;
};

/// Parses a venue file: `{"metadata": {...}, "paper": {...}, "reviews": [...]}`.
/// When `paper` is absent the Science-Parse record is read from
/// `papers_dir/<metadata.id>.json`.
IngestedRecord parse_venue_record(const nlohmann::json& record,
                                  const std::filesystem::path& papers_dir = {});

/// Reads and parses a venue file; raises EncodingError for non-UTF-8 bytes and
/// MalformedRecord for anything that is not a valid record.
IngestedRecord load_venue_file(const std::filesystem::path& path,
                               const std::filesystem::path& papers_dir = {});

/// Reads a file and checks it is UTF-8 JSON.
nlohmann::json read_json_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Review text

/// The text part of a review. Structured reviews keep their labels as
/// "Label\n" prefixes; components are separated by a blank line.
std::string review_text(const Review& review);

// ---------------------------------------------------------------------------
// Statistics

/// Integer sums; means are derived so merging rows stays exact.
struct StatsRow {
  std::uint64_t paper_count = 0;
  std::uint64_t paper_words = 0;
  std::uint64_t review_count = 0;
  std::uint64_t review_words = 0;
  std::uint64_t prompt_count = 0;
  std::uint64_t prompt_words = 0;
  std::uint64_t accepted_count = 0;

  double words_per_paper_mean() const;
  double words_per_review_mean() const;
  double words_per_prompt_mean() const;
  double accept_fraction() const;

  StatsRow& operator+=(const StatsRow& other);
  friend bool operator==(const StatsRow&, const StatsRow&) = default;
};

struct StatsTable {
  std::map<Venue, StatsRow> venues;
  StatsRow total;
};

StatsTable compute_stats(const Corpus& corpus);
nlohmann::json stats_to_json(const StatsTable& table);
/// Table with one column per venue plus "total"; means rounded to integers.
std::string render_stats(const StatsTable& table);

// ---------------------------------------------------------------------------
// Splitting

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct CorpusSplit {
  Corpus train;
  Corpus validation;
  Corpus test;
};

/// Partitions papers (with their reviews and prompts). Only venues in
/// `in_domain` are split; every other paper goes to test. Validation and test
/// receive floor(n * ratio) in-domain papers; train takes the remainder.
CorpusSplit split_corpus(const Corpus& corpus, const SplitRatios& ratios,
                         std::uint64_t seed, const std::vector<Venue>& in_domain);

// ---------------------------------------------------------------------------
// Unified JSONL

nlohmann::json to_json(const Paper& paper);
nlohmann::json to_json(const Metadata& metadata);
nlohmann::json to_json(const Review& review);
nlohmann::json to_json(const AspectPrompt& prompt);
Paper paper_from_json(const nlohmann::json& j);
Review review_from_json(const nlohmann::json& j);
AspectPrompt prompt_from_json(const nlohmann::json& j);

/// One line per paper: {"paper", "metadata", "reviews", "prompts"}.
void write_corpus_jsonl(const Corpus& corpus, std::ostream& out);
void write_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path);
Corpus read_corpus_jsonl(std::istream& in);
Corpus read_corpus_jsonl(const std::filesystem::path& path);

}  // namespace revgen
