#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace revgen::text {

/// True when `bytes` is well-formed UTF-8 (no overlongs, no surrogates).
bool is_valid_utf8(std::string_view bytes);

/// Canonical tokenizer shared by word counts and n-gram metrics: case-folds
/// (ASCII and Latin-1), splits on Unicode whitespace, and strips leading and
/// trailing punctuation from each token. Tokens that are pure punctuation
/// vanish.
std::vector<std::string> tokenize(std::string_view text);

std::size_t word_count(std::string_view text);

/// Splits prose into sentences at `.`, `!` or `?` followed by whitespace, and
/// at blank lines. Returned sentences are trimmed and non-empty.
std::vector<std::string> split_sentences(std::string_view text);

std::string trim(std::string_view s);

/// Collapses runs of whitespace into single spaces and trims.
std::string collapse_whitespace(std::string_view s);

/// Removes e-mail addresses (and a wrapping `<...>`) from free text.
std::string scrub_emails(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string to_lower_ascii(std::string_view s);

/// 64-bit FNV-1a. Stable across platforms; used for feature hashing, seeds,
/// and config hashes.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

}  // namespace revgen::text
