#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <vector>

#include "revgen/backend.hpp"

namespace revgen {

/// L2-normalized feature-hashed bag of canonical tokens.
Embedding hashed_bow_embedding(std::string_view text, std::size_t dimension);

struct TranscriptEntry {
  ChatRequest request;
  Completion completion;
};

/// Serializes a transcript to stable text, for byte-level replay checks.
std::string transcript_text(const std::vector<TranscriptEntry>& transcript);

/// Replays a fixed queue of completions in call order and records every call.
/// Exhausting the script raises BackendRefusal.
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend(BackendProfile profile, std::vector<std::string> script,
                  std::size_t embedding_dimension = 4096);

  void push(std::string text);
  std::size_t remaining() const;
  std::vector<TranscriptEntry> transcript() const;

 protected:
  Completion do_complete(const ChatRequest& request) override;
  std::vector<Embedding> do_embed(const std::vector<std::string>& texts) override;

 private:
  mutable std::mutex mutex_;
  std::deque<std::string> script_;
  std::vector<TranscriptEntry> transcript_;
  std::size_t embedding_dimension_;
};

/// Answers every request with its final user turn, verbatim.
class EchoBackend : public Backend {
 public:
  explicit EchoBackend(BackendProfile profile);
  std::vector<TranscriptEntry> transcript() const;

 protected:
  Completion do_complete(const ChatRequest& request) override;

 private:
  mutable std::mutex mutex_;
  std::vector<TranscriptEntry> transcript_;
};

struct SyntheticBackendOptions {
  std::uint64_t seed = 0;
  /// Chance that a PGE evaluation call answers with score 5.
  double accept_probability = 0.65;
  std::size_t embedding_dimension = 4096;
};

/// Deterministic stand-in for a capable model. Every reply is a pure function
/// of (seed, request), so results do not depend on call order or concurrency.
/// Dispatches on ChatRequest::task:
///   pge.generate   numbered questions drawn from the target review
///   pge.evaluate   an assessment followed by "Score: s"
///   aspect_prompts numbered questions drawn from the paper's sections
///   review*        a structured review stitched from the paper input and the
///                  aspect questions
class SyntheticBackend : public Backend {
 public:
  SyntheticBackend(BackendProfile profile, SyntheticBackendOptions options = {});

  std::size_t call_count() const;

 protected:
  Completion do_complete(const ChatRequest& request) override;
  std::vector<Embedding> do_embed(const std::vector<std::string>& texts) override;

 private:
  std::string generate_questions(const ChatRequest& request, std::uint64_t h) const;
  std::string evaluate(std::uint64_t h) const;
  std::string aspect_prompts(const ChatRequest& request, std::uint64_t h) const;
  std::string review(const ChatRequest& request, std::uint64_t h) const;

  SyntheticBackendOptions options_;
  mutable std::mutex mutex_;
  std::size_t calls_ = 0;
};

}  // namespace revgen
