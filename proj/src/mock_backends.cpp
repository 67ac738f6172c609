#include "revgen/mock_backends.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_set>

#include "revgen/error.hpp"
#include "revgen/rng.hpp"
#include "revgen/text.hpp"

namespace revgen {
namespace {

Usage usage_for(const ChatRequest& request, const std::string& text,
                const TokenEstimator& estimator) {
  return {request_tokens(request, estimator), estimator(text)};
}

// Text between the last occurrence of `start` and the following `end`.
std::string between_last(const std::string& s, const std::string& start, const std::string& end) {
  auto b = s.rfind(start);
  if (b == std::string::npos) return {};
  b += start.size();
  auto e = end.empty() ? std::string::npos : s.find(end, b);
  return s.substr(b, e == std::string::npos ? std::string::npos : e - b);
}

bool is_stopword(const std::string& t) {
  static const std::unordered_set<std::string> stop{
      "about", "above", "after", "again", "against", "based", "being", "below", "between",
      "could", "doing", "during", "every", "first", "further", "having", "other", "their",
      "there", "these", "thing", "those", "through", "under", "until", "using", "where",
      "which", "while", "would", "paper", "authors", "review", "should", "shows", "because",
      "already", "always", "another", "around", "however", "little", "mainly", "rather",
      "really", "several", "simple", "though", "unclear", "within", "without", "written",
      "described", "proposed", "reported", "results", "useful", "strengths", "weaknesses",
      "concern", "concerns", "questions", "limitations", "contribution"};
  return stop.count(t) > 0;
}

std::vector<std::string> keywords(std::string_view sentence) {
  std::vector<std::string> out;
  for (auto& t : text::tokenize(sentence)) {
    if (t.size() >= 6 && !is_stopword(t) &&
        std::none_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
        std::find(out.begin(), out.end(), t) == out.end()) {
      out.push_back(std::move(t));
    }
  }
  return out;
}

struct Topic {
  std::string sentence;
  std::vector<std::string> keywords;
};

// Prose lines only: headings, "Title:" and "Abstract:" labels carry no final punctuation.
std::vector<std::string> prose_sentences(std::string_view body) {
  std::string prose;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto end = body.find('\n', pos);
    if (end == std::string_view::npos) end = body.size();
    const auto line = text::trim(body.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line.rfind("Title:", 0) == 0) continue;
    const char last = line.back();
    if (last == '.' || last == '!' || last == '?') prose += line + "\n\n";
  }
  return text::split_sentences(prose);
}

std::vector<Topic> topics_of(std::string_view body) {
  std::vector<Topic> out;
  for (auto& s : prose_sentences(body)) {
    auto kw = keywords(s);
    if (!kw.empty()) out.push_back({std::move(s), std::move(kw)});
  }
  return out;
}

std::string numbered(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out += std::to_string(i + 1) + ". " + lines[i];
    if (i + 1 < lines.size()) out.push_back('\n');
  }
  return out;
}

}  // namespace

Embedding hashed_bow_embedding(std::string_view text_in, std::size_t dimension) {
  if (dimension == 0) throw InvalidInput("embedding dimension must be positive");
  Embedding v(dimension, 0.0f);
  for (const auto& t : text::tokenize(text_in)) v[text::fnv1a64(t) % dimension] += 1.0f;
  double norm = 0.0;
  for (float x : v) norm += static_cast<double>(x) * x;
  if (norm > 0.0) {
    const auto inv = static_cast<float>(1.0 / std::sqrt(norm));
    for (float& x : v) x *= inv;
  }
  return v;
}

std::string transcript_text(const std::vector<TranscriptEntry>& transcript) {
  std::string out;
  char buf[64];
  for (const auto& e : transcript) {
    std::snprintf(buf, sizeof buf, "%.3f", e.request.temperature);
    out += "### request task=" + e.request.task + " model=" + e.request.model_tag +
           " temperature=" + buf + " max_output_tokens=" +
           std::to_string(e.request.max_output_tokens) + "\n";
    out += "[system]\n" + e.request.system + "\n";
    for (const auto& t : e.request.turns)
      out += (t.role == Role::User ? "[user]\n" : "[assistant]\n") + t.content + "\n";
    out += "### completion finish=" + to_string(e.completion.finish_reason) + "\n" +
           e.completion.text + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(BackendProfile profile, std::vector<std::string> script,
                                 std::size_t embedding_dimension)
    : Backend(std::move(profile)),
      script_(script.begin(), script.end()),
      embedding_dimension_(embedding_dimension) {}

void ScriptedBackend::push(std::string text) {
  std::lock_guard lock(mutex_);
  script_.push_back(std::move(text));
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard lock(mutex_);
  return script_.size();
}

std::vector<TranscriptEntry> ScriptedBackend::transcript() const {
  std::lock_guard lock(mutex_);
  return transcript_;
}

Completion ScriptedBackend::do_complete(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  if (script_.empty()) throw BackendRefusal("scripted backend has no replies left");
  Completion c;
  c.text = std::move(script_.front());
  script_.pop_front();
  c.usage = usage_for(request, c.text, estimator());
  transcript_.push_back({request, c});
  return c;
}

std::vector<Embedding> ScriptedBackend::do_embed(const std::vector<std::string>& texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(hashed_bow_embedding(t, embedding_dimension_));
  return out;
}

// ---------------------------------------------------------------------------

EchoBackend::EchoBackend(BackendProfile profile) : Backend(std::move(profile)) {}

std::vector<TranscriptEntry> EchoBackend::transcript() const {
  std::lock_guard lock(mutex_);
  return transcript_;
}

Completion EchoBackend::do_complete(const ChatRequest& request) {
  Completion c;
  c.text = request.last_user_content();
  c.usage = usage_for(request, c.text, estimator());
  std::lock_guard lock(mutex_);
  transcript_.push_back({request, c});
  return c;
}

// ---------------------------------------------------------------------------

SyntheticBackend::SyntheticBackend(BackendProfile profile, SyntheticBackendOptions options)
    : Backend(std::move(profile)), options_(options) {}

std::size_t SyntheticBackend::call_count() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

Completion SyntheticBackend::do_complete(const ChatRequest& request) {
  {
    std::lock_guard lock(mutex_);
    ++calls_;
  }
  const auto h = derive_seed(options_.seed, request.task + "\n" + render_llama2(request));
  Completion c;
  if (request.task == "pge.generate") {
    c.text = generate_questions(request, h);
  } else if (request.task == "pge.evaluate") {
    c.text = evaluate(h);
  } else if (request.task == "aspect_prompts") {
    c.text = aspect_prompts(request, h);
  } else if (request.task.rfind("review", 0) == 0) {
    c.text = review(request, h);
  } else {
    c.text = "I am not sure how to help with that.";
  }
  c.usage = usage_for(request, c.text, estimator());
  return c;
}

std::vector<Embedding> SyntheticBackend::do_embed(const std::vector<std::string>& texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(hashed_bow_embedding(t, options_.embedding_dimension));
  return out;
}

std::string SyntheticBackend::generate_questions(const ChatRequest& request,
                                                 std::uint64_t h) const {
  static const std::vector<std::string> forms{
      "What is the focus and contribution of the paper on {}?",
      "What are the strengths of the proposed approach in terms of {}?",
      "What are the weaknesses regarding the {}?",
      "Do you have any concerns on the {}?",
      "How convincing is the evidence about {}?",
      "What are the limitations regarding {}?",
  };
  const auto review_text =
      between_last(request.last_user_content(), "Review:\n", "\nQuestions to address:");
  const auto topics = topics_of(review_text);
  Rng rng(h);
  std::vector<std::string> questions;
  if (topics.empty()) {
    questions = {"What is the main contribution of the paper?",
                 "What are the weaknesses of the paper?"};
  } else {
    const std::size_t count = std::min<std::size_t>(topics.size(), 2 + rng.uniform_index(3));
    const std::size_t start = rng.uniform_index(topics.size());
    for (std::size_t i = 0; i < count; ++i) {
      const auto& topic = topics[(start + i) % topics.size()];
      const auto& kw = topic.keywords[rng.uniform_index(topic.keywords.size())];
      auto q = forms[rng.uniform_index(forms.size())];
      q.replace(q.find("{}"), 2, kw);
      questions.push_back(std::move(q));
    }
  }
  return "Here are the questions the reviewer addresses:\n" + numbered(questions);
}

std::string SyntheticBackend::evaluate(std::uint64_t h) const {
  Rng rng(h);
  int score = 5;
  if (rng.uniform01() >= options_.accept_probability)
    score = 1 + static_cast<int>(rng.uniform_index(4));
  static const char* const assessments[] = {
      "The answer addresses aspects that none of the questions ask about.",
      "The answer covers only a small subset of the questions.",
      "The answer covers a substantial portion of the questions but misses some of them.",
      "The answer covers most of the questions but includes information no question asks for.",
      "The answer addresses every question without irrelevant information.",
  };
  return std::string(assessments[score - 1]) + "\nScore: " + std::to_string(score);
}

std::string SyntheticBackend::aspect_prompts(const ChatRequest& request, std::uint64_t h) const {
  static const std::vector<std::string> forms{
      "What is the focus and contribution of the paper on {}?",
      "What are the strengths of the proposed approach, particularly in terms of {}?",
      "What are the weaknesses of the paper regarding its {}?",
      "Do you have any concerns or suggestions for improving the {}?",
  };
  const auto paper = between_last(request.last_user_content(), "Paper:\n",
                                  "\n\nQuestions to address:");
  const auto topics = topics_of(paper);
  Rng rng(h);
  std::vector<std::string> questions;
  for (std::size_t i = 0; i < forms.size(); ++i) {
    std::string kw = "presentation";
    if (!topics.empty()) {
      const auto& topic = topics[rng.uniform_index(topics.size())];
      kw = topic.keywords[rng.uniform_index(topic.keywords.size())];
    }
    auto q = forms[i];
    q.replace(q.find("{}"), 2, kw);
    questions.push_back(std::move(q));
  }
  return numbered(questions);
}

std::string SyntheticBackend::review(const ChatRequest& request, std::uint64_t h) const {
  const auto& content = request.last_user_content();
  auto paper = between_last(content, "Paper:\n", "\n\nQuestions to address:");
  if (paper.find("\n\nReview:") != std::string::npos) paper = paper.substr(0, paper.find("\n\nReview:"));
  const auto questions_block = content.find("Questions to address:\n") == std::string::npos
                                   ? std::string{}
                                   : between_last(content, "Questions to address:\n", "\n\nReview:");
  const auto sentences = prose_sentences(paper);
  Rng rng(h);

  std::string out = "Summary Of The Paper\n";
  for (std::size_t i = 0; i < std::min<std::size_t>(2, sentences.size()); ++i)
    out += (i ? " " : "") + sentences[i];

  out += "\n\nStrengths And Weaknesses\n";
  std::vector<std::string> questions;
  std::istringstream lines(questions_block);
  for (std::string line; std::getline(lines, line);) {
    auto q = text::trim(line);
    const auto dot = q.find_first_not_of("0123456789");
    if (dot != std::string::npos && dot > 0 && (q[dot] == '.' || q[dot] == ')'))
      q = text::trim(q.substr(dot + 1));
    if (!q.empty()) questions.push_back(std::move(q));
  }
  if (questions.empty() || sentences.empty()) {
    for (int i = 0; i < 3 && !sentences.empty(); ++i)
      out += sentences[rng.uniform_index(sentences.size())] + " ";
    out += "The paper is well written and the method is technically sound.";
    return out;
  }
  for (const auto& q : questions) {
    const auto qk = keywords(q);
    std::size_t best = rng.uniform_index(sentences.size());
    std::size_t best_overlap = 0;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      const auto sk = text::tokenize(sentences[i]);
      std::size_t overlap = 0;
      for (const auto& k : qk) overlap += std::count(sk.begin(), sk.end(), k) > 0 ? 1 : 0;
      if (overlap > best_overlap) {
        best = i;
        best_overlap = overlap;
      }
    }
    out += "Regarding the " + (qk.empty() ? std::string("paper") : qk.back()) + ": " +
           sentences[best] + "\n";
  }
  return text::trim(out);
}

}  // namespace revgen
