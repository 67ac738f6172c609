#include "revgen/backend.hpp"

#include <algorithm>
#include <cmath>

#include "revgen/error.hpp"

namespace revgen {

const std::string& ChatRequest::last_user_content() const {
  static const std::string empty;
  for (auto it = turns.rbegin(); it != turns.rend(); ++it)
    if (it->role == Role::User) return it->content;
  return empty;
}

std::string to_string(FinishReason r) {
  switch (r) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Error: break;
  }
  return "error";
}

FinishReason parse_finish_reason(std::string_view s) {
  if (s == "stop" || s == "eos" || s.empty()) return FinishReason::Stop;
  if (s == "length" || s == "max_tokens") return FinishReason::Length;
  return FinishReason::Error;
}

BackendProfile chat_profile_4k(std::string name) { return {std::move(name), 4096, false}; }

BackendProfile long_context_profile_32k(std::string name) {
  return {std::move(name), 32768, false};
}

std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

std::int64_t prompt_budget(const BackendProfile& profile, int max_output_tokens) {
  const auto usable =
      static_cast<std::int64_t>(std::floor(static_cast<double>(profile.context_window) *
                                           (1.0 - kContextReserve)));
  return usable - max_output_tokens;
}

std::string render_llama2(const ChatRequest& request) {
  std::string out;
  bool first_user = true;
  for (const auto& turn : request.turns) {
    if (turn.role == Role::User) {
      out += "[INST] ";
      if (first_user && !request.system.empty()) {
        out += "<<SYS>> " + request.system + " <</SYS>>\n";
      }
      first_user = false;
      out += turn.content + "[/INST]";
    } else {
      out += " " + turn.content + " ";
    }
  }
  return out;
}

std::int64_t request_tokens(const ChatRequest& request, const TokenEstimator& estimator) {
  return estimator(render_llama2(request));
}

// ---------------------------------------------------------------------------

Backend::Backend(BackendProfile profile, TokenEstimator estimator)
    : profile_(std::move(profile)), estimator_(std::move(estimator)) {
  if (profile_.context_window <= 0) throw InvalidInput("context_window must be positive");
  if (!estimator_) estimator_ = estimate_tokens;
}

void Backend::check_request(const ChatRequest& request) const {
  if (request.turns.empty() || request.turns.back().role != Role::User)
    throw InvalidInput("the last turn of a chat request must come from the user");
  if (request.max_output_tokens <= 0) throw InvalidInput("max_output_tokens must be positive");
  if (!(request.temperature >= 0.0)) throw InvalidInput("temperature must be >= 0");
  const auto needed = request_tokens(request, estimator_);
  const auto budget = prompt_budget(profile_, request.max_output_tokens);
  if (needed > budget) {
    throw ContextOverflow("request needs ~" + std::to_string(needed) + " tokens; " +
                          profile_.name + " allows " + std::to_string(budget));
  }
}

bool Backend::fits(const ChatRequest& request) const {
  return request_tokens(request, estimator_) <=
         prompt_budget(profile_, request.max_output_tokens);
}

Completion Backend::complete(const ChatRequest& request) {
  check_request(request);
  return do_complete(request);
}

std::vector<Embedding> Backend::embed(const std::vector<std::string>& texts) {
  if (!profile_.supports_embeddings)
    throw UnsupportedOperation(profile_.name + " does not provide embeddings");
  if (texts.empty()) throw InvalidInput("embed needs at least one text");
  auto vectors = do_embed(texts);
  if (vectors.size() != texts.size())
    throw TransportError("backend returned " + std::to_string(vectors.size()) +
                         " embeddings for " + std::to_string(texts.size()) + " texts");
  return vectors;
}

std::vector<Embedding> Backend::do_embed(const std::vector<std::string>&) {
  throw UnsupportedOperation(profile_.name + " does not provide embeddings");
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw InvalidInput("embedding dimensions differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace revgen
