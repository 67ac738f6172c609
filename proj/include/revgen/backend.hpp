#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace revgen {

enum class Role { User, Assistant };

struct ChatTurn {
  Role role = Role::User;
  std::string content;
  friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

/// Default sampling temperatures; evaluation calls must be reproducible.
inline constexpr double kGenerationTemperature = 0.7;
inline constexpr double kEvaluationTemperature = 0.0;

struct ChatRequest {
  std::string system;
  std::vector<ChatTurn> turns;
  double temperature = kEvaluationTemperature;
  int max_output_tokens = 512;
  std::string model_tag;
  /// Logical call site ("pge.generate", "review", ...). Adapters ignore it;
  /// mocks and logs use it.
  std::string task;

  /// Content of the final user turn, or empty.
  const std::string& last_user_content() const;
  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

enum class FinishReason { Stop, Length, Error };
std::string to_string(FinishReason r);
FinishReason parse_finish_reason(std::string_view s);

struct Usage {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
};

struct Completion {
  std::string text;
  FinishReason finish_reason = FinishReason::Stop;
  Usage usage;
};

struct BackendProfile {
  std::string name;
  std::int64_t context_window = 4096;
  bool supports_embeddings = false;
};

/// Profiles of the two context regimes the pipeline targets.
BackendProfile chat_profile_4k(std::string name = "chat-4k");
BackendProfile long_context_profile_32k(std::string name = "long-chat-32k");

using Embedding = std::vector<float>;
using TokenEstimator = std::function<std::int64_t(std::string_view)>;

/// ceil(bytes / 4). Monotone in prefixes and subadditive up to +1.
std::int64_t estimate_tokens(std::string_view text);

/// Fraction of the context window never handed out, absorbing estimator error.
inline constexpr double kContextReserve = 0.05;

/// Tokens available for the rendered prompt:
/// floor(window * (1 - reserve)) - max_output_tokens.
std::int64_t prompt_budget(const BackendProfile& profile, int max_output_tokens);

/// Llama-2 chat serialization: "[INST] <<SYS>> system <</SYS>>\nuser [/INST]"
/// with assistant turns interleaved. This is the length every budget check
/// measures, so adapters that send role-structured JSON are never longer.
std::string render_llama2(const ChatRequest& request);

std::int64_t request_tokens(const ChatRequest& request,
                            const TokenEstimator& estimator = estimate_tokens);

/// Chat completion and embedding service. Public calls validate the request
/// and enforce the context budget before the subclass sees it.
class Backend {
 public:
  explicit Backend(BackendProfile profile, TokenEstimator estimator = estimate_tokens);
  virtual ~Backend() = default;
  Backend(const Backend&) = delete;
  Backend& operator=(const Backend&) = delete;

  Completion complete(const ChatRequest& request);
  std::vector<Embedding> embed(const std::vector<std::string>& texts);

  /// Throws InvalidInput for a malformed request and ContextOverflow when the
  /// rendered request does not fit this profile.
  void check_request(const ChatRequest& request) const;
  bool fits(const ChatRequest& request) const;

  const BackendProfile& profile() const noexcept { return profile_; }
  const TokenEstimator& estimator() const noexcept { return estimator_; }

 protected:
  virtual Completion do_complete(const ChatRequest& request) = 0;
  virtual std::vector<Embedding> do_embed(const std::vector<std::string>& texts);

 private:
  BackendProfile profile_;
  TokenEstimator estimator_;
};

/// Cosine of two equal-length vectors; 0 when either is all zeros.
double cosine(const Embedding& a, const Embedding& b);

}  // namespace revgen
