#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <semaphore>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "revgen/backend.hpp"

namespace revgen {

struct HttpResponse {
  int status = 0;
  std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// Raised by transports when no HTTP response was obtained at all.
class TransportFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  /// POSTs a JSON body. Throws TransportFailure on connection-level errors.
  virtual HttpResponse post(const std::string& path, const std::string& body,
                            const HttpHeaders& headers) = 0;
};

struct ParsedUrl {
  std::string scheme_host_port;  // "https://api.example.com:443"
  std::string path_prefix;       // "/v1" (no trailing slash)
};
ParsedUrl parse_base_url(const std::string& base_url);

/// cpp-httplib transport. `base_url` may carry a path prefix, e.g.
/// "http://localhost:8000/v1".
std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   std::chrono::seconds timeout);

struct RetryPolicy {
  int retry_limit = 3;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{8000};

  /// base_delay * 2^attempt, capped at max_delay.
  std::chrono::milliseconds delay_for(int attempt) const;
};

struct HttpBackendOptions {
  std::string model;
  std::string embedding_model;
  std::string api_key;  // sent as a Bearer token when non-empty
  std::string chat_path = "/chat/completions";
  std::string embeddings_path = "/embeddings";
  RetryPolicy retry;
  int max_concurrency = 4;
  /// Injected so tests can observe backoff without waiting.
  std::function<void(std::chrono::milliseconds)> sleep;
};

// Wire format (OpenAI-compatible).
nlohmann::json chat_request_body(const ChatRequest& request, const std::string& model);
Completion parse_chat_response(const std::string& body);
nlohmann::json embedding_request_body(const std::vector<std::string>& texts,
                                      const std::string& model);
std::vector<Embedding> parse_embedding_response(const std::string& body,
                                                std::size_t expected);

/// Chat/embedding client with bounded retries and a per-backend concurrency
/// cap. Transient failures (no response, 429, 5xx) are retried with
/// exponential backoff, at most 1 + retry_limit attempts per call; other
/// non-2xx statuses raise BackendRefusal immediately.
class HttpBackend : public Backend {
 public:
  HttpBackend(BackendProfile profile, std::unique_ptr<HttpTransport> transport,
              HttpBackendOptions options, TokenEstimator estimator = estimate_tokens);

  std::size_t attempts_made() const noexcept { return attempts_; }

 protected:
  Completion do_complete(const ChatRequest& request) override;
  std::vector<Embedding> do_embed(const std::vector<std::string>& texts) override;

 private:
  std::string post_with_retry(const std::string& path, const std::string& body);

  std::unique_ptr<HttpTransport> transport_;
  HttpBackendOptions options_;
  std::counting_semaphore<1024> slots_;
  std::atomic<std::size_t> attempts_{0};
};

}  // namespace revgen
