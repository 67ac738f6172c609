#include "revgen/http_backend.hpp"

#include <algorithm>
#include <thread>

#include <httplib.h>

#include "revgen/error.hpp"

namespace revgen {

using nlohmann::json;

ParsedUrl parse_base_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("base_url needs a scheme: " + base_url);
  const auto scheme = base_url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw ConfigError("unsupported URL scheme: " + scheme);
  const auto path_start = base_url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.scheme_host_port = base_url.substr(0, path_start);
  if (out.scheme_host_port.size() <= scheme_end + 3)
    throw ConfigError("base_url has no host: " + base_url);
  if (path_start != std::string::npos) {
    out.path_prefix = base_url.substr(path_start);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  }
  return out;
}

namespace {

class HttplibTransport : public HttpTransport {
 public:
  HttplibTransport(ParsedUrl url, std::chrono::seconds timeout)
      : url_(std::move(url)), timeout_(timeout) {}

  HttpResponse post(const std::string& path, const std::string& body,
                    const HttpHeaders& headers) override {
    // One client per call: httplib clients are not meant to be shared across threads.
    httplib::Client client(url_.scheme_host_port);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(url_.path_prefix + path, h, body, "application/json");
    if (!res) throw TransportFailure("HTTP request failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
  }

 private:
  ParsedUrl url_;
  std::chrono::seconds timeout_;
};

bool transient(int status) { return status == 429 || (status >= 500 && status <= 599); }

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   std::chrono::seconds timeout) {
  return std::make_unique<HttplibTransport>(parse_base_url(base_url), timeout);
}

std::chrono::milliseconds RetryPolicy::delay_for(int attempt) const {
  auto delay = base_delay;
  for (int i = 0; i < attempt && delay < max_delay; ++i) delay *= 2;
  return std::min(delay, max_delay);
}

json chat_request_body(const ChatRequest& request, const std::string& model) {
  json messages = json::array();
  if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
  for (const auto& t : request.turns) {
    messages.push_back(
        {{"role", t.role == Role::User ? "user" : "assistant"}, {"content", t.content}});
  }
  return {{"model", model},
          {"messages", std::move(messages)},
          {"temperature", request.temperature},
          {"max_tokens", request.max_output_tokens}};
}

Completion parse_chat_response(const std::string& body) {
  try {
    const auto j = json::parse(body);
    const auto& choice = j.at("choices").at(0);
    Completion c;
    c.text = choice.at("message").at("content").get<std::string>();
    const auto& reason = choice.value("finish_reason", json());
    c.finish_reason = parse_finish_reason(reason.is_string() ? reason.get<std::string>() : "");
    if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
      c.usage.input_tokens = u->value("prompt_tokens", std::int64_t{0});
      c.usage.output_tokens = u->value("completion_tokens", std::int64_t{0});
    }
    return c;
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed chat response: ") + e.what());
  }
}

json embedding_request_body(const std::vector<std::string>& texts, const std::string& model) {
  return {{"model", model}, {"input", texts}};
}

std::vector<Embedding> parse_embedding_response(const std::string& body, std::size_t expected) {
  try {
    const auto j = json::parse(body);
    std::vector<Embedding> out(expected);
    std::vector<bool> seen(expected, false);
    std::size_t position = 0;
    for (const auto& item : j.at("data")) {
      const auto index = item.value("index", position);
      ++position;
      if (index >= expected || seen[index])
        throw TransportError("embedding response has a bad index " + std::to_string(index));
      out[index] = item.at("embedding").get<Embedding>();
      seen[index] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
      throw TransportError("embedding response is missing entries");
    return out;
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed embedding response: ") + e.what());
  }
}

HttpBackend::HttpBackend(BackendProfile profile, std::unique_ptr<HttpTransport> transport,
                         HttpBackendOptions options, TokenEstimator estimator)
    : Backend(std::move(profile), std::move(estimator)),
      transport_(std::move(transport)),
      options_(std::move(options)),
      slots_(std::clamp(options_.max_concurrency, 1, 1024)) {
  if (!transport_) throw InvalidInput("HttpBackend needs a transport");
  if (options_.retry.retry_limit < 0) throw ConfigError("retry_limit must be >= 0");
  if (!options_.sleep) options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string HttpBackend::post_with_retry(const std::string& path, const std::string& body) {
  HttpHeaders headers{{"Accept", "application/json"}};
  if (!options_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + options_.api_key);

  slots_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{slots_};

  std::string last_error;
  for (int attempt = 0; attempt <= options_.retry.retry_limit; ++attempt) {
    if (attempt > 0) options_.sleep(options_.retry.delay_for(attempt - 1));
    ++attempts_;
    try {
      auto res = transport_->post(path, body, headers);
      if (res.status >= 200 && res.status < 300) return res.body;
      if (!transient(res.status)) {
        throw BackendRefusal("HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 500));
      }
      last_error = "HTTP " + std::to_string(res.status);
    } catch (const TransportFailure& e) {
      last_error = e.what();
    }
  }
  throw TransportError("giving up after " + std::to_string(options_.retry.retry_limit + 1) +
                       " attempts: " + last_error);
}

Completion HttpBackend::do_complete(const ChatRequest& request) {
  const auto model = request.model_tag.empty() ? options_.model : request.model_tag;
  return parse_chat_response(post_with_retry(options_.chat_path, chat_request_body(request, model).dump()));
}

std::vector<Embedding> HttpBackend::do_embed(const std::vector<std::string>& texts) {
  const auto& model = options_.embedding_model.empty() ? options_.model : options_.embedding_model;
  return parse_embedding_response(
      post_with_retry(options_.embeddings_path, embedding_request_body(texts, model).dump()),
      texts.size());
}

}  // namespace revgen
