#pragma once

// Completion client abstraction.
//
// Wire protocol (one generic JSON-over-HTTP schema):
//   POST <base_url>
//   Authorization: Bearer $<auth_env_var>
//   {"model":str,"prompt":str,"max_tokens":int,"temperature":float}
// Response body: JSON whose completion text sits at `text_pointer`
// (default "/text"); an optional "usage" object carries
// {"prompt_tokens","completion_tokens"}.
//
// The network transport lives in http_client.hpp; everything here is
// transport-agnostic so the retry policy can be tested without sockets.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "keysig/error.hpp"
#include "keysig/jsonl.hpp"
#include "keysig/utf8.hpp"

namespace keysig {

struct CompletionRequest {
  std::string prompt;
  std::size_t max_tokens = 512;
  double temperature = 0.0;
};

struct Usage {
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

struct CompletionResponse {
  std::string text;
  Usage usage;
};

// Implementations must be safe to call from several threads at once.
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual CompletionResponse complete(const CompletionRequest& req) = 0;
};

struct LLMEndpointConfig {
  std::string base_url;
  std::string model_id;
  std::string auth_env_var;
  std::chrono::milliseconds timeout{60'000};
  int retries = 3;
  std::size_t max_in_flight = 1;
  std::chrono::milliseconds backoff{500};
  std::chrono::milliseconds min_interval{0};
  std::string text_pointer = "/text";

  void validate() const {
    if (base_url.empty()) throw UsageError("endpoint config: base_url is required");
    if (retries < 0) throw UsageError("endpoint config: retries must be >= 0");
    if (max_in_flight == 0) throw UsageError("endpoint config: max_in_flight must be >= 1");
    if (timeout.count() <= 0) throw UsageError("endpoint config: timeout_s must be positive");
  }
};

// Endpoint config file:
//   {"base_url","model_id","auth_env_var","timeout_s","retries","max_in_flight"}
// plus optional "backoff_ms", "min_interval_ms", "text_pointer".
inline LLMEndpointConfig endpoint_config_from_json(const Json& j) {
  LLMEndpointConfig cfg;
  try {
    cfg.base_url = j.at("base_url").get<std::string>();
    cfg.model_id = j.value("model_id", std::string{});
    cfg.auth_env_var = j.value("auth_env_var", std::string{});
    cfg.timeout = std::chrono::milliseconds(
        static_cast<long long>(j.value("timeout_s", 60.0) * 1000.0));
    cfg.retries = j.value("retries", 3);
    cfg.max_in_flight = j.value("max_in_flight", std::size_t{1});
    cfg.backoff = std::chrono::milliseconds(j.value("backoff_ms", 500));
    cfg.min_interval = std::chrono::milliseconds(j.value("min_interval_ms", 0));
    cfg.text_pointer = j.value("text_pointer", std::string{"/text"});
  } catch (const Json::exception& e) {
    throw DataError(std::string("endpoint config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline LLMEndpointConfig load_endpoint_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("no such file: " + path.string());
  try {
    return endpoint_config_from_json(Json::parse(read_file(path)));
  } catch (const Json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// One HTTP exchange. status == 0 means the request never produced a
// response (connection failure or timeout).
struct HttpReply {
  int status = 0;
  std::string body;
  std::string transport_error;
};

using HttpTransport =
    std::function<HttpReply(const std::string& body,
                            const std::map<std::string, std::string>& headers)>;

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void sleep_for(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

inline bool is_transient(const HttpReply& r) {
  return r.status == 0 || r.status == 408 || r.status == 429 || r.status >= 500;
}

// Generic JSON completion client over an arbitrary transport. Transient
// failures (no response, 408, 429, 5xx) are retried up to `retries` times
// with exponential backoff; auth and other non-2xx statuses fail at once.
class JsonCompletionClient : public CompletionClient {
 public:
  JsonCompletionClient(LLMEndpointConfig cfg, HttpTransport transport,
                       Sleeper sleeper = sleep_for)
      : cfg_(std::move(cfg)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
    cfg_.validate();
  }

  CompletionResponse complete(const CompletionRequest& req) override {
    std::map<std::string, std::string> headers{{"Content-Type", "application/json"}};
    if (!cfg_.auth_env_var.empty()) {
      const char* secret = std::getenv(cfg_.auth_env_var.c_str());
      if (secret == nullptr || *secret == '\0')
        throw AuthError("environment variable " + cfg_.auth_env_var + " is not set", 0);
      headers["Authorization"] = std::string("Bearer ") + secret;
    }
    Json body;
    body["model"] = cfg_.model_id;
    body["prompt"] = req.prompt;
    body["max_tokens"] = req.max_tokens;
    body["temperature"] = req.temperature;
    const std::string payload = body.dump(-1, ' ', false, Json::error_handler_t::replace);

    const int max_attempts = cfg_.retries + 1;
    HttpReply reply;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
      {
        InFlightSlot slot(*this);
        reply = transport_(payload, headers);
      }
      if (reply.status >= 200 && reply.status < 300) return parse_reply(reply, attempt);
      if (reply.status == 401 || reply.status == 403)
        throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(reply.status) +
                            ")",
                        attempt);
      if (!is_transient(reply)) throw HttpStatusError(reply.status, reply.body, attempt);
      if (attempt < max_attempts) sleeper_(cfg_.backoff * (1LL << (attempt - 1)));
    }
    if (reply.status == 0)
      throw TransportError("request failed: " + reply.transport_error, max_attempts);
    throw HttpStatusError(reply.status, reply.body, max_attempts);
  }

  const LLMEndpointConfig& config() const noexcept { return cfg_; }

 private:
  // Caps concurrent requests at max_in_flight and spaces request starts by
  // at least min_interval.
  class InFlightSlot {
   public:
    explicit InFlightSlot(JsonCompletionClient& c) : c_(c) {
      std::unique_lock lock(c_.mu_);
      c_.cv_.wait(lock, [&] { return c_.in_flight_ < c_.cfg_.max_in_flight; });
      ++c_.in_flight_;
      if (c_.cfg_.min_interval.count() > 0) {
        const auto now = std::chrono::steady_clock::now();
        const auto ready = c_.last_start_ + c_.cfg_.min_interval;
        c_.last_start_ = std::max(now, ready);
        if (ready > now) {
          lock.unlock();
          std::this_thread::sleep_until(ready);
        }
      }
    }
    ~InFlightSlot() {
      {
        std::lock_guard lock(c_.mu_);
        --c_.in_flight_;
      }
      c_.cv_.notify_one();
    }
    InFlightSlot(const InFlightSlot&) = delete;
    InFlightSlot& operator=(const InFlightSlot&) = delete;

   private:
    JsonCompletionClient& c_;
  };

  CompletionResponse parse_reply(const HttpReply& reply, int attempt) const {
    Json j;
    try {
      j = Json::parse(reply.body);
    } catch (const Json::parse_error&) {
      throw TransportError("response is not JSON", attempt);
    }
    CompletionResponse out;
    const Json::json_pointer ptr(cfg_.text_pointer);
    if (!j.contains(ptr) || !j.at(ptr).is_string())
      throw TransportError("response has no string at " + cfg_.text_pointer, attempt);
    out.text = j.at(ptr).get<std::string>();
    if (auto it = j.find("usage"); it != j.end() && it->is_object()) {
      out.usage.prompt_tokens = it->value("prompt_tokens", std::size_t{0});
      out.usage.completion_tokens = it->value("completion_tokens", std::size_t{0});
    }
    return out;
  }

  LLMEndpointConfig cfg_;
  HttpTransport transport_;
  Sleeper sleeper_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t in_flight_ = 0;
  std::chrono::steady_clock::time_point last_start_{};
};

// ---------------------------------------------------------------------------
// Deterministic mock clients

class MockClient : public CompletionClient {
 public:
  using Responder = std::function<std::string(const CompletionRequest&)>;

  explicit MockClient(Responder fn) : fn_(std::move(fn)) {}

  CompletionResponse complete(const CompletionRequest& req) override {
    ++calls_;
    CompletionResponse r;
    r.text = fn_(req);
    r.usage.prompt_tokens = count_words(req.prompt);
    r.usage.completion_tokens = count_words(r.text);
    return r;
  }

  std::size_t calls() const noexcept { return calls_.load(); }

  static std::size_t count_words(std::string_view s) {
    std::size_t n = 0;
    bool in = false;
    for (char c : s) {
      const bool sp = utf8::is_space(c);
      if (!sp && !in) ++n;
      in = !sp;
    }
    return n;
  }

 private:
  Responder fn_;
  std::atomic<std::size_t> calls_{0};
};

namespace mock {

inline std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (utf8::is_space(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// The document region of a rendered prompt: everything after the first line
// up to the blank line that opens the instruction ("\n\nPlease"), or the
// last blank line when there is none. The per-model template files all use
// this layout.
inline std::string_view text_section(std::string_view prompt) {
  const auto first_nl = prompt.find('\n');
  if (first_nl == std::string_view::npos) return prompt;
  const auto body = prompt.substr(first_nl + 1);
  auto cut = body.rfind("\n\nPlease");
  if (cut == std::string_view::npos) cut = body.rfind("\n\n");
  return cut == std::string_view::npos ? body : body.substr(0, cut);
}

inline constexpr std::string_view kKeyphraseMarkers[] = {
    "Consider include the following information:",
    "Here are a few keyphrases from the article:",
};

// Keyphrases listed in the prompt after a known marker, up to end of line.
inline std::vector<std::string> listed_keyphrases(std::string_view prompt) {
  for (auto marker : kKeyphraseMarkers) {
    const auto at = prompt.rfind(marker);
    if (at == std::string_view::npos) continue;
    auto rest = prompt.substr(at + marker.size());
    rest = rest.substr(0, rest.find('\n'));
    if (const auto inst = rest.find("[/INST]"); inst != std::string_view::npos)
      rest = rest.substr(0, inst);
    std::string line = utf8::collapse_whitespace(rest);
    while (!line.empty() && line.back() == '.') line.pop_back();
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= line.size() && !line.empty()) {
      const auto comma = line.find(", ", pos);
      const auto item = line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                    : comma - pos);
      if (!item.empty()) out.push_back(item);
      if (comma == std::string::npos) break;
      pos = comma + 2;
    }
    return out;
  }
  return {};
}

inline MockClient::Responder echo_last_words(std::size_t n) {
  return [n](const CompletionRequest& req) {
    auto w = words(req.prompt);
    if (w.size() > n) w.erase(w.begin(), w.end() - static_cast<std::ptrdiff_t>(n));
    return join(w, " ");
  };
}

// First `lead` words of the document, followed by every keyphrase listed in
// the prompt.
inline MockClient::Responder keyphrase_echo(std::size_t lead) {
  return [lead](const CompletionRequest& req) {
    auto w = words(text_section(req.prompt));
    if (w.size() > lead) w.resize(lead);
    for (auto& k : listed_keyphrases(req.prompt)) w.push_back(std::move(k));
    return join(w, " ");
  };
}

// First n sentences (split after . ! ?) of the document region.
inline MockClient::Responder first_sentences(std::size_t n) {
  return [n](const CompletionRequest& req) {
    const auto w = words(text_section(req.prompt));
    std::vector<std::string> out;
    std::size_t sentences = 0;
    for (const auto& word : w) {
      if (sentences == n) break;
      out.push_back(word);
      const char last = word.back();
      if (last == '.' || last == '!' || last == '?') ++sentences;
    }
    return join(out, " ");
  };
}

inline MockClient::Responder echo_text() {
  return [](const CompletionRequest& req) {
    return utf8::collapse_whitespace(text_section(req.prompt));
  };
}

inline MockClient::Responder constant(std::string text) {
  return [text = std::move(text)](const CompletionRequest&) { return text; };
}

}  // namespace mock

}  // namespace keysig
