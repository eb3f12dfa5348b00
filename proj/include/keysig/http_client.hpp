#pragma once

// cpp-httplib transport and the client factory used by the CLI.
//
// base_url forms:
//   http://host[:port]/path     real endpoint (https:// when built with
//                               CPPHTTPLIB_OPENSSL_SUPPORT)
//   mock://<kind>[?n=N]         built-in deterministic mock, no network:
//     echo-last?n=N        last N prompt words
//     keyphrases?n=N       first N document words + listed keyphrases
//     first-sentences?n=N  first N document sentences
//     echo-text            the document region verbatim
//     empty                always ""
//     fail                 always a transport error

#include <charconv>
#include <memory>
#include <string>
#include <string_view>

#include <httplib.h>

#include "keysig/error.hpp"
#include "keysig/llm_client.hpp"

namespace keysig {

struct ParsedUrl {
  std::string scheme_host_port;  // "http://host:port"
  std::string path;              // "/v1/complete"
};

inline ParsedUrl parse_url(std::string_view url) {
  const auto sep = url.find("://");
  if (sep == std::string_view::npos) throw UsageError("invalid base_url \"" + std::string(url) + "\"");
  const auto slash = url.find('/', sep + 3);
  ParsedUrl out;
  out.scheme_host_port = std::string(url.substr(0, slash));
  out.path = slash == std::string_view::npos ? "/" : std::string(url.substr(slash));
  return out;
}

inline HttpTransport make_http_transport(const LLMEndpointConfig& cfg) {
  const ParsedUrl url = parse_url(cfg.base_url);
  const auto timeout = cfg.timeout;
  return [url, timeout](const std::string& body,
                        const std::map<std::string, std::string>& headers) {
    httplib::Client cli(url.scheme_host_port);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers h;
    for (const auto& [k, v] : headers)
      if (k != "Content-Type") h.emplace(k, v);
    auto res = cli.Post(url.path, h, body, "application/json");
    HttpReply reply;
    if (!res) {
      reply.transport_error = httplib::to_string(res.error());
      return reply;
    }
    reply.status = res->status;
    reply.body = res->body;
    return reply;
  };
}

inline std::size_t mock_param(std::string_view query, std::size_t fallback) {
  const auto at = query.find("n=");
  if (at == std::string_view::npos) return fallback;
  std::size_t v = fallback;
  const auto digits = query.substr(at + 2);
  const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (res.ec != std::errc{}) throw UsageError("bad mock parameter in \"" + std::string(query) + "\"");
  return v;
}

inline std::unique_ptr<MockClient> make_mock_client(std::string_view url) {
  auto rest = url.substr(std::string_view("mock://").size());
  const auto q = rest.find('?');
  const std::string_view kind = rest.substr(0, q);
  const std::string_view query = q == std::string_view::npos ? "" : rest.substr(q + 1);
  if (kind == "echo-last") return std::make_unique<MockClient>(mock::echo_last_words(mock_param(query, 10)));
  if (kind == "keyphrases") return std::make_unique<MockClient>(mock::keyphrase_echo(mock_param(query, 20)));
  if (kind == "first-sentences")
    return std::make_unique<MockClient>(mock::first_sentences(mock_param(query, 2)));
  if (kind == "echo-text") return std::make_unique<MockClient>(mock::echo_text());
  if (kind == "empty") return std::make_unique<MockClient>(mock::constant(""));
  if (kind == "fail")
    return std::make_unique<MockClient>([](const CompletionRequest&) -> std::string {
      throw TransportError("mock endpoint failure", 1);
    });
  throw UsageError("unknown mock endpoint \"" + std::string(url) + "\"");
}

inline std::unique_ptr<CompletionClient> make_client(const LLMEndpointConfig& cfg) {
  cfg.validate();
  if (cfg.base_url.rfind("mock://", 0) == 0) return make_mock_client(cfg.base_url);
  return std::make_unique<JsonCompletionClient>(cfg, make_http_transport(cfg));
}

}  // namespace keysig
