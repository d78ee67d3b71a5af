#pragma once

// Chat-completion client for OpenAI-compatible endpoints, plus the reply
// parser that turns free-form model text into a chosen option. One request
// carries one prompt at temperature 0. Transport errors and 5xx responses
// are retried with exponential backoff; 4xx and malformed bodies are not.

#include <cctype>
#include <chrono>
#include <cstdint>
#include <string>
#include <thread>
#include <utility>

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "quizsim/errors.hpp"

namespace quizsim {

struct ParsedReply {
  int chosen_index = -1;
  std::string rationale;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline bool iequal_prefix(const std::string& line, const char* prefix) {
  std::size_t i = 0;
  while (prefix[i] != '\0') {
    if (i >= line.size() ||
        std::toupper(static_cast<unsigned char>(line[i])) != prefix[i])
      return false;
    ++i;
  }
  return true;
}

// Case-insensitive substring search; `needle` must be uppercase.
inline std::size_t ifind(const std::string& haystack, const std::string& needle) {
  if (needle.size() > haystack.size()) return std::string::npos;
  for (std::size_t at = 0; at + needle.size() <= haystack.size(); ++at) {
    std::size_t j = 0;
    while (j < needle.size() &&
           std::toupper(static_cast<unsigned char>(haystack[at + j])) == needle[j])
      ++j;
    if (j == needle.size()) return at;
  }
  return std::string::npos;
}

}  // namespace detail

// Canonical reply format; parse_llm_reply inverts it exactly.
inline std::string format_reply(int chosen_index, const std::string& rationale) {
  std::string out = "ANSWER: ";
  out += static_cast<char>('A' + chosen_index);
  out += "\nRATIONALE: ";
  out += rationale;
  return out;
}

// Extracts (chosen option, rationale) from a model reply.
//
// Primary rule: the first line starting with "ANSWER:" (case-insensitive,
// leading whitespace allowed) names the option; a letter beyond the option
// count is an error, not a miss. The rationale is everything after the first
// "RATIONALE:" marker, or the remainder after the answer line.
//
// Fallback for free prose: the first standalone option letter (punctuation
// or line boundaries around it). A bare lowercase "a" is skipped — as an
// English article it produces false positives — but punctuated forms like
// "(a)" still count. With no candidate at all, the reply is unparseable.
inline ParsedReply parse_llm_reply(const std::string& text, int n_options) {
  if (n_options < 2) throw ValidationError("a question needs at least 2 options");

  auto letter_to_index = [&](char c) { return std::toupper(static_cast<unsigned char>(c)) - 'A'; };

  // Pass 1: explicit ANSWER: line.
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    std::string stripped = detail::trim(line);
    if (detail::iequal_prefix(stripped, "ANSWER")) {
      std::size_t colon = stripped.find(':');
      if (colon != std::string::npos && detail::trim(stripped.substr(0, colon)).size() == 6) {
        std::string rest = stripped.substr(colon + 1);
        int index = -1;
        for (char c : rest) {
          if (std::isalpha(static_cast<unsigned char>(c))) {
            index = letter_to_index(c);
            break;
          }
          if (!std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != '[' &&
              c != '*' && c != '"' && c != '\'')
            break;
        }
        if (index < 0) throw ParseError("answer line carries no option letter: '" + stripped + "'");
        if (index >= n_options)
          throw ParseError("answer letter '" + std::string(1, static_cast<char>('A' + index)) +
                           "' is out of range for " + std::to_string(n_options) + " options");

        ParsedReply reply;
        reply.chosen_index = index;
        const std::string marker = "RATIONALE:";
        // Prefer an explicit marker. One following the answer letter (same
        // line or later) captures through the end of the reply; one before
        // the answer line stops at that line.
        const std::string after = text.substr(pos + line.find(':') + 1);
        const std::string before = text.substr(0, pos);
        if (std::size_t at = detail::ifind(after, marker); at != std::string::npos) {
          reply.rationale = detail::trim(after.substr(at + marker.size()));
        } else if (at = detail::ifind(before, marker); at != std::string::npos) {
          reply.rationale = detail::trim(before.substr(at + marker.size()));
        } else {
          reply.rationale = detail::trim(
              eol == std::string::npos ? std::string() : text.substr(eol + 1));
        }
        return reply;
      }
    }
    if (eol == std::string::npos) break;
    pos = eol + 1;
  }

  // Pass 2: first standalone letter within range. Letters inside
  // contractions ("I'd", "it's") are parts of words, not options, but a
  // quoted letter ('B') still counts.
  auto in_contraction = [&text](std::size_t i, int direction) {
    const std::size_t apostrophe = i + static_cast<std::size_t>(direction);
    const std::size_t beyond = i + static_cast<std::size_t>(2 * direction);
    return apostrophe < text.size() && text[apostrophe] == '\'' && beyond < text.size() &&
           std::isalnum(static_cast<unsigned char>(text[beyond]));
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (!std::isalpha(static_cast<unsigned char>(c))) continue;
    const bool left_ok = i == 0 || (!std::isalnum(static_cast<unsigned char>(text[i - 1])) &&
                                    !in_contraction(i, -1));
    const bool right_ok = i + 1 >= text.size() ||
                          (!std::isalnum(static_cast<unsigned char>(text[i + 1])) &&
                           !in_contraction(i, +1));
    if (!left_ok || !right_ok) continue;
    int index = letter_to_index(c);
    if (index < 0 || index >= n_options) continue;
    if (c == 'a') {
      // Accept lowercase 'a' only when visibly marked as an option.
      const bool punctuated =
          (i > 0 && (text[i - 1] == '(' || text[i - 1] == '[' || text[i - 1] == '"' ||
                     text[i - 1] == '\'')) ||
          (i + 1 < text.size() && (text[i + 1] == ')' || text[i + 1] == ']' ||
                                   text[i + 1] == '.' || text[i + 1] == ':'));
      if (!punctuated) continue;
    }
    ParsedReply reply;
    reply.chosen_index = index;
    reply.rationale = detail::trim(text);
    return reply;
  }

  throw ParseError("no option letter found in reply");
}

struct LlmConfig {
  std::string endpoint = "https://api.openai.com/v1";
  std::string model = "gpt-4";
  std::string api_key;  // sent as a bearer token when non-empty; never logged
  double timeout_seconds = 60.0;
  int max_retries = 3;
  int retry_backoff_ms = 500;  // doubled per attempt
};

// Issues single-prompt chat completions. Virtual so tests and the pipeline
// can substitute canned clients.
class LlmClient {
public:
  explicit LlmClient(LlmConfig config) : config_(std::move(config)) {
    const std::string& url = config_.endpoint;
    std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
      throw ValidationError("endpoint '" + url + "' lacks a scheme");
    std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      base_url_ = url;
    } else {
      base_url_ = url.substr(0, path_start);
      path_prefix_ = url.substr(path_start);
      while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (url.rfind("https://", 0) == 0)
      throw BackendError("endpoint '" + url + "' needs TLS, which this build lacks; use the CLI "
                         "build or an http:// endpoint");
#endif
  }

  virtual ~LlmClient() = default;

  const LlmConfig& config() const { return config_; }

  // One prompt in, assistant text out. Throws BackendError after retries.
  virtual std::string complete(const std::string& prompt) {
    nlohmann::json body = {
        {"model", config_.model},
        {"temperature", 0},
        {"messages", nlohmann::json::array({nlohmann::json{{"role", "user"},
                                                           {"content", prompt}}})},
    };
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        const auto delay = std::chrono::milliseconds(
            static_cast<std::int64_t>(config_.retry_backoff_ms) * (1LL << (attempt - 1)));
        std::this_thread::sleep_for(delay);
      }

      httplib::Client client(base_url_);
      client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
      client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
      httplib::Headers headers;
      if (!config_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + config_.api_key);

      auto res = client.Post(path_prefix_ + "/chat/completions", headers, payload,
                             "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;  // retryable
      }
      if (res->status >= 500) {
        last_error = "server error: HTTP " + std::to_string(res->status);
        continue;  // retryable
      }
      if (res->status < 200 || res->status >= 300)
        throw BackendError("endpoint rejected the request: HTTP " + std::to_string(res->status) +
                           " " + res->body.substr(0, 200));

      nlohmann::json reply;
      try {
        reply = nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("completion body is not JSON: ") + e.what());
      }
      try {
        std::string content = reply.at("choices").at(0).at("message").at("content");
        if (detail::trim(content).empty()) throw BackendError("completion is empty");
        return content;
      } catch (const nlohmann::json::exception&) {
        throw BackendError("completion body lacks choices[0].message.content");
      }
    }
    throw BackendError("request failed after " + std::to_string(config_.max_retries + 1) +
                       " attempts; last: " + last_error);
  }

private:
  LlmConfig config_;
  std::string base_url_;
  std::string path_prefix_;
};

}  // namespace quizsim
