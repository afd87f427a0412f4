#include "smj/oracle/remote.hpp"

#include <cmath>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "smj/core/errors.hpp"
#include "smj/core/text.hpp"

namespace smj::oracle {

namespace {

const nlohmann::json& require_array(const nlohmann::json& body, const char* field, std::size_t n,
                                    const std::string& who) {
  if (!body.is_object() || !body.contains(field) || !body[field].is_array()) {
    throw OracleError(who + ": response lacks array '" + field + "'");
  }
  if (body[field].size() != n) {
    throw OracleError(who + ": '" + field + "' has " + std::to_string(body[field].size()) +
                      " entries for " + std::to_string(n) + " inputs");
  }
  return body[field];
}

double finite_number(const nlohmann::json& v, const std::string& who) {
  if (!v.is_number()) throw OracleError(who + ": expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw OracleError(who + ": non-finite number");
  return d;
}

void require_texts(std::span<const std::string> texts, const char* op) {
  for (const auto& t : texts) {
    if (text::trim(t).empty()) throw PreconditionError(std::string(op) + ": empty text");
  }
}

}  // namespace

HttpEndpoint HttpEndpoint::parse(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint", "missing scheme in '" + url + "'");
  auto slash = url.find('/', scheme + 3);
  HttpEndpoint ep;
  ep.origin = url.substr(0, slash);
  if (slash != std::string::npos) {
    ep.path_prefix = url.substr(slash);
    while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/') ep.path_prefix.pop_back();
  }
  return ep;
}

JsonHttpClient::JsonHttpClient(HttpEndpoint endpoint, HttpOptions options)
    : endpoint_(std::move(endpoint)), options_(std::move(options)) {}

JsonHttpClient::~JsonHttpClient() = default;

nlohmann::json JsonHttpClient::post(const std::string& path, const nlohmann::json& body) const {
  // httplib clients are not safe to share across threads; one per call.
  httplib::Client client(endpoint_.origin);
  auto secs = options_.timeout.count() / 1000;
  auto usecs = (options_.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!options_.bearer_token.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.bearer_token);
  }
  const std::string full_path = endpoint_.path_prefix + path;
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(options_.backoff * attempt);
    auto res = client.Post(full_path, headers, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      spdlog::debug("POST {}{} failed ({}), attempt {}", endpoint_.origin, full_path, last_error, attempt + 1);
      continue;
    }
    auto doc = nlohmann::json::parse(res->body, nullptr, false);
    if (res->status < 200 || res->status >= 300) {
      std::string msg = doc.is_object() && doc.contains("error") && doc["error"].is_string()
                            ? doc["error"].get<std::string>()
                            : res->body;
      throw OracleError(full_path + ": HTTP " + std::to_string(res->status) + ": " + msg);
    }
    if (doc.is_discarded()) throw OracleError(full_path + ": response is not JSON");
    return doc;
  }
  throw BackendUnavailable(endpoint_.origin + full_path + ": " + last_error);
}

// ---------------------------------------------------------------------------

SidecarEmbedder::SidecarEmbedder(std::shared_ptr<JsonHttpClient> client, std::size_t declared_dim)
    : client_(std::move(client)), dim_(declared_dim) {}

std::string SidecarEmbedder::id() const { return "sidecar-embed@" + client_->endpoint().origin; }

std::size_t SidecarEmbedder::dim() const { return dim_.load(); }

std::vector<Vector> SidecarEmbedder::embed_batch(std::span<const std::string> texts) {
  require_texts(texts, "embed");
  if (texts.empty()) return {};
  auto body = client_->post("/embed", {{"texts", std::vector<std::string>(texts.begin(), texts.end())}});
  const auto& vectors = require_array(body, "vectors", texts.size(), id());
  if (!body.contains("dim") || !body["dim"].is_number_integer()) throw OracleError(id() + ": missing dim");
  auto reported = body["dim"].get<std::size_t>();
  std::size_t expected = 0;
  if (dim_.compare_exchange_strong(expected, reported)) expected = reported;
  if (reported != expected) {
    throw OracleError(id() + ": dimension mismatch (reported " + std::to_string(reported) +
                      ", declared " + std::to_string(expected) + ")");
  }
  std::vector<Vector> out;
  for (const auto& v : vectors) {
    if (!v.is_array() || v.size() != expected) throw OracleError(id() + ": vector dimension mismatch");
    Vector vec;
    vec.reserve(v.size());
    for (const auto& x : v) vec.push_back(finite_number(x, id()));
    out.push_back(std::move(vec));
  }
  return out;
}

std::string SidecarParaphraser::id() const { return "sidecar-paraphrase@" + client_->endpoint().origin; }

std::string SidecarParaphraser::paraphrase(const std::string& text, int form_index) {
  if (form_index < 0 || form_index >= kFormCount) {
    throw PreconditionError("paraphrase: form_index out of range: " + std::to_string(form_index));
  }
  if (text::trim(text).empty()) throw PreconditionError("paraphrase: empty text");
  auto body = client_->post("/paraphrase", {{"text", text}, {"form_index", form_index}});
  if (!body.is_object() || !body.contains("text") || !body["text"].is_string()) {
    throw OracleError(id() + ": response lacks 'text'");
  }
  auto out = body["text"].get<std::string>();
  if (text::trim(out).empty()) throw OracleError(id() + ": backend returned empty text");
  return out;
}

std::string SidecarVictim::id() const { return "sidecar-victim@" + client_->endpoint().origin; }

std::vector<Completion> SidecarVictim::complete_batch(std::span<const std::string> prompts) {
  std::vector<Completion> out(prompts.size());
  if (prompts.empty()) return out;
  require_texts(prompts, "complete");
  nlohmann::json body;
  try {
    body = client_->post("/complete", {{"prompts", std::vector<std::string>(prompts.begin(), prompts.end())},
                                       {"max_new_tokens", max_new_tokens_}});
  } catch (const BackendUnavailable&) {
    throw;
  } catch (const OracleError& e) {
    for (auto& c : out) c.error = e.what();
    return out;
  }
  const auto& responses = require_array(body, "responses", prompts.size(), id());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (responses[i].is_string()) {
      out[i].response = VictimResponse{prompts[i], responses[i].get<std::string>(), id()};
    } else {
      out[i].error = id() + ": item " + std::to_string(i) + " failed";
    }
  }
  return out;
}

std::string SidecarPerplexity::id() const { return "sidecar-perplexity@" + client_->endpoint().origin; }

std::vector<double> SidecarPerplexity::perplexity_batch(std::span<const std::string> texts) {
  require_texts(texts, "perplexity");
  if (texts.empty()) return {};
  auto body = client_->post("/perplexity", {{"texts", std::vector<std::string>(texts.begin(), texts.end())}});
  std::vector<double> out;
  for (const auto& v : require_array(body, "perplexities", texts.size(), id())) {
    out.push_back(finite_number(v, id()));
  }
  return out;
}

std::string SidecarClassifier::id() const { return "sidecar-classify@" + client_->endpoint().origin; }

std::vector<bool> SidecarClassifier::classify_batch(std::span<const std::string> texts) {
  require_texts(texts, "classify_injection");
  if (texts.empty()) return {};
  auto body = client_->post("/classify", {{"texts", std::vector<std::string>(texts.begin(), texts.end())}});
  std::vector<bool> out;
  for (const auto& v : require_array(body, "flags", texts.size(), id())) {
    if (!v.is_boolean()) throw OracleError(id() + ": flag is not a boolean");
    out.push_back(v.get<bool>());
  }
  return out;
}

// ---------------------------------------------------------------------------

OpenAICompatVictim::OpenAICompatVictim(std::shared_ptr<JsonHttpClient> client, Options options)
    : client_(std::move(client)), options_(std::move(options)) {}

nlohmann::json OpenAICompatVictim::request_body(const std::string& prompt) const {
  return {{"model", options_.model},
          {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
          {"temperature", options_.temperature},
          {"max_tokens", options_.max_tokens}};
}

std::vector<Completion> OpenAICompatVictim::complete_batch(std::span<const std::string> prompts) {
  std::vector<Completion> out(prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (text::trim(prompts[i]).empty()) {
      out[i].error = "complete: empty prompt";
      continue;
    }
    try {
      auto body = client_->post("/chat/completions", request_body(prompts[i]));
      const auto& choices = body.at("choices");
      if (!choices.is_array() || choices.empty()) throw OracleError(id() + ": no choices");
      const auto& content = choices[0].at("message").at("content");
      out[i].response = VictimResponse{prompts[i], content.is_string() ? content.get<std::string>() : "", id()};
    } catch (const BackendUnavailable&) {
      throw;
    } catch (const OracleError& e) {
      out[i].error = e.what();
    } catch (const nlohmann::json::exception& e) {
      out[i].error = id() + ": malformed response: " + e.what();
    }
  }
  return out;
}

}  // namespace smj::oracle
