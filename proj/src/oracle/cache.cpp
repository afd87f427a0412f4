#include "smj/oracle/cache.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "smj/core/errors.hpp"
#include "smj/core/text.hpp"

namespace smj::oracle {

namespace fs = std::filesystem;

namespace {

std::string_view kind_name(OracleKind kind) {
  switch (kind) {
    case OracleKind::Embed: return "embed";
    case OracleKind::Paraphrase: return "paraphrase";
    case OracleKind::Substitute: return "substitute";
    case OracleKind::Complete: return "complete";
    case OracleKind::Perplexity: return "perplexity";
    case OracleKind::ClassifyInjection: return "classify";
  }
  return "?";
}

nlohmann::json canonicalize(const nlohmann::json& j) {
  if (j.is_string()) return text::canonical(j.get<std::string>());
  if (j.is_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : j) out.push_back(canonicalize(e));
    return out;
  }
  if (j.is_object()) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, v] : j.items()) out[k] = canonicalize(v);
    return out;
  }
  return j;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

OracleRequestKey OracleRequestKey::make(OracleKind kind, const nlohmann::json& payload) {
  // nlohmann::json objects are key-ordered, so dump() is field-order-normalized.
  return OracleRequestKey{kind, canonicalize(payload).dump()};
}

std::string OracleRequestKey::digest() const {
  std::string material(kind_name(kind));
  material.push_back('\n');
  material += canonical_payload;
  return sha256_hex(material);
}

OracleCache::OracleCache(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) spdlog::warn("oracle cache: cannot create {}: {}", root_.string(), ec.message());
}

fs::path OracleCache::path_for(const std::string& digest) const {
  return root_ / digest.substr(0, 2) / (digest + ".json");
}

std::mutex& OracleCache::stripe(const std::string& digest) {
  return stripes_[std::stoul(digest.substr(0, 2), nullptr, 16) % stripes_.size()];
}

std::optional<nlohmann::json> OracleCache::read(const std::string& digest) const {
  std::ifstream in(path_for(digest));
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  auto doc = nlohmann::json::parse(ss.str(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("value") ||
      doc.value("key", std::string()) != digest) {
    spdlog::warn("oracle cache: corrupted entry {}, recomputing", digest);
    return std::nullopt;
  }
  return doc["value"];
}

void OracleCache::write(const std::string& digest, const nlohmann::json& value) {
  auto target = path_for(digest);
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << nlohmann::json{{"key", digest}, {"value", value}}.dump();
    if (!out) ec = std::make_error_code(std::errc::io_error);
  }
  if (!ec) fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    if (!warned_.exchange(true)) {
      spdlog::warn("oracle cache: cannot write under {}; continuing uncached", root_.string());
    }
  }
}

nlohmann::json OracleCache::get_or_compute(const OracleRequestKey& key,
                                           const std::function<nlohmann::json()>& compute) {
  auto digest = key.digest();
  std::lock_guard lock(stripe(digest));
  if (auto hit = read(digest)) {
    ++hits_;
    return *hit;
  }
  ++misses_;
  auto value = compute();
  write(digest, value);
  return value;
}

std::vector<std::optional<nlohmann::json>> OracleCache::get_or_compute_batch(
    const std::vector<OracleRequestKey>& keys, const BatchCompute& compute) {
  std::vector<std::string> digests;
  digests.reserve(keys.size());
  for (const auto& k : keys) digests.push_back(k.digest());

  // Lock every stripe touched, in address order, for the whole batch.
  std::set<std::mutex*> touched;
  for (const auto& d : digests) touched.insert(&stripe(d));
  std::vector<std::unique_lock<std::mutex>> locks;
  for (auto* m : touched) locks.emplace_back(*m);

  std::vector<std::optional<nlohmann::json>> out(keys.size());
  std::vector<std::size_t> missing;
  std::map<std::string, std::size_t> first_miss;  // duplicate keys compute once
  std::vector<std::pair<std::size_t, std::size_t>> aliases;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (auto hit = read(digests[i])) {
      ++hits_;
      out[i] = std::move(hit);
    } else if (auto it = first_miss.find(digests[i]); it != first_miss.end()) {
      aliases.emplace_back(i, it->second);
    } else {
      first_miss.emplace(digests[i], i);
      missing.push_back(i);
    }
  }
  if (!missing.empty()) {
    misses_ += missing.size();
    auto computed = compute(missing);
    if (computed.size() != missing.size()) throw std::logic_error("cache batch: size mismatch");
    for (std::size_t j = 0; j < missing.size(); ++j) {
      if (computed[j]) write(digests[missing[j]], *computed[j]);
      out[missing[j]] = std::move(computed[j]);
    }
  }
  for (auto [dup, src] : aliases) out[dup] = out[src];
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Vector> CachedEmbedder::embed_batch(std::span<const std::string> texts) {
  std::vector<OracleRequestKey> keys;
  for (const auto& t : texts) {
    if (text::trim(t).empty()) throw PreconditionError("embed: empty text");
    keys.push_back(OracleRequestKey::make(OracleKind::Embed, {{"backend", inner_.id()}, {"text", t}}));
  }
  auto values = cache_.get_or_compute_batch(keys, [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> batch;
    for (auto i : idx) batch.push_back(texts[i]);
    auto vectors = inner_.embed_batch(batch);
    if (vectors.size() != batch.size()) throw OracleError(inner_.id() + ": embed size mismatch");
    std::vector<std::optional<nlohmann::json>> out;
    for (auto& v : vectors) out.emplace_back(nlohmann::json(v));
    return out;
  });
  std::vector<Vector> out;
  for (auto& v : values) out.push_back(v->get<Vector>());
  return out;
}

std::string CachedParaphraser::paraphrase(const std::string& text, int form_index) {
  auto key = OracleRequestKey::make(
      OracleKind::Paraphrase, {{"backend", inner_.id()}, {"text", text}, {"form_index", form_index}});
  return cache_.get_or_compute(key, [&] { return nlohmann::json(inner_.paraphrase(text, form_index)); })
      .get<std::string>();
}

std::vector<Completion> CachedVictim::complete_batch(std::span<const std::string> prompts) {
  std::vector<OracleRequestKey> keys;
  for (const auto& p : prompts) {
    keys.push_back(OracleRequestKey::make(OracleKind::Complete, {{"backend", inner_.id()}, {"prompt", p}}));
  }
  std::vector<std::string> errors(prompts.size());
  auto values = cache_.get_or_compute_batch(keys, [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> batch;
    for (auto i : idx) batch.push_back(prompts[i]);
    auto results = inner_.complete_batch(batch);
    if (results.size() != batch.size()) throw OracleError(inner_.id() + ": complete size mismatch");
    std::vector<std::optional<nlohmann::json>> out;
    for (std::size_t j = 0; j < results.size(); ++j) {
      if (results[j].ok()) {
        out.emplace_back(nlohmann::json(results[j].response->response_text));
      } else {
        errors[idx[j]] = results[j].error;
        out.emplace_back(std::nullopt);
      }
    }
    return out;
  });
  std::vector<Completion> out(prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (values[i]) {
      out[i].response = VictimResponse{prompts[i], values[i]->get<std::string>(), inner_.id()};
    } else {
      out[i].error = errors[i].empty() ? inner_.id() + ": completion failed" : errors[i];
    }
  }
  return out;
}

std::vector<double> CachedPerplexity::perplexity_batch(std::span<const std::string> texts) {
  std::vector<OracleRequestKey> keys;
  for (const auto& t : texts) {
    keys.push_back(OracleRequestKey::make(OracleKind::Perplexity, {{"backend", inner_.id()}, {"text", t}}));
  }
  auto values = cache_.get_or_compute_batch(keys, [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> batch;
    for (auto i : idx) batch.push_back(texts[i]);
    auto ppl = inner_.perplexity_batch(batch);
    std::vector<std::optional<nlohmann::json>> out;
    for (double p : ppl) out.emplace_back(nlohmann::json(p));
    return out;
  });
  std::vector<double> out;
  for (auto& v : values) out.push_back(v->get<double>());
  return out;
}

std::vector<bool> CachedClassifier::classify_batch(std::span<const std::string> texts) {
  std::vector<OracleRequestKey> keys;
  for (const auto& t : texts) {
    keys.push_back(
        OracleRequestKey::make(OracleKind::ClassifyInjection, {{"backend", inner_.id()}, {"text", t}}));
  }
  auto values = cache_.get_or_compute_batch(keys, [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> batch;
    for (auto i : idx) batch.push_back(texts[i]);
    auto flags = inner_.classify_batch(batch);
    std::vector<std::optional<nlohmann::json>> out;
    for (bool f : flags) out.emplace_back(nlohmann::json(f));
    return out;
  });
  std::vector<bool> out;
  for (auto& v : values) out.push_back(v->get<bool>());
  return out;
}

}  // namespace smj::oracle
