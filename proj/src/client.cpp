#include "bargain/client.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "bargain/errors.hpp"
#include "bargain/rng.hpp"

namespace bargain {

namespace {

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

Json sampling_json(const Sampling& s) {
  return Json{{"temperature", s.temperature}, {"top_p", s.top_p}};
}

}  // namespace

Json chat_request_to_json(const ChatRequest& req) {
  Json messages = Json::array();
  for (const auto& m : req.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  return Json{{"kind", "chat"},
              {"model", req.model_id},
              {"messages", messages},
              {"sampling", sampling_json(req.sampling)}};
}

ChatRequest chat_request_from_json(const Json& j) {
  ChatRequest req;
  req.model_id = j.value("model", "");
  for (const auto& m : j.value("messages", Json::array())) {
    req.messages.push_back({m.value("role", ""), m.value("content", "")});
  }
  if (j.contains("sampling")) {
    req.sampling.temperature = j.at("sampling").value("temperature", 1.0);
    req.sampling.top_p = j.at("sampling").value("top_p", 1.0);
  }
  return req;
}

std::string request_digest(const ChatRequest& req) {
  // nlohmann objects are key-ordered, so dump() is already canonical.
  return hex64(fnv1a64(chat_request_to_json(req).dump()));
}

std::string embed_digest(const std::string& text, const std::string& model_id) {
  const Json j{{"kind", "embed"}, {"model", model_id}, {"text", text}};
  return hex64(fnv1a64(j.dump()));
}

ReplayClient::ReplayClient(std::filesystem::path fixture_dir)
    : dir_(std::move(fixture_dir)) {}

namespace {

Json read_fixture(const std::filesystem::path& dir, const std::string& digest) {
  const auto path = dir / (digest + ".json");
  std::ifstream in(path);
  if (!in) throw FixtureMissingError(digest);
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw ParseError("malformed fixture file: " + path.string());
  }
  return j;
}

}  // namespace

std::string ReplayClient::complete(const ChatRequest& req) {
  const Json j = read_fixture(dir_, request_digest(req));
  if (j.contains("error")) {
    throw TransportError("replayed error fixture: " +
                         j.at("error").get<std::string>());
  }
  return j.at("response").get<std::string>();
}

Eigen::VectorXd ReplayClient::embed(const std::string& text,
                                    const std::string& model_id) {
  if (text.empty()) throw ValidationError("cannot embed empty text");
  const Json j = read_fixture(dir_, embed_digest(text, model_id));
  if (j.contains("error")) {
    throw TransportError("replayed error fixture: " +
                         j.at("error").get<std::string>());
  }
  const auto& values = j.at("embedding");
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = values[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

void ReplayClient::store(const ChatRequest& req, const std::string& response) {
  std::lock_guard lock(mutex_);
  const std::string digest = request_digest(req);
  Json j;
  j["request_digest"] = digest;
  j["request"] = chat_request_to_json(req);
  j["response"] = response;
  write_text_atomic(dir_ / (digest + ".json"), j.dump(2) + "\n");
}

void ReplayClient::store_embedding(const std::string& text,
                                   const std::string& model_id,
                                   const Eigen::VectorXd& embedding) {
  std::lock_guard lock(mutex_);
  const std::string digest = embed_digest(text, model_id);
  Json values = Json::array();
  for (Eigen::Index i = 0; i < embedding.size(); ++i) values.push_back(embedding[i]);
  Json j;
  j["request_digest"] = digest;
  j["request"] = Json{{"kind", "embed"}, {"model", model_id}, {"text", text}};
  j["embedding"] = values;
  write_text_atomic(dir_ / (digest + ".json"), j.dump(2) + "\n");
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt) {
  double delay = static_cast<double>(policy.base_delay.count());
  for (int i = 0; i < attempt; ++i) delay *= policy.multiplier;
  delay = std::min(delay, static_cast<double>(policy.max_delay.count()));
  return std::chrono::milliseconds(static_cast<long long>(delay));
}

namespace {

bool retryable_status(int status) {
  return status == 408 || status == 429 || status >= 500;
}

HttpPostFn make_httplib_post(const HttpClientConfig& config) {
  return [base_url = config.base_url](
             const std::string& path, const std::string& body,
             const std::vector<std::pair<std::string, std::string>>& headers,
             std::chrono::milliseconds timeout) -> HttpResult {
    httplib::Client client(base_url);
    const auto seconds = std::max<long>(1, timeout.count() / 1000);
    client.set_connection_timeout(seconds, 0);
    client.set_read_timeout(seconds, 0);
    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);
    auto res = client.Post(path, hdrs, body, "application/json");
    if (!res) {
      return {0, "", true, httplib::to_string(res.error())};
    }
    return {res->status, res->body, false, ""};
  };
}

}  // namespace

HttpChatClient::HttpChatClient(HttpClientConfig config)
    : HttpChatClient(config, make_httplib_post(config),
                     [](std::chrono::milliseconds d) {
                       std::this_thread::sleep_for(d);
                     }) {}

HttpChatClient::HttpChatClient(HttpClientConfig config, HttpPostFn post,
                               std::function<void(std::chrono::milliseconds)> sleep)
    : config_(std::move(config)), post_(std::move(post)), sleep_(std::move(sleep)) {}

std::string HttpChatClient::post_json(const std::string& path, const Json& body,
                                      const std::string& digest) {
  std::vector<std::pair<std::string, std::string>> headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str());
        key && *key) {
      headers.emplace_back(config_.auth_header, config_.auth_prefix + key);
    } else {
      throw TransportError("credentials unavailable: set " + config_.api_key_env);
    }
  }

  {
    std::unique_lock lock(slots_mutex_);
    slots_cv_.wait(lock, [&] {
      return slots_in_use_ < config_.max_concurrent_requests;
    });
    ++slots_in_use_;
  }
  struct SlotRelease {
    HttpChatClient* self;
    ~SlotRelease() {
      std::lock_guard lock(self->slots_mutex_);
      --self->slots_in_use_;
      self->slots_cv_.notify_one();
    }
  } release{this};

  const auto start = std::chrono::steady_clock::now();
  const std::string payload = body.dump();
  std::string last_error;
  for (int attempt = 0; attempt <= config_.retry.max_retries; ++attempt) {
    if (attempt > 0) sleep_(backoff_delay(config_.retry, attempt - 1));
    HttpResult result =
        post_(path, payload, headers, std::chrono::milliseconds(60000));
    if (result.transport_failed) {
      last_error = result.error.empty() ? "connection failed" : result.error;
      continue;
    }
    if (result.status == 401 || result.status == 403) {
      throw TransportError("authentication failed (HTTP " +
                           std::to_string(result.status) + ")");
    }
    if (retryable_status(result.status)) {
      last_error = "HTTP " + std::to_string(result.status);
      continue;
    }
    if (result.status != 200) {
      throw TransportError("HTTP " + std::to_string(result.status) + ": " +
                           result.body.substr(0, 200));
    }
    if (config_.logger) {
      const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
      config_.logger({digest, latency, attempt + 1, true});
    }
    return result.body;
  }
  if (config_.logger) {
    const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    config_.logger({digest, latency, config_.retry.max_retries + 1, false});
  }
  throw TransportError("retries exhausted: " + last_error);
}

std::string HttpChatClient::complete(const ChatRequest& req) {
  Json messages = Json::array();
  for (const auto& m : req.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  const Json body{{"model", req.model_id},
                  {"messages", messages},
                  {"temperature", req.sampling.temperature},
                  {"top_p", req.sampling.top_p}};
  const std::string response =
      post_json(config_.chat_path, body, request_digest(req));
  Json j = Json::parse(response, nullptr, false);
  if (j.is_discarded()) {
    throw TransportError("unparseable completion response");
  }
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception&) {
    throw TransportError("completion response missing choices[0].message.content");
  }
}

Eigen::VectorXd HttpChatClient::embed(const std::string& text,
                                      const std::string& model_id) {
  if (text.empty()) throw ValidationError("cannot embed empty text");
  const std::string model =
      model_id.empty() ? config_.embedding_model : model_id;
  const Json body{{"model", model}, {"input", text}};
  const std::string response =
      post_json(config_.embed_path, body, embed_digest(text, model));
  Json j = Json::parse(response, nullptr, false);
  if (j.is_discarded()) throw TransportError("unparseable embedding response");
  try {
    const auto& values = j.at("data").at(0).at("embedding");
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      v[i] = values[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
  } catch (const Json::exception&) {
    throw TransportError("embedding response missing data[0].embedding");
  }
}

RecordingClient::RecordingClient(ChatClient& inner,
                                 std::filesystem::path fixture_dir)
    : inner_(inner), store_(std::move(fixture_dir)) {}

std::string RecordingClient::complete(const ChatRequest& req) {
  const std::string response = inner_.complete(req);
  store_.store(req, response);
  return response;
}

Eigen::VectorXd RecordingClient::embed(const std::string& text,
                                       const std::string& model_id) {
  const Eigen::VectorXd v = inner_.embed(text, model_id);
  store_.store_embedding(text, model_id, v);
  return v;
}

}  // namespace bargain
