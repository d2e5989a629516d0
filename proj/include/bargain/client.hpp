#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bargain/jsonl.hpp"
#include "bargain/protocol.hpp"

namespace bargain {

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  Sampling sampling;
  std::string model_id;
  // Transport detail, deliberately outside the digest.
  std::chrono::milliseconds timeout{60000};
};

// Stable content hash of the canonicalized request: independent of field
// ordering and of whitespace outside message content.
std::string request_digest(const ChatRequest& req);
std::string embed_digest(const std::string& text, const std::string& model_id);

ChatRequest chat_request_from_json(const Json& j);
Json chat_request_to_json(const ChatRequest& req);

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const ChatRequest& req) = 0;
  virtual Eigen::VectorXd embed(const std::string& text,
                                const std::string& model_id) = 0;
};

// Serves responses from digest-named fixture files; any run that touches
// only this client is bit-identical across machines. store() writes the
// same files the recording client produces, for seeding fixtures.
class ReplayClient : public ChatClient {
 public:
  explicit ReplayClient(std::filesystem::path fixture_dir);

  std::string complete(const ChatRequest& req) override;
  Eigen::VectorXd embed(const std::string& text,
                        const std::string& model_id) override;

  void store(const ChatRequest& req, const std::string& response);
  void store_embedding(const std::string& text, const std::string& model_id,
                       const Eigen::VectorXd& embedding);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_delay{250};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{8000};
};

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt);

struct HttpResult {
  int status = 0;
  std::string body;
  bool transport_failed = false;  // connection-level failure, no status
  std::string error;
};

// Injectable low-level transport so retry behavior is testable offline.
using HttpPostFn = std::function<HttpResult(
    const std::string& path, const std::string& body,
    const std::vector<std::pair<std::string, std::string>>& headers,
    std::chrono::milliseconds timeout)>;

struct LogEvent {
  std::string digest;
  std::chrono::milliseconds latency{0};
  int attempts = 0;
  bool ok = false;
};

struct HttpClientConfig {
  // OpenAI-compatible chat wire shape; most providers speak it directly or
  // through a gateway. Base URL and paths are the per-provider adapter.
  std::string base_url = "https://api.openai.com";
  std::string chat_path = "/v1/chat/completions";
  std::string embed_path = "/v1/embeddings";
  std::string api_key_env = "BARGAIN_API_KEY";
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  std::string embedding_model = "text-embedding-ada-002";
  RetryPolicy retry;
  int max_concurrent_requests = 4;
  std::function<void(const LogEvent&)> logger;
};

// Live client. Retries transient failures (connection errors, 408/429/5xx)
// with exponential backoff; everything else surfaces as TransportError.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(HttpClientConfig config);
  // Test seam: custom transport and sleeper.
  HttpChatClient(HttpClientConfig config, HttpPostFn post,
                 std::function<void(std::chrono::milliseconds)> sleep);

  std::string complete(const ChatRequest& req) override;
  Eigen::VectorXd embed(const std::string& text,
                        const std::string& model_id) override;

 private:
  std::string post_json(const std::string& path, const Json& body,
                        const std::string& digest);

  HttpClientConfig config_;
  HttpPostFn post_;
  std::function<void(std::chrono::milliseconds)> sleep_;
  std::mutex slots_mutex_;
  std::condition_variable slots_cv_;
  int slots_in_use_ = 0;
};

// Wraps a live client and captures every exchange into a replay store.
class RecordingClient : public ChatClient {
 public:
  RecordingClient(ChatClient& inner, std::filesystem::path fixture_dir);

  std::string complete(const ChatRequest& req) override;
  Eigen::VectorXd embed(const std::string& text,
                        const std::string& model_id) override;

 private:
  ChatClient& inner_;
  ReplayClient store_;
};

}  // namespace bargain
