#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "quickseg/config.hpp"
#include "quickseg/embedding.hpp"
#include "quickseg/maskgen.hpp"

namespace quickseg {

using Clock = std::function<std::chrono::steady_clock::time_point()>;

/// One uploaded image: its frozen cache plus the lazily filled per-session memos.
class Session {
  public:
    Session(std::string id, std::shared_ptr<const SegmentCache> cache, std::chrono::steady_clock::time_point created);

    const std::string& id() const { return id_; }
    const SegmentCache& cache() const { return *cache_; }
    std::shared_ptr<const SegmentCache> shared_cache() const { return cache_; }
    std::chrono::steady_clock::time_point created() const { return created_; }
    EmbeddingMemo& embeddings() { return memo_; }

    /// PNG of the edge map, computed on first use.
    const std::vector<std::uint8_t>& edge_png(const EdgeOptions& opts);
    std::size_t edge_computations() const { return edge_computations_; }

  private:
    std::string id_;
    std::shared_ptr<const SegmentCache> cache_;
    std::chrono::steady_clock::time_point created_;
    EmbeddingMemo memo_;
    std::once_flag edge_once_;
    std::vector<std::uint8_t> edge_png_;
    std::size_t edge_computations_ = 0;
};

/// 32 lowercase hex digits from a 128-bit random draw.
std::string new_session_id();

/// Thread-safe session table with LRU eviction at capacity and expiry `ttl` after the last use.
class SessionStore {
  public:
    SessionStore(std::size_t capacity, std::chrono::duration<double> ttl, Clock clock = {});

    /// Registers a session under `id` (a fresh random id when empty), evicting expired and then
    /// least-recently-used sessions to stay within capacity.
    std::shared_ptr<Session> create(std::shared_ptr<const SegmentCache> cache, std::string id = {});
    /// Null when unknown or expired; a hit refreshes the entry's LRU position and TTL.
    std::shared_ptr<Session> find(const std::string& id);
    bool erase(const std::string& id);
    std::size_t size();

  private:
    struct Entry {
        std::shared_ptr<Session> session;
        std::chrono::steady_clock::time_point last_used;
        std::list<std::string>::iterator lru;
    };
    std::chrono::steady_clock::time_point now() const;
    void expire_locked(std::chrono::steady_clock::time_point now);

    std::size_t capacity_;
    std::chrono::duration<double> ttl_;
    Clock clock_;
    std::mutex mu_;
    std::list<std::string> lru_;  // front = most recently used
    std::unordered_map<std::string, Entry> entries_;
};

struct HttpRequest {
    std::string method;
    std::string path;
    std::string body;
    std::map<std::string, std::string> headers;
};

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
    std::map<std::string, std::string> headers;

    nlohmann::json json() const { return nlohmann::json::parse(body); }
};

/// The /v1 API as a plain request -> response function, so it runs with or without sockets.
///
///   POST /v1/images                     image bytes -> {session_id, instance_count, width, height, timing_ms}
///   GET  /v1/sessions/{id}/everything   everything-mode document with RLE masks
///   POST /v1/sessions/{id}/prompt       PromptSpec -> {indices, scores, instance_scores, mask, timing_ms}
///   GET  /v1/sessions/{id}/edges        8-bit grayscale PNG
///   DELETE /v1/sessions/{id}
///   GET  /v1/health
class Service {
  public:
    Service(PipelineConfig config, std::shared_ptr<const InferenceBackend> backend,
            std::shared_ptr<const EmbeddingBackend> embedder = nullptr, Clock clock = {});

    HttpResponse handle(const HttpRequest& req);

    /// Receives one JSON object per request; defaults to a line on stderr. Null silences.
    void set_log_sink(std::function<void(const nlohmann::json&)> sink) { log_ = std::move(sink); }

    SessionStore& sessions() { return sessions_; }
    const Segmenter& segmenter() const { return segmenter_; }
    const PipelineConfig& config() const { return config_; }

  private:
    HttpResponse route(const HttpRequest& req);
    HttpResponse upload(const HttpRequest& req);
    HttpResponse everything(Session& s);
    HttpResponse prompt(Session& s, const HttpRequest& req);
    HttpResponse edges(Session& s);

    PipelineConfig config_;
    Segmenter segmenter_;
    std::shared_ptr<const EmbeddingBackend> embedder_;
    SessionStore sessions_;
    std::function<void(const nlohmann::json&)> log_;
};

/// HTTP/1.1 front end for a Service (cpp-httplib underneath).
class HttpServer {
  public:
    explicit HttpServer(Service& service);
    ~HttpServer();

    /// Binds host:port from the service config; port 0 picks a free port. Returns the bound
    /// port, or -1 on failure.
    int bind();
    /// Serves until stop(); call after bind().
    bool run();
    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace quickseg
