#include "quickseg/service.hpp"

#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "quickseg/cache_io.hpp"
#include "quickseg/edge.hpp"
#include "quickseg/errors.hpp"
#include "quickseg/prompt.hpp"
#include "quickseg/rle.hpp"

namespace quickseg {

namespace {

using steady = std::chrono::steady_clock;

double ms_since(steady::time_point t0) {
    return std::chrono::duration<double, std::milli>(steady::now() - t0).count();
}

HttpResponse json_response(int status, const nlohmann::json& j) {
    HttpResponse r;
    r.status = status;
    r.body = j.dump();
    return r;
}

HttpResponse error_response(int status, const std::string& message) {
    return json_response(status, {{"error", message}, {"status", status}});
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    const std::string p = path.substr(0, path.find('?'));
    for (char ch : p) {
        if (ch == '/') {
            if (!cur.empty()) {
                parts.push_back(cur);
            }
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) {
        parts.push_back(cur);
    }
    return parts;
}

}  // namespace

// ---------------------------------------------------------------------------------------------

Session::Session(std::string id, std::shared_ptr<const SegmentCache> cache, steady::time_point created)
    : id_(std::move(id)), cache_(std::move(cache)), created_(created) {}

const std::vector<std::uint8_t>& Session::edge_png(const EdgeOptions& opts) {
    std::call_once(edge_once_, [&] {
        edge_png_ = edge_to_png(edges_from_cache(*cache_, opts));
        ++edge_computations_;
    });
    return edge_png_;
}

std::string new_session_id() {
    thread_local std::random_device rd;
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (int i = 0; i < 4; ++i) {
        os << std::setw(8) << static_cast<std::uint32_t>(rd());
    }
    return os.str();
}

SessionStore::SessionStore(std::size_t capacity, std::chrono::duration<double> ttl, Clock clock)
    : capacity_(std::max<std::size_t>(1, capacity)), ttl_(ttl), clock_(std::move(clock)) {}

steady::time_point SessionStore::now() const { return clock_ ? clock_() : steady::now(); }

void SessionStore::expire_locked(steady::time_point t) {
    for (auto it = entries_.begin(); it != entries_.end();) {
        if (t - it->second.last_used > ttl_) {
            lru_.erase(it->second.lru);
            it = entries_.erase(it);
        } else {
            ++it;
        }
    }
}

std::shared_ptr<Session> SessionStore::create(std::shared_ptr<const SegmentCache> cache, std::string id) {
    const auto t = now();
    if (id.empty()) {
        id = new_session_id();
    }
    auto session = std::make_shared<Session>(id, std::move(cache), t);
    std::lock_guard lock(mu_);
    expire_locked(t);
    if (auto old = entries_.find(id); old != entries_.end()) {
        lru_.erase(old->second.lru);
        entries_.erase(old);
    }
    while (entries_.size() >= capacity_) {
        entries_.erase(lru_.back());
        lru_.pop_back();
    }
    lru_.push_front(id);
    entries_.emplace(id, Entry{session, t, lru_.begin()});
    return session;
}

std::shared_ptr<Session> SessionStore::find(const std::string& id) {
    const auto t = now();
    std::lock_guard lock(mu_);
    auto it = entries_.find(id);
    if (it == entries_.end()) {
        return nullptr;
    }
    if (t - it->second.last_used > ttl_) {
        lru_.erase(it->second.lru);
        entries_.erase(it);
        return nullptr;
    }
    it->second.last_used = t;
    lru_.splice(lru_.begin(), lru_, it->second.lru);
    return it->second.session;
}

bool SessionStore::erase(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(id);
    if (it == entries_.end()) {
        return false;
    }
    lru_.erase(it->second.lru);
    entries_.erase(it);
    return true;
}

std::size_t SessionStore::size() {
    std::lock_guard lock(mu_);
    expire_locked(now());
    return entries_.size();
}

// ---------------------------------------------------------------------------------------------

Service::Service(PipelineConfig config, std::shared_ptr<const InferenceBackend> backend,
                 std::shared_ptr<const EmbeddingBackend> embedder, Clock clock)
    : config_(std::move(config)),
      segmenter_(std::move(backend), config_.segment),
      embedder_(std::move(embedder)),
      sessions_(config_.service.max_sessions, std::chrono::duration<double>(config_.service.ttl_seconds),
                std::move(clock)),
      log_([](const nlohmann::json& line) { std::cerr << line.dump() << '\n'; }) {}

HttpResponse Service::handle(const HttpRequest& req) {
    const auto t0 = steady::now();
    HttpResponse res;
    try {
        res = route(req);
    } catch (const std::exception& e) {
        res = error_response(500, e.what());
    }
    if (!config_.service.cors_origin.empty()) {
        res.headers["Access-Control-Allow-Origin"] = config_.service.cors_origin;
        res.headers["Access-Control-Allow-Methods"] = "GET, POST, DELETE, OPTIONS";
        res.headers["Access-Control-Allow-Headers"] = "Content-Type";
    }
    if (log_) {
        log_({{"method", req.method},
              {"path", req.path},
              {"status", res.status},
              {"bytes_in", req.body.size()},
              {"bytes_out", res.body.size()},
              {"ms", ms_since(t0)}});
    }
    return res;
}

HttpResponse Service::route(const HttpRequest& req) {
    if (req.method == "OPTIONS") {
        HttpResponse r;
        r.status = 204;
        r.content_type.clear();
        return r;
    }
    const auto parts = split_path(req.path);
    if (parts.size() < 2 || parts[0] != "v1") {
        return error_response(404, "no such endpoint: " + req.path);
    }
    if (parts.size() == 2 && parts[1] == "health") {
        return json_response(200, {{"status", "ok"}, {"backend", segmenter_.backend().name()}});
    }
    if (parts.size() == 2 && parts[1] == "images") {
        if (req.method != "POST") {
            return error_response(405, "use POST for /v1/images");
        }
        return upload(req);
    }
    if (parts[1] != "sessions" || parts.size() < 3 || parts.size() > 4) {
        return error_response(404, "no such endpoint: " + req.path);
    }
    auto session = sessions_.find(parts[2]);
    if (!session) {
        return error_response(404, "unknown or expired session " + parts[2]);
    }
    if (parts.size() == 3) {
        if (req.method != "DELETE") {
            return error_response(405, "use DELETE on a session");
        }
        sessions_.erase(parts[2]);
        return json_response(200, {{"deleted", parts[2]}});
    }
    const std::string& what = parts[3];
    if (what == "everything" && req.method == "GET") {
        return everything(*session);
    }
    if (what == "prompt" && req.method == "POST") {
        return prompt(*session, req);
    }
    if (what == "edges" && req.method == "GET") {
        return edges(*session);
    }
    return error_response(404, "no such endpoint: " + req.method + " " + req.path);
}

HttpResponse Service::upload(const HttpRequest& req) {
    if (req.body.empty()) {
        return error_response(400, "empty body; send PNG or JPEG bytes");
    }
    if (req.body.size() > config_.service.max_upload_bytes) {
        return error_response(413, "image of " + std::to_string(req.body.size()) + " bytes exceeds the limit of " +
                                       std::to_string(config_.service.max_upload_bytes));
    }
    const auto t0 = steady::now();
    const std::string id = new_session_id();
    std::shared_ptr<const SegmentCache> cache;
    try {
        const auto* bytes = reinterpret_cast<const std::uint8_t*>(req.body.data());
        cache = segmenter_.segment_everything(std::span<const std::uint8_t>(bytes, req.body.size()), id);
    } catch (const InputError& e) {
        return error_response(400, e.what());
    } catch (const Error& e) {
        return error_response(503, e.what());
    }
    const double elapsed = ms_since(t0);
    sessions_.create(cache, id);
    return json_response(200, {{"session_id", id},
                               {"instance_count", cache->instances.size()},
                               {"width", cache->width()},
                               {"height", cache->height()},
                               {"timing_ms", elapsed}});
}

HttpResponse Service::everything(Session& s) { return json_response(200, cache_to_json(s.cache())); }

HttpResponse Service::prompt(Session& s, const HttpRequest& req) {
    PromptSpec spec;
    try {
        spec = prompt_from_json(nlohmann::json::parse(req.body));
    } catch (const nlohmann::json::parse_error& e) {
        return error_response(422, std::string("prompt body is not JSON: ") + e.what());
    } catch (const InputError& e) {
        return error_response(422, e.what());
    }
    const auto t0 = steady::now();
    PromptResult result;
    try {
        result = run_prompt(s.cache(), spec, embedder_.get(), &s.embeddings(), config_.merge);
    } catch (const InputError& e) {
        return error_response(422, e.what());
    } catch (const ConfigError& e) {
        return error_response(503, e.what());
    } catch (const BackendError& e) {
        return error_response(503, e.what());
    }
    nlohmann::json scores = nlohmann::json::array();
    nlohmann::json instance_scores = nlohmann::json::array();
    for (std::size_t i : result.indices) {
        scores.push_back(result.candidate_scores[i]);
        instance_scores.push_back(s.cache().instances[i].score);
    }
    nlohmann::json out = {{"indices", result.indices},
                          {"scores", scores},
                          {"instance_scores", instance_scores},
                          {"candidate_scores", result.candidate_scores},
                          {"mask", rle_to_json(rle_encode(result.mask))},
                          {"area", result.mask.count()}};
    out["timing_ms"] = ms_since(t0);
    return json_response(200, out);
}

HttpResponse Service::edges(Session& s) {
    HttpResponse r;
    const auto& png = s.edge_png(config_.edge);
    r.content_type = "image/png";
    r.body.assign(png.begin(), png.end());
    return r;
}

}  // namespace quickseg
