#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "quickseg/backend.hpp"
#include "quickseg/edge.hpp"
#include "quickseg/embedding.hpp"
#include "quickseg/maskgen.hpp"
#include "quickseg/prompt.hpp"
#include "quickseg/scene.hpp"

namespace quickseg {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t max_sessions = 64;
    double ttl_seconds = 30 * 60;
    std::size_t max_upload_bytes = 32u << 20;
    /// Value of Access-Control-Allow-Origin; empty disables CORS headers.
    std::string cors_origin = "*";
    int threads = 8;
};

/// Everything a front end needs to build the pipeline.
///
/// JSON schema (all keys optional):
///   {"backend": "mock:scene.json" | "onnx:model.onnx",
///    "embedding": "mock" | "onnx:image_encoder.onnx,text_table.json" | "",
///    "input_size": 1024, "reg_max": 26,
///    "conf_thresh": 0.4, "iou_thresh": 0.9, "max_det": 300,
///    "mask_threshold": 0.5, "min_mask_pixels": 4, "closing_iterations": 1,
///    "edge": {"aggregation": "max" | "sum", "per_map_sobel": false},
///    "service": {"host", "port", "max_sessions", "ttl_seconds", "max_upload_bytes",
///                "cors_origin", "threads"}}
struct PipelineConfig {
    std::string backend;
    std::string embedding;
    int input_size = kDefaultInputSize;
    int reg_max = kDefaultRegMax;
    SegmentOptions segment;
    MergeOptions merge;
    EdgeOptions edge;
    ServiceConfig service;
};

/// Overlays keys present in `j` onto `base`. Throws SchemaError naming the bad key.
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});
nlohmann::json config_to_json(const PipelineConfig& c);
PipelineConfig load_config(const std::string& path, PipelineConfig base = {});

/// Environment overrides: QUICKSEG_BACKEND, QUICKSEG_MODEL (shorthand for onnx:<path>),
/// QUICKSEG_EMBEDDING, QUICKSEG_PORT, QUICKSEG_HOST, QUICKSEG_TTL, QUICKSEG_MAX_SESSIONS,
/// QUICKSEG_CORS_ORIGIN, QUICKSEG_CONF, QUICKSEG_IOU. `getenv` is injectable for tests.
PipelineConfig apply_env(PipelineConfig c,
                         const std::function<std::optional<std::string>(const char*)>& getenv = {});

/// Inference backend from "mock:<scene.json>" or "onnx:<model.onnx>". Throws ConfigError for an
/// unknown scheme, BackendError when the model cannot be loaded.
std::shared_ptr<const InferenceBackend> make_backend(const PipelineConfig& c);

/// Embedding backend from c.embedding, or null if unset. "mock" needs a mock inference backend
/// (it reuses that scene).
std::shared_ptr<const EmbeddingBackend> make_embedder(const PipelineConfig& c,
                                                      const InferenceBackend* inference = nullptr);

}  // namespace quickseg
