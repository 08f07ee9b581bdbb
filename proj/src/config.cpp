#include "quickseg/config.hpp"

#include <algorithm>
#include <cstdlib>

#include "quickseg/errors.hpp"
#include "quickseg/image.hpp"
#include "quickseg/mock_backend.hpp"
#include "quickseg/onnx_backend.hpp"

namespace quickseg {

namespace {

template <typename T>
void take(const nlohmann::json& j, const char* key, T& out, const std::string& path) {
    if (!j.contains(key)) {
        return;
    }
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw SchemaError(path + "." + key, "wrong type");
    }
}

std::pair<std::string, std::string> split_scheme(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) {
        return {spec, {}};
    }
    return {spec.substr(0, colon), spec.substr(colon + 1)};
}

double parse_number(const std::string& name, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) {
            throw std::invalid_argument(v);
        }
        return d;
    } catch (const std::exception&) {
        throw ConfigError(name + " must be a number, got '" + v + "'");
    }
}

}  // namespace

PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig c) {
    if (!j.is_object()) {
        throw SchemaError("$", "configuration must be a JSON object");
    }
    static const char* kKnown[] = {"backend",   "embedding",      "input_size",      "reg_max",
                                   "conf_thresh", "iou_thresh",    "max_det",         "mask_threshold",
                                   "min_mask_pixels", "closing_iterations", "edge", "service"};
    for (const auto& [key, _] : j.items()) {
        if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
            throw SchemaError("$." + key, "unknown configuration key");
        }
    }
    take(j, "backend", c.backend, "$");
    take(j, "embedding", c.embedding, "$");
    take(j, "input_size", c.input_size, "$");
    take(j, "reg_max", c.reg_max, "$");
    take(j, "conf_thresh", c.segment.nms.conf_thresh, "$");
    take(j, "iou_thresh", c.segment.nms.iou_thresh, "$");
    take(j, "max_det", c.segment.nms.max_det, "$");
    take(j, "mask_threshold", c.segment.mask_threshold, "$");
    take(j, "min_mask_pixels", c.segment.min_mask_pixels, "$");
    take(j, "closing_iterations", c.merge.closing_iterations, "$");
    if (j.contains("edge")) {
        const auto& e = j["edge"];
        if (!e.is_object()) {
            throw SchemaError("$.edge", "must be an object");
        }
        std::string agg = c.edge.aggregation == ProbAggregation::Max ? "max" : "sum";
        take(e, "aggregation", agg, "$.edge");
        if (agg == "max") {
            c.edge.aggregation = ProbAggregation::Max;
        } else if (agg == "sum") {
            c.edge.aggregation = ProbAggregation::SumClipped;
        } else {
            throw SchemaError("$.edge.aggregation", "expected \"max\" or \"sum\"");
        }
        take(e, "per_map_sobel", c.edge.per_map_sobel, "$.edge");
    }
    if (j.contains("service")) {
        const auto& s = j["service"];
        if (!s.is_object()) {
            throw SchemaError("$.service", "must be an object");
        }
        take(s, "host", c.service.host, "$.service");
        take(s, "port", c.service.port, "$.service");
        take(s, "max_sessions", c.service.max_sessions, "$.service");
        take(s, "ttl_seconds", c.service.ttl_seconds, "$.service");
        take(s, "max_upload_bytes", c.service.max_upload_bytes, "$.service");
        take(s, "cors_origin", c.service.cors_origin, "$.service");
        take(s, "threads", c.service.threads, "$.service");
    }
    if (c.segment.nms.conf_thresh < 0 || c.segment.nms.conf_thresh > 1) {
        throw SchemaError("$.conf_thresh", "must lie in [0, 1]");
    }
    if (c.segment.nms.iou_thresh < 0 || c.segment.nms.iou_thresh > 1) {
        throw SchemaError("$.iou_thresh", "must lie in [0, 1]");
    }
    if (c.input_size <= 0 || c.input_size % 32 != 0) {
        throw SchemaError("$.input_size", "must be a positive multiple of 32");
    }
    return c;
}

nlohmann::json config_to_json(const PipelineConfig& c) {
    return {{"backend", c.backend},
            {"embedding", c.embedding},
            {"input_size", c.input_size},
            {"reg_max", c.reg_max},
            {"conf_thresh", c.segment.nms.conf_thresh},
            {"iou_thresh", c.segment.nms.iou_thresh},
            {"max_det", c.segment.nms.max_det},
            {"mask_threshold", c.segment.mask_threshold},
            {"min_mask_pixels", c.segment.min_mask_pixels},
            {"closing_iterations", c.merge.closing_iterations},
            {"edge",
             {{"aggregation", c.edge.aggregation == ProbAggregation::Max ? "max" : "sum"},
              {"per_map_sobel", c.edge.per_map_sobel}}},
            {"service",
             {{"host", c.service.host},
              {"port", c.service.port},
              {"max_sessions", c.service.max_sessions},
              {"ttl_seconds", c.service.ttl_seconds},
              {"max_upload_bytes", c.service.max_upload_bytes},
              {"cors_origin", c.service.cors_origin},
              {"threads", c.service.threads}}}};
}

PipelineConfig load_config(const std::string& path, PipelineConfig base) {
    const auto bytes = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + " is not valid JSON: " + e.what());
    }
    return config_from_json(j, std::move(base));
}

PipelineConfig apply_env(PipelineConfig c, const std::function<std::optional<std::string>(const char*)>& getenv) {
    const auto get = [&](const char* name) -> std::optional<std::string> {
        if (getenv) {
            return getenv(name);
        }
        const char* v = std::getenv(name);
        return v ? std::optional<std::string>(v) : std::nullopt;
    };
    if (auto v = get("QUICKSEG_MODEL")) {
        c.backend = "onnx:" + *v;
    }
    if (auto v = get("QUICKSEG_BACKEND")) {
        c.backend = *v;
    }
    if (auto v = get("QUICKSEG_EMBEDDING")) {
        c.embedding = *v;
    }
    if (auto v = get("QUICKSEG_HOST")) {
        c.service.host = *v;
    }
    if (auto v = get("QUICKSEG_PORT")) {
        c.service.port = static_cast<int>(parse_number("QUICKSEG_PORT", *v));
    }
    if (auto v = get("QUICKSEG_TTL")) {
        c.service.ttl_seconds = parse_number("QUICKSEG_TTL", *v);
    }
    if (auto v = get("QUICKSEG_MAX_SESSIONS")) {
        c.service.max_sessions = static_cast<std::size_t>(parse_number("QUICKSEG_MAX_SESSIONS", *v));
    }
    if (auto v = get("QUICKSEG_CORS_ORIGIN")) {
        c.service.cors_origin = *v;
    }
    if (auto v = get("QUICKSEG_CONF")) {
        c.segment.nms.conf_thresh = parse_number("QUICKSEG_CONF", *v);
    }
    if (auto v = get("QUICKSEG_IOU")) {
        c.segment.nms.iou_thresh = parse_number("QUICKSEG_IOU", *v);
    }
    return c;
}

std::shared_ptr<const InferenceBackend> make_backend(const PipelineConfig& c) {
    const auto [scheme, arg] = split_scheme(c.backend);
    if (scheme.empty()) {
        throw ConfigError("no backend configured; pass --backend mock:<scene.json> or onnx:<model.onnx>");
    }
    if (arg.empty()) {
        throw ConfigError("backend '" + c.backend + "' needs a path after ':'");
    }
    if (scheme == "mock") {
        MockOptions opts;
        opts.input_size = c.input_size;
        opts.reg_max = c.reg_max;
        SyntheticScene scene = load_scene(arg);
        // Roomy scenes need more prototype channels than the default network exposes.
        if (static_cast<int>(scene.shapes.size()) > opts.num_prototypes - kMockNoiseChannels) {
            opts.num_prototypes = static_cast<int>(scene.shapes.size()) + kMockNoiseChannels;
        }
        return std::make_shared<MockBackend>(std::move(scene), opts);
    }
    if (scheme == "onnx") {
        OnnxModelConfig mc;
        mc.path = arg;
        mc.input_size = c.input_size;
        mc.reg_max = c.reg_max;
        return std::make_shared<OnnxBackend>(std::move(mc));
    }
    throw ConfigError("unknown backend scheme '" + scheme + "' (expected mock or onnx)");
}

std::shared_ptr<const EmbeddingBackend> make_embedder(const PipelineConfig& c, const InferenceBackend* inference) {
    if (c.embedding.empty()) {
        return nullptr;
    }
    const auto [scheme, arg] = split_scheme(c.embedding);
    if (scheme == "mock") {
        const auto* mock = dynamic_cast<const MockBackend*>(inference);
        if (!mock) {
            throw ConfigError("the mock embedding backend requires a mock inference backend");
        }
        return std::make_shared<MockEmbeddingBackend>(mock->scene());
    }
    if (scheme == "onnx") {
        const auto comma = arg.find(',');
        if (comma == std::string::npos) {
            throw ConfigError("embedding 'onnx:' expects <image_encoder.onnx>,<text_table.json>");
        }
        return std::make_shared<OnnxEmbeddingBackend>(arg.substr(0, comma), arg.substr(comma + 1));
    }
    throw ConfigError("unknown embedding scheme '" + scheme + "' (expected mock or onnx)");
}

}  // namespace quickseg
