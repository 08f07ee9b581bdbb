#include "quickseg/prompt.hpp"

#include <algorithm>
#include <cmath>

#include "quickseg/errors.hpp"

namespace quickseg {

void PromptSpec::validate() const {
    if (const auto* pts = std::get_if<std::vector<PromptPoint>>(&value)) {
        if (pts->empty()) {
            throw InputError("point prompt needs at least one point");
        }
        const bool has_fg = std::any_of(pts->begin(), pts->end(),
                                        [](const PromptPoint& p) { return p.label == PointLabel::Foreground; });
        if (!has_fg) {
            throw InputError("point prompt needs at least one foreground point");
        }
        for (const auto& p : *pts) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
                throw InputError("point coordinates must be finite");
            }
        }
    } else if (const auto* box = std::get_if<BoundingBox>(&value)) {
        if (!box->valid() || box->empty()) {
            throw InputError("box prompt must satisfy x1 < x2 and y1 < y2");
        }
    } else if (std::get<std::string>(value).empty()) {
        throw InputError("text prompt must be non-empty");
    }
}

PromptSpec prompt_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw InputError("prompt must be a JSON object");
    }
    const int variants = static_cast<int>(j.contains("points")) + static_cast<int>(j.contains("box")) +
                         static_cast<int>(j.contains("text"));
    if (variants != 1) {
        throw InputError("prompt must contain exactly one of 'points', 'box', 'text'");
    }
    PromptSpec spec;
    if (j.contains("points")) {
        const auto& arr = j["points"];
        if (!arr.is_array()) {
            throw InputError("'points' must be an array");
        }
        std::vector<PromptPoint> pts;
        for (const auto& p : arr) {
            if (!p.is_object() || !p.contains("x") || !p.contains("y") || !p["x"].is_number() ||
                !p["y"].is_number()) {
                throw InputError("each point needs numeric 'x' and 'y'");
            }
            const std::string label = p.value("label", std::string("fg"));
            if (label != "fg" && label != "bg") {
                throw InputError("point label must be 'fg' or 'bg'");
            }
            pts.push_back({p["x"].get<double>(), p["y"].get<double>(),
                           label == "fg" ? PointLabel::Foreground : PointLabel::Background});
        }
        spec.value = std::move(pts);
    } else if (j.contains("box")) {
        const auto& b = j["box"];
        if (!b.is_array() || b.size() != 4 || !std::all_of(b.begin(), b.end(), [](const auto& v) { return v.is_number(); })) {
            throw InputError("'box' must be [x1, y1, x2, y2]");
        }
        spec.value = BoundingBox{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    } else {
        if (!j["text"].is_string()) {
            throw InputError("'text' must be a string");
        }
        spec.value = j["text"].get<std::string>();
    }
    spec.validate();
    return spec;
}

nlohmann::json prompt_to_json(const PromptSpec& p) {
    if (const auto* pts = std::get_if<std::vector<PromptPoint>>(&p.value)) {
        auto arr = nlohmann::json::array();
        for (const auto& q : *pts) {
            arr.push_back({{"x", q.x}, {"y", q.y}, {"label", q.label == PointLabel::Foreground ? "fg" : "bg"}});
        }
        return {{"points", arr}};
    }
    if (const auto* b = std::get_if<BoundingBox>(&p.value)) {
        return {{"box", {b->x1, b->y1, b->x2, b->y2}}};
    }
    return {{"text", std::get<std::string>(p.value)}};
}

namespace {

struct Roi {
    int x0, y0, w, h;
};

// Each pass reads `src` through `fetch`, which supplies values outside the ROI.
template <typename Op, typename Fetch>
std::vector<std::uint8_t> window3(const std::vector<std::uint8_t>& src, const Roi& roi, Op op, Fetch fetch) {
    std::vector<std::uint8_t> dst(src.size());
    for (int y = 0; y < roi.h; ++y) {
        for (int x = 0; x < roi.w; ++x) {
            std::uint8_t acc = fetch(src, x, y);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    acc = op(acc, fetch(src, x + dx, y + dy));
                }
            }
            dst[static_cast<std::size_t>(y) * roi.w + x] = acc;
        }
    }
    return dst;
}

BinaryMask merge_indices(const SegmentCache& cache, const std::vector<std::size_t>& indices, const MergeOptions& opts) {
    BinaryMask merged(cache.width(), cache.height());
    for (auto i : indices) {
        merged |= cache.instances[i].mask;
    }
    if (indices.empty()) {
        return merged;
    }
    return morphological_close(merged, opts.closing_iterations);
}

}  // namespace

BinaryMask morphological_close(const BinaryMask& m, int iterations) {
    if (iterations <= 0 || !m.any()) {
        return m;
    }
    const BoundingBox bb = bbox_of(m);
    const int margin = iterations + 1;
    const int x0 = std::max(0, static_cast<int>(bb.x1) - margin);
    const int y0 = std::max(0, static_cast<int>(bb.y1) - margin);
    const int x1 = std::min(m.width(), static_cast<int>(bb.x2) + margin);
    const int y1 = std::min(m.height(), static_cast<int>(bb.y2) + margin);
    const Roi roi{x0, y0, x1 - x0, y1 - y0};

    std::vector<std::uint8_t> buf(static_cast<std::size_t>(roi.w) * roi.h);
    for (int y = 0; y < roi.h; ++y) {
        for (int x = 0; x < roi.w; ++x) {
            buf[static_cast<std::size_t>(y) * roi.w + x] = m.get(x0 + x, y0 + y) ? 1 : 0;
        }
    }

    // Outside the ROI but inside the image the dilated mask is 0 (the margin exceeds the
    // dilation reach); outside the image it is 0 for dilation and 1 for erosion.
    const int iw = m.width();
    const int ih = m.height();
    auto fetch_dilate = [&](const std::vector<std::uint8_t>& s, int x, int y) -> std::uint8_t {
        if (x < 0 || y < 0 || x >= roi.w || y >= roi.h) {
            return 0;
        }
        return s[static_cast<std::size_t>(y) * roi.w + x];
    };
    auto fetch_erode = [&](const std::vector<std::uint8_t>& s, int x, int y) -> std::uint8_t {
        if (x < 0 || y < 0 || x >= roi.w || y >= roi.h) {
            const int gx = x0 + x;
            const int gy = y0 + y;
            return (gx < 0 || gy < 0 || gx >= iw || gy >= ih) ? 1 : 0;
        }
        return s[static_cast<std::size_t>(y) * roi.w + x];
    };
    auto max_op = [](std::uint8_t a, std::uint8_t b) { return std::max(a, b); };
    auto min_op = [](std::uint8_t a, std::uint8_t b) { return std::min(a, b); };
    for (int i = 0; i < iterations; ++i) {
        buf = window3(buf, roi, max_op, fetch_dilate);
    }
    for (int i = 0; i < iterations; ++i) {
        buf = window3(buf, roi, min_op, fetch_erode);
    }

    BinaryMask out = m;
    for (int y = 0; y < roi.h; ++y) {
        for (int x = 0; x < roi.w; ++x) {
            out.set(x0 + x, y0 + y, buf[static_cast<std::size_t>(y) * roi.w + x] != 0);
        }
    }
    return out;
}

BinaryMask merge_masks(std::span<const BinaryMask> masks, const MergeOptions& opts) {
    if (masks.empty()) {
        throw InputError("merge_masks needs at least one mask");
    }
    BinaryMask merged = masks.front();
    for (std::size_t i = 1; i < masks.size(); ++i) {
        merged |= masks[i];
    }
    return morphological_close(merged, opts.closing_iterations);
}

PromptResult select_by_points(const SegmentCache& cache, std::span<const PromptPoint> points,
                              const MergeOptions& opts) {
    PromptSpec{std::vector<PromptPoint>(points.begin(), points.end())}.validate();
    struct Pixel {
        int x, y;
        bool fg;
    };
    std::vector<Pixel> pixels;
    std::size_t fg_total = 0;
    for (const auto& p : points) {
        if (p.x < 0 || p.y < 0 || p.x >= cache.width() || p.y >= cache.height()) {
            throw InputError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") is outside the " +
                             std::to_string(cache.width()) + "x" + std::to_string(cache.height()) + " image");
        }
        const bool fg = p.label == PointLabel::Foreground;
        fg_total += fg ? 1 : 0;
        pixels.push_back({static_cast<int>(std::floor(p.x)), static_cast<int>(std::floor(p.y)), fg});
    }

    PromptResult r;
    r.candidate_scores.assign(cache.instances.size(), 0.0);
    for (std::size_t i = 0; i < cache.instances.size(); ++i) {
        const BinaryMask& m = cache.instances[i].mask;
        std::size_t fg_hits = 0;
        bool bg_hit = false;
        for (const auto& px : pixels) {
            if (m.get(px.x, px.y)) {
                if (px.fg) {
                    ++fg_hits;
                } else {
                    bg_hit = true;
                }
            }
        }
        if (fg_hits > 0 && !bg_hit) {
            r.indices.push_back(i);
            r.candidate_scores[i] = static_cast<double>(fg_hits) / static_cast<double>(fg_total);
        }
    }
    r.mask = merge_indices(cache, r.indices, opts);
    return r;
}

PromptResult select_by_box(const SegmentCache& cache, const BoundingBox& box, const MergeOptions& opts) {
    PromptSpec{box}.validate();
    PromptResult r;
    r.candidate_scores.resize(cache.instances.size());
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < cache.instances.size(); ++i) {
        const double iou = box_iou(box, cache.instances[i].mask_box);
        r.candidate_scores[i] = iou;
        if (iou <= 0.0) {
            continue;
        }
        if (!best || iou > r.candidate_scores[*best] ||
            (iou == r.candidate_scores[*best] && cache.instances[i].score > cache.instances[*best].score)) {
            best = i;
        }
    }
    if (best) {
        r.indices.push_back(*best);
    }
    r.mask = merge_indices(cache, r.indices, opts);
    return r;
}

RgbImage instance_crop(const SegmentCache& cache, std::size_t index, int size) {
    if (!cache.image) {
        throw ConfigError("segment cache does not retain its source image");
    }
    const ScoredInstance& inst = cache.instances.at(index);
    const int x0 = static_cast<int>(inst.mask_box.x1);
    const int y0 = static_cast<int>(inst.mask_box.y1);
    const int w = static_cast<int>(inst.mask_box.width());
    const int h = static_cast<int>(inst.mask_box.height());
    const int side = std::max(w, h);
    RgbImage square(side, side, 0);
    const int ox = (side - w) / 2;
    const int oy = (side - h) / 2;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (inst.mask.get(x0 + x, y0 + y)) {
                std::copy_n(cache.image->pixel(x0 + x, y0 + y), 3, square.pixel(ox + x, oy + y));
            }
        }
    }
    return resize(square, size, size);
}

PromptResult select_by_text(const SegmentCache& cache, std::string_view text, const EmbeddingBackend& embedder,
                            EmbeddingMemo* memo, const MergeOptions& opts) {
    PromptSpec{std::string(text)}.validate();
    const Embedding query = embedder.embed_text(text);
    PromptResult r;
    r.candidate_scores.resize(cache.instances.size());
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < cache.instances.size(); ++i) {
        auto compute = [&] { return embedder.embed_image(instance_crop(cache, i, embedder.image_size())); };
        const double sim = memo ? cosine_similarity(memo->get_or_compute(i, compute), query)
                                : cosine_similarity(compute(), query);
        r.candidate_scores[i] = sim;
        if (!best || sim > r.candidate_scores[*best] ||
            (sim == r.candidate_scores[*best] && cache.instances[i].score > cache.instances[*best].score)) {
            best = i;
        }
    }
    if (best) {
        r.indices.push_back(*best);
    }
    r.mask = merge_indices(cache, r.indices, opts);
    return r;
}

PromptResult run_prompt(const SegmentCache& cache, const PromptSpec& spec, const EmbeddingBackend* embedder,
                        EmbeddingMemo* memo, const MergeOptions& opts) {
    spec.validate();
    if (const auto* pts = std::get_if<std::vector<PromptPoint>>(&spec.value)) {
        return select_by_points(cache, *pts, opts);
    }
    if (const auto* box = std::get_if<BoundingBox>(&spec.value)) {
        return select_by_box(cache, *box, opts);
    }
    if (!embedder) {
        throw ConfigError("text prompts require an embedding backend");
    }
    return select_by_text(cache, std::get<std::string>(spec.value), *embedder, memo, opts);
}

}  // namespace quickseg
