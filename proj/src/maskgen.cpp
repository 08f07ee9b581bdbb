#include "quickseg/maskgen.hpp"

#include <algorithm>
#include <cmath>

#include "quickseg/errors.hpp"

namespace quickseg {

namespace {

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Half-pixel source coordinate for bilinear sampling (align_corners = false), edge clamped.
struct Tap {
    int i0;
    int i1;
    double w1;
};

Tap bilinear_tap(double src, int n) {
    if (src <= 0.0) {
        return {0, 0, 0.0};
    }
    const int i0 = static_cast<int>(std::floor(src));
    if (i0 >= n - 1) {
        return {n - 1, n - 1, 0.0};
    }
    return {i0, i0 + 1, src - i0};
}

bool detection_before(const Detection& a, const Detection& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.anchor_index < b.anchor_index;
}

}  // namespace

double dfl_side_distance(std::span<const float> bins) {
    if (bins.empty()) {
        return 0.0;
    }
    const double mx = *std::max_element(bins.begin(), bins.end());
    double denom = 0.0;
    double num = 0.0;
    for (std::size_t j = 0; j < bins.size(); ++j) {
        const double e = std::exp(static_cast<double>(bins[j]) - mx);
        denom += e;
        num += static_cast<double>(j) * e;
    }
    return num / denom;
}

BoundingBox decode_dfl(std::span<const float> logits, const Anchor& anchor, int reg_max, double bound) {
    const auto n = static_cast<std::size_t>(reg_max);
    const double l = dfl_side_distance(logits.subspan(0, n));
    const double t = dfl_side_distance(logits.subspan(n, n));
    const double r = dfl_side_distance(logits.subspan(2 * n, n));
    const double b = dfl_side_distance(logits.subspan(3 * n, n));
    const double s = anchor.stride;
    return BoundingBox{anchor.cx - l * s, anchor.cy - t * s, anchor.cx + r * s, anchor.cy + b * s}.clamped(bound,
                                                                                                         bound);
}

std::vector<Detection> decode_detections(const RawNetworkOutput& out, double conf_thresh) {
    std::vector<Detection> dets;
    for (std::size_t i = 0; i < out.num_anchors(); ++i) {
        const double score = sigmoid(out.cls_logits[i]);
        if (score < conf_thresh) {
            continue;
        }
        const auto c = out.coeffs(i);
        dets.push_back({decode_dfl(out.dfl(i), out.anchors[i], out.reg_max, out.input_size), score,
                        std::vector<float>(c.begin(), c.end()), i});
    }
    return dets;
}

std::vector<Detection> filter_and_nms(std::vector<Detection> dets, const NmsParams& params) {
    std::erase_if(dets, [&](const Detection& d) { return d.score < params.conf_thresh; });
    std::sort(dets.begin(), dets.end(), detection_before);
    std::vector<Detection> kept;
    const auto limit = static_cast<std::size_t>(std::max(1, params.max_det));
    for (auto& d : dets) {
        if (kept.size() >= limit) {
            break;
        }
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
            return box_iou(k.box, d.box) > params.iou_thresh;
        });
        if (!suppressed) {
            kept.push_back(std::move(d));
        }
    }
    return kept;
}

FloatMap mask_logits(std::span<const float> coeffs, const PrototypeView& protos) {
    if (static_cast<int>(coeffs.size()) != protos.channels) {
        throw DimensionError("got " + std::to_string(coeffs.size()) + " coefficients for " +
                             std::to_string(protos.channels) + " prototypes");
    }
    FloatMap out(protos.size, protos.size);
    const std::size_t plane = static_cast<std::size_t>(protos.size) * protos.size;
    std::vector<double> acc(plane, 0.0);
    for (int c = 0; c < protos.channels; ++c) {
        const double w = coeffs[c];
        if (w == 0.0) {
            continue;
        }
        const float* p = protos.data.data() + c * plane;
        for (std::size_t i = 0; i < plane; ++i) {
            acc[i] += w * p[i];
        }
    }
    std::transform(acc.begin(), acc.end(), out.values.begin(), [](double v) { return static_cast<float>(v); });
    return out;
}

AssembledMask assemble_mask(std::span<const float> coeffs, const PrototypeView& protos, int input_size,
                            const BoundingBox& box, double threshold, const MaskGeometry& geom) {
    const int k = protos.channels;
    const int ps = protos.size;
    if (static_cast<int>(coeffs.size()) != k) {
        throw DimensionError("got " + std::to_string(coeffs.size()) + " coefficients for " + std::to_string(k) +
                             " prototypes");
    }
    if (protos.data.size() != static_cast<std::size_t>(k) * ps * ps) {
        throw DimensionError("prototype buffer does not match its declared dimensions");
    }
    if (geom.width <= 0 || geom.height <= 0 || input_size <= 0) {
        throw DimensionError("empty mask geometry");
    }

    AssembledMask result{BinaryMask(geom.width, geom.height), ProbMap{geom.width, geom.height, 0, 0, {}}};
    const int ox0 = std::max(0, static_cast<int>(std::floor(box.x1)));
    const int oy0 = std::max(0, static_cast<int>(std::floor(box.y1)));
    const int ox1 = std::min(geom.width, static_cast<int>(std::ceil(box.x2)));
    const int oy1 = std::min(geom.height, static_cast<int>(std::ceil(box.y2)));
    if (ox1 <= ox0 || oy1 <= oy0) {
        return result;
    }

    const double to_proto = static_cast<double>(ps) / input_size;
    auto proto_coord_x = [&](int x) { return ((x + 0.5) * geom.scale + geom.offset_x) * to_proto - 0.5; };
    auto proto_coord_y = [&](int y) { return ((y + 0.5) * geom.scale + geom.offset_y) * to_proto - 0.5; };

    std::vector<Tap> xtaps(static_cast<std::size_t>(ox1 - ox0));
    std::vector<Tap> ytaps(static_cast<std::size_t>(oy1 - oy0));
    for (int x = ox0; x < ox1; ++x) {
        xtaps[x - ox0] = bilinear_tap(proto_coord_x(x), ps);
    }
    for (int y = oy0; y < oy1; ++y) {
        ytaps[y - oy0] = bilinear_tap(proto_coord_y(y), ps);
    }
    const int px0 = xtaps.front().i0;
    const int px1 = xtaps.back().i1 + 1;
    const int py0 = ytaps.front().i0;
    const int py1 = ytaps.back().i1 + 1;
    const int pw = px1 - px0;
    const int ph = py1 - py0;

    // Sigmoid of the coefficient-weighted prototype sum, restricted to the box's footprint.
    std::vector<double> logit(static_cast<std::size_t>(pw) * ph, 0.0);
    const std::size_t plane = static_cast<std::size_t>(ps) * ps;
    for (int c = 0; c < k; ++c) {
        const double w = coeffs[c];
        if (w == 0.0) {
            continue;
        }
        const float* p = protos.data.data() + c * plane;
        for (int y = 0; y < ph; ++y) {
            const float* row = p + static_cast<std::size_t>(py0 + y) * ps + px0;
            double* dst = logit.data() + static_cast<std::size_t>(y) * pw;
            for (int x = 0; x < pw; ++x) {
                dst[x] += w * row[x];
            }
        }
    }
    for (auto& v : logit) {
        v = sigmoid(v);
    }

    ProbMap& prob = result.prob;
    prob.x0 = ox0;
    prob.y0 = oy0;
    prob.region = FloatMap(ox1 - ox0, oy1 - oy0);
    for (int y = oy0; y < oy1; ++y) {
        const double cy = y + 0.5;
        if (cy < box.y1 || cy >= box.y2) {
            continue;
        }
        const Tap& ty = ytaps[y - oy0];
        const double* r0 = logit.data() + static_cast<std::size_t>(ty.i0 - py0) * pw;
        const double* r1 = logit.data() + static_cast<std::size_t>(ty.i1 - py0) * pw;
        for (int x = ox0; x < ox1; ++x) {
            const double cx = x + 0.5;
            if (cx < box.x1 || cx >= box.x2) {
                continue;
            }
            const Tap& tx = xtaps[x - ox0];
            const int a = tx.i0 - px0;
            const int b = tx.i1 - px0;
            const double top = r0[a] + (r0[b] - r0[a]) * tx.w1;
            const double bot = r1[a] + (r1[b] - r1[a]) * tx.w1;
            const double v = top + (bot - top) * ty.w1;
            prob.region.at(x - ox0, y - oy0) = static_cast<float>(v);
            if (v > threshold) {
                result.mask.set(x, y);
            }
        }
    }
    return result;
}

Segmenter::Segmenter(std::shared_ptr<const InferenceBackend> backend, SegmentOptions options)
    : backend_(std::move(backend)), options_(options) {
    if (!backend_) {
        throw ConfigError("segmenter requires an inference backend");
    }
}

std::shared_ptr<const SegmentCache> Segmenter::segment_everything(std::shared_ptr<const RgbImage> image,
                                                                  std::string image_id) const {
    if (!image || image->width <= 0 || image->height <= 0) {
        throw InputError("empty image");
    }
    const ImageTensor tensor = preprocess(*image, backend_->input_size());
    const RawNetworkOutput raw = backend_->infer(tensor);
    raw.validate();
    auto cache = build_cache(raw, tensor.pad, std::move(image), std::move(image_id));
    ++runs_;
    return cache;
}

std::shared_ptr<const SegmentCache> Segmenter::segment_everything(const RgbImage& image, std::string image_id) const {
    return segment_everything(std::make_shared<const RgbImage>(image), std::move(image_id));
}

std::shared_ptr<const SegmentCache> Segmenter::segment_everything(std::span<const std::uint8_t> image_bytes,
                                                                  std::string image_id) const {
    return segment_everything(std::make_shared<const RgbImage>(decode_image(image_bytes)), std::move(image_id));
}

std::shared_ptr<const SegmentCache> Segmenter::build_cache(const RawNetworkOutput& raw, const PadInfo& pad,
                                                           std::shared_ptr<const RgbImage> image,
                                                           std::string image_id) const {
    auto cache = std::make_shared<SegmentCache>();
    cache->image_id = std::move(image_id);
    cache->pad = pad;
    cache->image = std::move(image);
    cache->options = options_;

    const std::vector<Detection> kept = filter_and_nms(decode_detections(raw, options_.nms.conf_thresh), options_.nms);
    const PrototypeView protos = raw.prototype_view();
    const MaskGeometry geom = MaskGeometry::source_frame(pad);
    const std::size_t min_pixels = std::max<std::size_t>(1, options_.min_mask_pixels);
    for (const Detection& d : kept) {
        const BoundingBox box = pad.to_source(d.box).clamped(pad.source_width, pad.source_height);
        AssembledMask m = assemble_mask(d.coeffs, protos, raw.input_size, box, options_.mask_threshold, geom);
        if (m.mask.count() < min_pixels) {
            continue;
        }
        ScoredInstance inst;
        inst.box = box;
        inst.score = d.score;
        inst.mask_box = bbox_of(m.mask);
        inst.mask = std::move(m.mask);
        if (options_.keep_prob_maps) {
            inst.prob_map = std::move(m.prob);
        }
        inst.anchor_index = d.anchor_index;
        cache->instances.push_back(std::move(inst));
    }
    if (options_.keep_prototypes) {
        cache->proto_channels = raw.num_prototypes;
        cache->proto_size = raw.proto_size;
        cache->prototypes = raw.prototypes;
    }
    return cache;
}

}  // namespace quickseg
