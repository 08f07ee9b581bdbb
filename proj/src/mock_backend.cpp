#include "quickseg/mock_backend.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include "quickseg/errors.hpp"

namespace quickseg {

namespace {

constexpr float kBackgroundLogit = -9.0f;
constexpr float kSuppressedBin = -1.0e4f;

float logit(double p) { return static_cast<float>(std::log(p / (1.0 - p))); }

// Two-hot logits whose softmax expectation is exactly `distance` bins.
void encode_side(std::span<float> bins, double distance) {
    std::fill(bins.begin(), bins.end(), kSuppressedBin);
    const int reg_max = static_cast<int>(bins.size());
    distance = std::clamp(distance, 0.0, static_cast<double>(reg_max - 1));
    const int lo = static_cast<int>(std::floor(distance));
    const double frac = distance - lo;
    if (frac < 1e-9 || lo + 1 >= reg_max) {
        bins[lo] = 0.0f;
        return;
    }
    bins[lo] = static_cast<float>(std::log(1.0 - frac));
    bins[lo + 1] = static_cast<float>(std::log(frac));
}

struct Level {
    int stride;
    int grid;
    std::size_t offset;
};

class AnchorPicker {
  public:
    AnchorPicker(const MockOptions& opts, std::size_t total) : reg_max_(opts.reg_max), taken_(total, false) {
        std::size_t off = 0;
        for (int s : opts.strides) {
            const int n = opts.input_size / s;
            levels_.push_back({s, n, off});
            off += static_cast<std::size_t>(n) * n;
        }
    }

    // Free anchor whose centre lies inside `box` and whose side distances fit in reg_max bins,
    // preferring the finest stride and the cell nearest the box centre.
    std::optional<std::size_t> pick(const BoundingBox& box) {
        const double mx = (box.x1 + box.x2) / 2;
        const double my = (box.y1 + box.y2) / 2;
        for (const Level& lv : levels_) {
            const double s = lv.stride;
            const double limit = (reg_max_ - 1) * s;
            std::optional<std::size_t> best;
            double best_d = 0;
            const int gx0 = std::max(0, static_cast<int>(std::floor(box.x1 / s)));
            const int gx1 = std::min(lv.grid - 1, static_cast<int>(std::floor(box.x2 / s)));
            const int gy0 = std::max(0, static_cast<int>(std::floor(box.y1 / s)));
            const int gy1 = std::min(lv.grid - 1, static_cast<int>(std::floor(box.y2 / s)));
            for (int gy = gy0; gy <= gy1; ++gy) {
                for (int gx = gx0; gx <= gx1; ++gx) {
                    const double cx = (gx + 0.5) * s;
                    const double cy = (gy + 0.5) * s;
                    if (cx <= box.x1 || cx >= box.x2 || cy <= box.y1 || cy >= box.y2) {
                        continue;
                    }
                    if (cx - box.x1 > limit || box.x2 - cx > limit || cy - box.y1 > limit || box.y2 - cy > limit) {
                        continue;
                    }
                    const std::size_t idx = lv.offset + static_cast<std::size_t>(gy) * lv.grid + gx;
                    if (taken_[idx]) {
                        continue;
                    }
                    const double d = std::hypot(cx - mx, cy - my);
                    if (!best || d < best_d) {
                        best = idx;
                        best_d = d;
                    }
                }
            }
            if (best) {
                taken_[*best] = true;
                return best;
            }
        }
        return std::nullopt;
    }

    std::optional<std::size_t> pick_any(std::mt19937_64& rng) {
        std::uniform_int_distribution<std::size_t> d(0, taken_.size() - 1);
        for (int tries = 0; tries < 64; ++tries) {
            const std::size_t i = d(rng);
            if (!taken_[i]) {
                taken_[i] = true;
                return i;
            }
        }
        return std::nullopt;
    }

  private:
    int reg_max_;
    std::vector<Level> levels_;
    std::vector<bool> taken_;
};

void encode_box(RawNetworkOutput& out, std::size_t anchor, const BoundingBox& box) {
    const Anchor& a = out.anchors[anchor];
    const std::size_t n = static_cast<std::size_t>(out.reg_max);
    std::span<float> dfl = std::span(out.dfl_logits).subspan(anchor * 4 * n, 4 * n);
    encode_side(dfl.subspan(0, n), (a.cx - box.x1) / a.stride);
    encode_side(dfl.subspan(n, n), (a.cy - box.y1) / a.stride);
    encode_side(dfl.subspan(2 * n, n), (box.x2 - a.cx) / a.stride);
    encode_side(dfl.subspan(3 * n, n), (box.y2 - a.cy) / a.stride);
}

void set_coeffs(RawNetworkOutput& out, std::size_t anchor, std::span<const float> c) {
    std::copy(c.begin(), c.end(), out.mask_coeffs.begin() + static_cast<std::ptrdiff_t>(anchor * out.num_prototypes));
}

}  // namespace

RawNetworkOutput mock_from_scene(const SyntheticScene& scene, const MockOptions& opts) {
    scene.validate();
    const int k = opts.num_prototypes;
    if (k < kMockNoiseChannels + 1) {
        throw ConfigError("mock backend needs at least 3 prototype channels");
    }
    if (static_cast<int>(scene.shapes.size()) > k - kMockNoiseChannels) {
        throw CapacityError("scene has " + std::to_string(scene.shapes.size()) + " shapes but only " +
                            std::to_string(k - kMockNoiseChannels) + " prototype channels are available");
    }

    RawNetworkOutput out;
    out.input_size = opts.input_size;
    out.reg_max = opts.reg_max;
    out.num_prototypes = k;
    out.proto_size = opts.input_size / 4;
    out.anchors = make_anchors(opts.input_size, opts.strides);
    const std::size_t a = out.anchors.size();
    out.cls_logits.assign(a, kBackgroundLogit);
    out.mask_coeffs.assign(a * k, 0.0f);
    out.dfl_logits.assign(a * 4 * opts.reg_max, 0.0f);
    const int ps = out.proto_size;
    const std::size_t plane = static_cast<std::size_t>(ps) * ps;
    out.prototypes.assign(plane * k, static_cast<float>(-opts.logit_clamp));

    const PadInfo pad = PadInfo::letterbox(scene.width, scene.height, opts.input_size);

    // Noise channels: smooth stripes that non-selected coefficients pick up with small weight.
    for (int c = k - kMockNoiseChannels; c < k; ++c) {
        const double fx = c == k - 1 ? 0.061 : 0.023;
        const double fy = c == k - 1 ? 0.017 : 0.049;
        for (int y = 0; y < ps; ++y) {
            for (int x = 0; x < ps; ++x) {
                out.prototypes[c * plane + static_cast<std::size_t>(y) * ps + x] =
                    static_cast<float>(3.0 * std::sin(2 * std::numbers::pi * (fx * x + fy * y) + c));
            }
        }
    }
    // Unused shape channels stay flat at the background level.

    AnchorPicker picker(opts, a);
    const double input = opts.input_size;
    for (std::size_t i = 0; i < scene.shapes.size(); ++i) {
        const SceneShape shape = scene.shapes[i].transformed(pad.scale, pad.pad_x, pad.pad_y);
        const BoundingBox box = shape.bounds().clamped(input, input);

        const double reach = opts.logit_clamp / opts.edge_gain + 8.0;
        const int px0 = std::max(0, static_cast<int>(std::floor((box.x1 - reach) / 4)));
        const int py0 = std::max(0, static_cast<int>(std::floor((box.y1 - reach) / 4)));
        const int px1 = std::min(ps, static_cast<int>(std::ceil((box.x2 + reach) / 4)));
        const int py1 = std::min(ps, static_cast<int>(std::ceil((box.y2 + reach) / 4)));
        float* proto = out.prototypes.data() + i * plane;
        for (int y = py0; y < py1; ++y) {
            for (int x = px0; x < px1; ++x) {
                const double d = shape.signed_distance((x + 0.5) * 4.0, (y + 0.5) * 4.0);
                proto[static_cast<std::size_t>(y) * ps + x] =
                    static_cast<float>(std::clamp(d * opts.edge_gain, -opts.logit_clamp, opts.logit_clamp));
            }
        }

        std::vector<float> coeffs(k, 0.0f);
        coeffs[i] = 1.0f;
        coeffs[k - 2] = 0.05f;
        coeffs[k - 1] = -0.05f;

        const auto anchor = picker.pick(box);
        if (!anchor) {
            throw CapacityError("no free anchor can encode shape " + std::to_string(shape.id));
        }
        out.cls_logits[*anchor] = logit(std::clamp(shape.score, 1e-6, 1 - 1e-6));
        encode_box(out, *anchor, box);
        set_coeffs(out, *anchor, coeffs);

        if (opts.duplicates) {
            if (const auto dup = picker.pick(box)) {
                out.cls_logits[*dup] = out.cls_logits[*anchor] - 1.0f;
                encode_box(out, *dup, box);
                set_coeffs(out, *dup, coeffs);
            }
        }
    }

    std::mt19937_64 rng(opts.seed ^ (static_cast<std::uint64_t>(scene.shapes.size()) * 0x9e3779b97f4a7c15ULL));
    std::uniform_real_distribution<float> unit(-1.0f, 1.0f);
    std::uniform_real_distribution<double> low_score(0.05, 0.3);
    for (int d = 0; d < opts.distractors; ++d) {
        const auto anchor = picker.pick_any(rng);
        if (!anchor) {
            break;
        }
        const Anchor& an = out.anchors[*anchor];
        const double half = an.stride * (1.0 + std::abs(unit(rng)) * 4.0);
        encode_box(out, *anchor, BoundingBox{an.cx - half, an.cy - half, an.cx + half, an.cy + half}.clamped(input, input));
        std::vector<float> coeffs(k);
        for (auto& c : coeffs) {
            c = unit(rng);
        }
        set_coeffs(out, *anchor, coeffs);
        out.cls_logits[*anchor] = logit(low_score(rng));
    }
    out.validate();
    return out;
}

MockBackend::MockBackend(SyntheticScene scene, MockOptions opts)
    : scene_(std::move(scene)), opts_(std::move(opts)), output_(mock_from_scene(scene_, opts_)) {}

RawNetworkOutput MockBackend::infer(const ImageTensor& tensor) const {
    ++calls_;
    if (tensor.size != opts_.input_size) {
        throw BackendError("mock backend expects input size " + std::to_string(opts_.input_size));
    }
    if (tensor.pad.source_width != scene_.width || tensor.pad.source_height != scene_.height) {
        throw BackendError("mock scene is " + std::to_string(scene_.width) + "x" + std::to_string(scene_.height) +
                           " but the image is " + std::to_string(tensor.pad.source_width) + "x" +
                           std::to_string(tensor.pad.source_height));
    }
    return output_;
}

}  // namespace quickseg
