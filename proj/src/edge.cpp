#include "quickseg/edge.hpp"

#include <algorithm>
#include <cmath>

#include "quickseg/errors.hpp"

namespace quickseg {

FloatMap aggregate_prob(const SegmentCache& cache, ProbAggregation mode) {
    FloatMap out(cache.width(), cache.height());
    for (const auto& inst : cache.instances) {
        if (!inst.prob_map) {
            throw ConfigError("segment cache was built without probability maps");
        }
        const ProbMap& pm = *inst.prob_map;
        for (int y = 0; y < pm.region.height; ++y) {
            for (int x = 0; x < pm.region.width; ++x) {
                float& dst = out.at(pm.x0 + x, pm.y0 + y);
                const float v = pm.region.at(x, y);
                dst = mode == ProbAggregation::Max ? std::max(dst, v) : std::min(1.0f, dst + v);
            }
        }
    }
    return out;
}

namespace {

struct RawGradient {
    FloatMap gx;
    FloatMap gy;
};

RawGradient sobel_raw(const FloatMap& f) {
    RawGradient g{FloatMap(f.width, f.height), FloatMap(f.width, f.height)};
    auto at = [&](int x, int y) {
        return f.at(std::clamp(x, 0, f.width - 1), std::clamp(y, 0, f.height - 1));
    };
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            const float a = at(x - 1, y - 1), b = at(x, y - 1), c = at(x + 1, y - 1);
            const float d = at(x - 1, y), e = at(x + 1, y);
            const float h = at(x - 1, y + 1), i = at(x, y + 1), j = at(x + 1, y + 1);
            g.gx.at(x, y) = (c + 2 * e + j) - (a + 2 * d + h);
            g.gy.at(x, y) = (h + 2 * i + j) - (a + 2 * b + c);
        }
    }
    return g;
}

void normalise(FloatMap& m) {
    const float mx = m.values.empty() ? 0.0f : *std::max_element(m.values.begin(), m.values.end());
    if (mx <= 0.0f) {
        std::fill(m.values.begin(), m.values.end(), 0.0f);
        return;
    }
    for (float& v : m.values) {
        v /= mx;
    }
}

float sample_bilinear(const FloatMap& m, double x, double y) {
    if (x < 0 || y < 0 || x > m.width - 1 || y > m.height - 1) {
        return 0.0f;
    }
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, m.width - 1);
    const int y1 = std::min(y0 + 1, m.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = m.at(x0, y0) + (m.at(x1, y0) - m.at(x0, y0)) * fx;
    const double bot = m.at(x0, y1) + (m.at(x1, y1) - m.at(x0, y1)) * fx;
    return static_cast<float>(top + (bot - top) * fy);
}

}  // namespace

GradientField sobel(const FloatMap& map) {
    GradientField out{FloatMap(map.width, map.height), FloatMap(map.width, map.height)};
    if (map.width == 0 || map.height == 0) {
        return out;
    }
    const RawGradient g = sobel_raw(map);
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        const float gx = g.gx.values[i];
        const float gy = g.gy.values[i];
        out.magnitude.values[i] = std::sqrt(gx * gx + gy * gy);
        out.orientation.values[i] = std::atan2(gy, gx);
    }
    normalise(out.magnitude);
    return out;
}

EdgeMap edge_nms(const FloatMap& magnitude, const FloatMap& orientation) {
    if (magnitude.width != orientation.width || magnitude.height != orientation.height) {
        throw DimensionError("magnitude and orientation sizes differ");
    }
    EdgeMap out{FloatMap(magnitude.width, magnitude.height)};
    for (int y = 0; y < magnitude.height; ++y) {
        for (int x = 0; x < magnitude.width; ++x) {
            const float m = magnitude.at(x, y);
            if (m <= 0.0f) {
                continue;
            }
            const double th = orientation.at(x, y);
            const double dx = std::cos(th);
            const double dy = std::sin(th);
            const float n1 = sample_bilinear(magnitude, x + dx, y + dy);
            const float n2 = sample_bilinear(magnitude, x - dx, y - dy);
            if (m >= n1 && m >= n2) {
                out.strength.at(x, y) = m;
            }
        }
    }
    return out;
}

EdgeMap edges_from_cache(const SegmentCache& cache, const EdgeOptions& opts) {
    if (!opts.per_map_sobel) {
        const GradientField g = sobel(aggregate_prob(cache, opts.aggregation));
        return edge_nms(g.magnitude, g.orientation);
    }
    FloatMap mag(cache.width(), cache.height());
    FloatMap orient(cache.width(), cache.height());
    for (const auto& inst : cache.instances) {
        if (!inst.prob_map) {
            throw ConfigError("segment cache was built without probability maps");
        }
        const RawGradient g = sobel_raw(inst.prob_map->to_full());
        for (std::size_t i = 0; i < mag.values.size(); ++i) {
            const float gx = g.gx.values[i];
            const float gy = g.gy.values[i];
            const float m = std::sqrt(gx * gx + gy * gy);
            if (m > mag.values[i]) {
                mag.values[i] = m;
                orient.values[i] = std::atan2(gy, gx);
            }
        }
    }
    normalise(mag);
    return edge_nms(mag, orient);
}

EdgeMap edges_for_image(const Segmenter& segmenter, const RgbImage& image, const EdgeOptions& opts) {
    return edges_from_cache(*segmenter.segment_everything(image), opts);
}

std::vector<std::uint8_t> edge_to_gray(const EdgeMap& e) {
    std::vector<std::uint8_t> out(e.strength.values.size());
    std::transform(e.strength.values.begin(), e.strength.values.end(), out.begin(), [](float v) {
        return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    });
    return out;
}

std::vector<std::uint8_t> edge_to_png(const EdgeMap& e) {
    return encode_gray_png(e.width(), e.height(), edge_to_gray(e));
}

EdgeMap edge_from_gray(int width, int height, const std::vector<std::uint8_t>& gray) {
    if (gray.size() != static_cast<std::size_t>(width) * height) {
        throw DimensionError("gray buffer does not match edge map size");
    }
    EdgeMap e{FloatMap(width, height)};
    std::transform(gray.begin(), gray.end(), e.strength.values.begin(), [](std::uint8_t v) { return v / 255.0f; });
    return e;
}

}  // namespace quickseg
