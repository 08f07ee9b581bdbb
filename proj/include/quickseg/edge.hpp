#pragma once

#include <cstdint>
#include <vector>

#include "quickseg/maskgen.hpp"
#include "quickseg/mask.hpp"

namespace quickseg {

/// Per-pixel edge strength in [0, 1].
struct EdgeMap {
    FloatMap strength;

    int width() const { return strength.width; }
    int height() const { return strength.height; }
};

enum class ProbAggregation {
    Max,         // pixelwise maximum over instances
    SumClipped,  // pixelwise sum, clipped to 1
};

/// Combines every instance probability map at image resolution; zeros for an empty cache.
FloatMap aggregate_prob(const SegmentCache& cache, ProbAggregation mode = ProbAggregation::Max);

struct GradientField {
    FloatMap magnitude;    // normalised by its maximum, 0 everywhere if the maximum is 0
    FloatMap orientation;  // atan2(gy, gx), radians
};

/// 3x3 Sobel with replicated borders.
GradientField sobel(const FloatMap& map);

/// Keeps a pixel iff its magnitude is >= both neighbours one pixel away along the gradient
/// direction (linearly interpolated). Throws DimensionError on mismatched inputs.
EdgeMap edge_nms(const FloatMap& magnitude, const FloatMap& orientation);

struct EdgeOptions {
    ProbAggregation aggregation = ProbAggregation::Max;
    /// Run Sobel on each instance map and keep the strongest response per pixel, instead of
    /// filtering the aggregated map.
    bool per_map_sobel = false;
};

EdgeMap edges_from_cache(const SegmentCache& cache, const EdgeOptions& opts = {});
EdgeMap edges_for_image(const Segmenter& segmenter, const RgbImage& image, const EdgeOptions& opts = {});

/// strength * 255, rounded.
std::vector<std::uint8_t> edge_to_gray(const EdgeMap& e);
std::vector<std::uint8_t> edge_to_png(const EdgeMap& e);
/// Inverse of edge_to_gray, for reading stored predictions.
EdgeMap edge_from_gray(int width, int height, const std::vector<std::uint8_t>& gray);

}  // namespace quickseg
