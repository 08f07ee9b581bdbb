#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "quickseg/geometry.hpp"

namespace quickseg {

/// One bit per pixel, row-major, packed into 64-bit words.
class BinaryMask {
  public:
    BinaryMask() = default;
    BinaryMask(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

    bool get(int x, int y) const {
        const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }
    void set(int x, int y, bool value = true) {
        const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
        const std::uint64_t bit = std::uint64_t{1} << (i & 63);
        if (value) {
            words_[i >> 6] |= bit;
        } else {
            words_[i >> 6] &= ~bit;
        }
    }
    bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    /// Number of set pixels.
    std::size_t count() const;
    bool any() const;

    std::span<const std::uint64_t> words() const { return words_; }
    std::span<std::uint64_t> words() { return words_; }

    BinaryMask& operator|=(const BinaryMask& other);
    BinaryMask& operator&=(const BinaryMask& other);

    /// Unpack to one byte (0/1) per pixel, row-major.
    std::vector<std::uint8_t> to_bytes() const;
    static BinaryMask from_bytes(int width, int height, std::span<const std::uint8_t> bytes);

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

  private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint64_t> words_;
};

/// popcount(a & b) / popcount(a | b); 0 when both are empty. Throws DimensionError.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

/// popcount(a & b). Throws DimensionError.
std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b);

/// Tightest pixel-edge box around set pixels; BoundingBox{} for an empty mask.
BoundingBox bbox_of(const BinaryMask& m);

/// Dense single-channel float image, row-major.
struct FloatMap {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    FloatMap() = default;
    FloatMap(int w, int h, float fill = 0.0f)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

    float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }

    friend bool operator==(const FloatMap&, const FloatMap&) = default;
};

/// Probability map stored only over a rectangular region of a larger image; zero elsewhere.
struct ProbMap {
    int image_width = 0;
    int image_height = 0;
    int x0 = 0;
    int y0 = 0;
    FloatMap region;

    float at(int x, int y) const {
        const int rx = x - x0;
        const int ry = y - y0;
        if (rx < 0 || ry < 0 || rx >= region.width || ry >= region.height) {
            return 0.0f;
        }
        return region.at(rx, ry);
    }

    FloatMap to_full() const;
};

}  // namespace quickseg
