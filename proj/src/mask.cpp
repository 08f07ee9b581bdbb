#include "quickseg/mask.hpp"

#include <bit>
#include <limits>
#include <string>

#include "quickseg/errors.hpp"

namespace quickseg {

namespace {

void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw DimensionError("incompatible masks: " + std::to_string(a.width()) + "x" +
                             std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                             "x" + std::to_string(b.height()));
    }
}

}  // namespace

BinaryMask::BinaryMask(int width, int height)
    : width_(width), height_(height), words_((static_cast<std::size_t>(width) * height + 63) / 64, 0) {
    if (width < 0 || height < 0) {
        throw DimensionError("negative mask dimensions");
    }
}

std::size_t BinaryMask::count() const {
    std::size_t n = 0;
    for (auto w : words_) {
        n += static_cast<std::size_t>(std::popcount(w));
    }
    return n;
}

bool BinaryMask::any() const {
    for (auto w : words_) {
        if (w != 0) {
            return true;
        }
    }
    return false;
}

BinaryMask& BinaryMask::operator|=(const BinaryMask& other) {
    require_same_shape(*this, other);
    for (std::size_t i = 0; i < words_.size(); ++i) {
        words_[i] |= other.words_[i];
    }
    return *this;
}

BinaryMask& BinaryMask::operator&=(const BinaryMask& other) {
    require_same_shape(*this, other);
    for (std::size_t i = 0; i < words_.size(); ++i) {
        words_[i] &= other.words_[i];
    }
    return *this;
}

std::vector<std::uint8_t> BinaryMask::to_bytes() const {
    std::vector<std::uint8_t> out(pixel_count());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<std::uint8_t>((words_[i >> 6] >> (i & 63)) & 1u);
    }
    return out;
}

BinaryMask BinaryMask::from_bytes(int width, int height, std::span<const std::uint8_t> bytes) {
    BinaryMask m(width, height);
    if (bytes.size() != m.pixel_count()) {
        throw DimensionError("byte buffer does not match mask size");
    }
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (bytes[i] != 0) {
            m.words_[i >> 6] |= std::uint64_t{1} << (i & 63);
        }
    }
    return m;
}

std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b);
    auto wa = a.words();
    auto wb = b.words();
    std::size_t n = 0;
    for (std::size_t i = 0; i < wa.size(); ++i) {
        n += static_cast<std::size_t>(std::popcount(wa[i] & wb[i]));
    }
    return n;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b);
    auto wa = a.words();
    auto wb = b.words();
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t i = 0; i < wa.size(); ++i) {
        inter += static_cast<std::size_t>(std::popcount(wa[i] & wb[i]));
        uni += static_cast<std::size_t>(std::popcount(wa[i] | wb[i]));
    }
    if (uni == 0) {
        return 0.0;
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

BoundingBox bbox_of(const BinaryMask& m) {
    int min_x = std::numeric_limits<int>::max();
    int min_y = std::numeric_limits<int>::max();
    int max_x = -1;
    int max_y = -1;
    auto words = m.words();
    const std::size_t w = static_cast<std::size_t>(m.width());
    for (std::size_t wi = 0; wi < words.size(); ++wi) {
        std::uint64_t bits = words[wi];
        while (bits != 0) {
            const int b = std::countr_zero(bits);
            bits &= bits - 1;
            const std::size_t i = wi * 64 + static_cast<std::size_t>(b);
            const int x = static_cast<int>(i % w);
            const int y = static_cast<int>(i / w);
            min_x = std::min(min_x, x);
            max_x = std::max(max_x, x);
            min_y = std::min(min_y, y);
            max_y = std::max(max_y, y);
        }
    }
    if (max_x < 0) {
        return {};
    }
    return {static_cast<double>(min_x), static_cast<double>(min_y), static_cast<double>(max_x + 1),
            static_cast<double>(max_y + 1)};
}

FloatMap ProbMap::to_full() const {
    FloatMap out(image_width, image_height);
    for (int y = 0; y < region.height; ++y) {
        for (int x = 0; x < region.width; ++x) {
            out.at(x0 + x, y0 + y) = region.at(x, y);
        }
    }
    return out;
}

}  // namespace quickseg
