#include "quickseg/backend.hpp"

#include <algorithm>
#include <cmath>

#include "quickseg/errors.hpp"

namespace quickseg {

PadInfo PadInfo::letterbox(int source_width, int source_height, int input_size) {
    if (source_width <= 0 || source_height <= 0) {
        throw InputError("image has zero size");
    }
    PadInfo p;
    p.source_width = source_width;
    p.source_height = source_height;
    p.input_size = input_size;
    p.scale = static_cast<double>(input_size) / std::max(source_width, source_height);
    p.pad_x = (input_size - p.content_width()) / 2;
    p.pad_y = (input_size - p.content_height()) / 2;
    return p;
}

int PadInfo::content_width() const {
    return std::clamp(static_cast<int>(std::lround(source_width * scale)), 1, input_size);
}

int PadInfo::content_height() const {
    return std::clamp(static_cast<int>(std::lround(source_height * scale)), 1, input_size);
}

BoundingBox PadInfo::to_input(const BoundingBox& b) const {
    return {b.x1 * scale + pad_x, b.y1 * scale + pad_y, b.x2 * scale + pad_x, b.y2 * scale + pad_y};
}

BoundingBox PadInfo::to_source(const BoundingBox& b) const {
    return {(b.x1 - pad_x) / scale, (b.y1 - pad_y) / scale, (b.x2 - pad_x) / scale,
            (b.y2 - pad_y) / scale};
}

ImageTensor preprocess(const RgbImage& image, int input_size) {
    if (input_size <= 0 || input_size % 32 != 0) {
        throw ConfigError("input size must be a positive multiple of 32");
    }
    ImageTensor t;
    t.size = input_size;
    t.pad = PadInfo::letterbox(image.width, image.height, input_size);
    const std::size_t plane = static_cast<std::size_t>(input_size) * input_size;
    t.data.assign(3 * plane, t.pad_value);

    const RgbImage content = resize(image, t.pad.content_width(), t.pad.content_height());
    for (int y = 0; y < content.height; ++y) {
        for (int x = 0; x < content.width; ++x) {
            const std::uint8_t* px = content.pixel(x, y);
            const std::size_t off = static_cast<std::size_t>(y + t.pad.pad_y) * input_size + (x + t.pad.pad_x);
            for (int c = 0; c < 3; ++c) {
                t.data[c * plane + off] = px[c] / 255.0f;
            }
        }
    }
    return t;
}

ImageTensor preprocess(std::span<const std::uint8_t> image_bytes, int input_size) {
    return preprocess(decode_image(image_bytes), input_size);
}

std::vector<Anchor> make_anchors(int input_size, std::span<const int> strides) {
    std::vector<Anchor> anchors;
    for (int s : strides) {
        const int n = input_size / s;
        for (int gy = 0; gy < n; ++gy) {
            for (int gx = 0; gx < n; ++gx) {
                anchors.push_back({(gx + 0.5f) * s, (gy + 0.5f) * s, static_cast<float>(s)});
            }
        }
    }
    return anchors;
}

void RawNetworkOutput::validate() const {
    const std::size_t a = anchors.size();
    auto fail = [](const std::string& what) { throw BackendError("network output: " + what); };
    if (reg_max < 1) {
        fail("reg_max must be positive");
    }
    if (cls_logits.size() != a) {
        fail("cls_logits has " + std::to_string(cls_logits.size()) + " entries for " + std::to_string(a) + " anchors");
    }
    if (dfl_logits.size() != a * 4 * static_cast<std::size_t>(reg_max)) {
        fail("dfl_logits second dimension is not 4 * reg_max");
    }
    if (mask_coeffs.size() != a * static_cast<std::size_t>(num_prototypes)) {
        fail("mask_coeffs second dimension is not the prototype count");
    }
    if (proto_size * 4 != input_size) {
        fail("prototypes must be at input/4 resolution");
    }
    if (prototypes.size() != static_cast<std::size_t>(num_prototypes) * proto_size * proto_size) {
        fail("prototypes tensor size mismatch");
    }
}

}  // namespace quickseg
