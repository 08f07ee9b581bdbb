#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "quickseg/geometry.hpp"
#include "quickseg/image.hpp"

namespace quickseg {

inline constexpr int kDefaultInputSize = 1024;
inline constexpr int kDefaultRegMax = 26;
inline constexpr int kDefaultPrototypes = 32;
inline constexpr float kLetterboxPadValue = 114.0f / 255.0f;

/// Letterbox geometry: input = source * scale + pad.
struct PadInfo {
    int source_width = 0;
    int source_height = 0;
    int input_size = kDefaultInputSize;
    double scale = 1.0;
    int pad_x = 0;
    int pad_y = 0;

    static PadInfo letterbox(int source_width, int source_height, int input_size);

    int content_width() const;
    int content_height() const;

    BoundingBox to_input(const BoundingBox& b) const;
    BoundingBox to_source(const BoundingBox& b) const;

    friend bool operator==(const PadInfo&, const PadInfo&) = default;
};

/// Square, channel-major (3 x size x size) tensor with intensities in [0, 1].
struct ImageTensor {
    int size = 0;
    std::vector<float> data;
    float pad_value = kLetterboxPadValue;
    PadInfo pad;
};

ImageTensor preprocess(const RgbImage& image, int input_size = kDefaultInputSize);
/// Decode then letterbox. Throws InputError for undecodable bytes.
ImageTensor preprocess(std::span<const std::uint8_t> image_bytes, int input_size = kDefaultInputSize);

/// Anchor-free grid cell centre, in input pixels.
struct Anchor {
    float cx = 0;
    float cy = 0;
    float stride = 0;
};

std::vector<Anchor> make_anchors(int input_size, std::span<const int> strides);

inline const std::vector<int>& default_strides() {
    static const std::vector<int> s{8, 16, 32};
    return s;
}

/// Read-only view of k prototype maps, each size x size, channel-major.
struct PrototypeView {
    int channels = 0;
    int size = 0;
    std::span<const float> data;

    float at(int c, int x, int y) const {
        return data[(static_cast<std::size_t>(c) * size + y) * size + x];
    }
};

/// Per-image tensors from an inference backend (single class-agnostic score channel).
struct RawNetworkOutput {
    int input_size = kDefaultInputSize;
    int reg_max = kDefaultRegMax;
    int num_prototypes = kDefaultPrototypes;
    int proto_size = kDefaultInputSize / 4;

    std::vector<Anchor> anchors;
    std::vector<float> cls_logits;   // A
    std::vector<float> dfl_logits;   // A x (4 * reg_max), sides ordered l, t, r, b
    std::vector<float> mask_coeffs;  // A x k
    std::vector<float> prototypes;   // k x proto_size x proto_size

    std::size_t num_anchors() const { return anchors.size(); }

    std::span<const float> dfl(std::size_t anchor) const {
        const std::size_t n = 4 * static_cast<std::size_t>(reg_max);
        return std::span(dfl_logits).subspan(anchor * n, n);
    }
    std::span<const float> coeffs(std::size_t anchor) const {
        const std::size_t n = static_cast<std::size_t>(num_prototypes);
        return std::span(mask_coeffs).subspan(anchor * n, n);
    }
    PrototypeView prototype_view() const { return {num_prototypes, proto_size, prototypes}; }

    /// Throws BackendError if any tensor disagrees with the declared dimensions.
    void validate() const;
};

class InferenceBackend {
  public:
    virtual ~InferenceBackend() = default;

    virtual RawNetworkOutput infer(const ImageTensor& tensor) const = 0;
    virtual int input_size() const = 0;
    virtual std::string name() const = 0;
};

}  // namespace quickseg
