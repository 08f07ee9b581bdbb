#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quickseg/backend.hpp"
#include "quickseg/geometry.hpp"
#include "quickseg/image.hpp"
#include "quickseg/mask.hpp"

namespace quickseg {

/// One decoded anchor prediction, in the padded input frame.
struct Detection {
    BoundingBox box;
    double score = 0;
    std::vector<float> coeffs;
    std::size_t anchor_index = 0;
};

/// Expectation of the softmax distribution over one side's bins, in grid units.
double dfl_side_distance(std::span<const float> bins);

/// Decodes 4 * reg_max logits (sides l, t, r, b) around an anchor and clamps to [0, bound]^2.
BoundingBox decode_dfl(std::span<const float> logits, const Anchor& anchor, int reg_max, double bound);

/// Decodes anchors whose sigmoid score reaches conf_thresh. Output is in anchor order.
std::vector<Detection> decode_detections(const RawNetworkOutput& out, double conf_thresh);

struct NmsParams {
    double conf_thresh = 0.4;
    double iou_thresh = 0.9;
    int max_det = 300;
};

/// Drops score < conf_thresh, then greedy NMS in (score desc, anchor asc) order, suppressing
/// box IoU > iou_thresh, keeping at most max_det.
std::vector<Detection> filter_and_nms(std::vector<Detection> dets, const NmsParams& params);

/// Maps output pixel centres into the input frame: u = (x + 0.5) * scale + offset.
struct MaskGeometry {
    int width = 0;
    int height = 0;
    double scale = 1.0;
    double offset_x = 0.0;
    double offset_y = 0.0;

    static MaskGeometry input_frame(int input_size) { return {input_size, input_size, 1.0, 0.0, 0.0}; }
    /// Output in original image coordinates.
    static MaskGeometry source_frame(const PadInfo& pad) {
        return {pad.source_width, pad.source_height, pad.scale, static_cast<double>(pad.pad_x),
                static_cast<double>(pad.pad_y)};
    }
};

struct AssembledMask {
    BinaryMask mask;
    ProbMap prob;
};

/// Prototype-resolution logits sum_i coeffs_i * P_i.
FloatMap mask_logits(std::span<const float> coeffs, const PrototypeView& protos);

/// sigmoid(sum_i coeffs_i * P_i) at prototype resolution, bilinearly upsampled (half-pixel
/// centres, edge clamped) into `geom`, zeroed outside `box` (given in the output frame), and
/// thresholded strictly. Throws DimensionError when coeffs and prototypes disagree.
AssembledMask assemble_mask(std::span<const float> coeffs, const PrototypeView& protos, int input_size,
                            const BoundingBox& box, double threshold, const MaskGeometry& geom);

struct ScoredInstance {
    BoundingBox box;  // original image frame
    double score = 0;
    BinaryMask mask;
    std::optional<ProbMap> prob_map;
    /// bbox_of(mask), cached for box prompts.
    BoundingBox mask_box;
    std::size_t anchor_index = 0;
};

struct SegmentOptions {
    NmsParams nms;
    double mask_threshold = 0.5;
    std::size_t min_mask_pixels = 4;
    bool keep_prob_maps = true;
    bool keep_prototypes = true;
};

/// Frozen everything-mode result for one image; shared read-only by every prompt.
struct SegmentCache {
    std::string image_id;
    PadInfo pad;
    std::shared_ptr<const RgbImage> image;
    std::vector<ScoredInstance> instances;
    int proto_channels = 0;
    int proto_size = 0;
    std::vector<float> prototypes;
    SegmentOptions options;

    int width() const { return pad.source_width; }
    int height() const { return pad.source_height; }
};

/// Stage one: preprocess, infer, decode, NMS and mask assembly.
class Segmenter {
  public:
    explicit Segmenter(std::shared_ptr<const InferenceBackend> backend, SegmentOptions options = {});

    std::shared_ptr<const SegmentCache> segment_everything(std::shared_ptr<const RgbImage> image,
                                                           std::string image_id = {}) const;
    std::shared_ptr<const SegmentCache> segment_everything(const RgbImage& image, std::string image_id = {}) const;
    /// Decodes the bytes first; throws InputError if they are not an image.
    std::shared_ptr<const SegmentCache> segment_everything(std::span<const std::uint8_t> image_bytes,
                                                           std::string image_id = {}) const;

    /// Post-processing only, for callers that already hold network output.
    std::shared_ptr<const SegmentCache> build_cache(const RawNetworkOutput& raw, const PadInfo& pad,
                                                    std::shared_ptr<const RgbImage> image,
                                                    std::string image_id) const;

    const InferenceBackend& backend() const { return *backend_; }
    const SegmentOptions& options() const { return options_; }
    /// Number of completed stage-one runs.
    std::uint64_t runs() const { return runs_.load(); }

  private:
    std::shared_ptr<const InferenceBackend> backend_;
    SegmentOptions options_;
    mutable std::atomic<std::uint64_t> runs_{0};
};

}  // namespace quickseg
