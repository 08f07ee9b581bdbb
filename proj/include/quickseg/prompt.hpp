#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "quickseg/embedding.hpp"
#include "quickseg/maskgen.hpp"

namespace quickseg {

enum class PointLabel { Foreground, Background };

/// Point in original image coordinates.
struct PromptPoint {
    double x = 0;
    double y = 0;
    PointLabel label = PointLabel::Foreground;
};

/// Exactly one of: labelled points, a box, or a text query.
struct PromptSpec {
    std::variant<std::vector<PromptPoint>, BoundingBox, std::string> value;

    /// Throws InputError: empty point list, no foreground point, degenerate box, empty text.
    void validate() const;

    bool is_points() const { return std::holds_alternative<std::vector<PromptPoint>>(value); }
    bool is_box() const { return std::holds_alternative<BoundingBox>(value); }
    bool is_text() const { return std::holds_alternative<std::string>(value); }
};

/// {"points":[{"x":..,"y":..,"label":"fg"|"bg"}]} | {"box":[x1,y1,x2,y2]} | {"text":"..."}
/// Throws InputError (after validation) for anything else.
PromptSpec prompt_from_json(const nlohmann::json& j);
nlohmann::json prompt_to_json(const PromptSpec& p);

struct MergeOptions {
    /// Rounds of 3x3 closing applied to the union; 0 disables.
    int closing_iterations = 1;
};

struct PromptResult {
    /// Selected instance indices, ascending.
    std::vector<std::size_t> indices;
    BinaryMask mask;
    /// One value per cache instance: box IoU, text cosine similarity, or for point prompts the
    /// fraction of foreground points inside the mask (0 when a background point hits it).
    std::vector<double> candidate_scores;

    bool empty() const { return indices.empty(); }
};

/// 3x3 square closing; pixels outside the image count as set during erosion, so the
/// result always contains the input.
BinaryMask morphological_close(const BinaryMask& m, int iterations = 1);

/// Pixelwise union followed by closing. Throws InputError on an empty list, DimensionError on
/// mismatched sizes.
BinaryMask merge_masks(std::span<const BinaryMask> masks, const MergeOptions& opts = {});

/// Instances containing a foreground point, minus those containing any background point,
/// merged. Throws InputError for points outside the image.
PromptResult select_by_points(const SegmentCache& cache, std::span<const PromptPoint> points,
                              const MergeOptions& opts = {});

/// The single instance maximising box_iou(box, bbox_of(mask)); ties go to the higher score,
/// then the lower index. Empty when the best IoU is 0.
PromptResult select_by_box(const SegmentCache& cache, const BoundingBox& box, const MergeOptions& opts = {});

/// Crop fed to the embedding backend: mask bbox of the instance, out-of-mask pixels black,
/// centred on a black square and resized to `size`.
RgbImage instance_crop(const SegmentCache& cache, std::size_t index, int size);

/// Argmax cosine similarity between the text embedding and each instance crop's embedding.
/// `memo`, when given, caches the crop embeddings across calls.
PromptResult select_by_text(const SegmentCache& cache, std::string_view text, const EmbeddingBackend& embedder,
                            EmbeddingMemo* memo = nullptr, const MergeOptions& opts = {});

/// Dispatches on the spec's variant. Throws ConfigError for a text prompt without embedder.
PromptResult run_prompt(const SegmentCache& cache, const PromptSpec& spec, const EmbeddingBackend* embedder,
                        EmbeddingMemo* memo = nullptr, const MergeOptions& opts = {});

}  // namespace quickseg
