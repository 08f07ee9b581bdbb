#pragma once

#include <string>

#include "json.hpp"
#include "quickseg/maskgen.hpp"
#include "quickseg/rle.hpp"

namespace quickseg {

/// {"size": [h, w], "counts": "<COCO compressed string>"}
nlohmann::json rle_to_json(const RleMask& r);

/// Accepts compressed-string or integer-array counts. `path` prefixes schema errors.
RleMask rle_from_json(const nlohmann::json& j, const std::string& path = "$");

std::string box_to_string(const BoundingBox& b);

/// Everything-mode document:
///   {"image_id", "width", "height",
///    "pad": {"input_size", "scale", "pad_x", "pad_y"},
///    "instances": [{"index", "image_id", "score", "box": [x1,y1,x2,y2], "bbox": [x,y,w,h],
///                   "area", "segmentation": {"size": [h,w], "counts": "..."}}]}
/// Each instance is also a valid COCO results-format record, so the document can be fed to
/// proposal evaluation unchanged.
nlohmann::json cache_to_json(const SegmentCache& cache);

}  // namespace quickseg
