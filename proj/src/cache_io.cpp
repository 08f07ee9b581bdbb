#include "quickseg/cache_io.hpp"

#include <sstream>

#include "quickseg/errors.hpp"

namespace quickseg {

nlohmann::json rle_to_json(const RleMask& r) {
    return {{"size", {r.height, r.width}}, {"counts", rle_counts_to_string(r.counts)}};
}

RleMask rle_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) {
        throw SchemaError(path, "RLE must be an object with 'size' and 'counts'");
    }
    if (!j.contains("size") || !j["size"].is_array() || j["size"].size() != 2) {
        throw SchemaError(path + ".size", "missing or not [height, width]");
    }
    if (!j.contains("counts")) {
        throw SchemaError(path + ".counts", "missing");
    }
    RleMask r;
    r.height = j["size"][0].get<int>();
    r.width = j["size"][1].get<int>();
    const auto& c = j["counts"];
    if (c.is_string()) {
        r.counts = rle_counts_from_string(c.get<std::string>());
    } else if (c.is_array()) {
        r.counts.reserve(c.size());
        for (const auto& v : c) {
            if (!v.is_number_integer() || v.get<long long>() < 0) {
                throw SchemaError(path + ".counts", "counts must be non-negative integers");
            }
            r.counts.push_back(v.get<std::uint32_t>());
        }
    } else {
        throw SchemaError(path + ".counts", "must be a string or an integer array");
    }
    return r;
}

std::string box_to_string(const BoundingBox& b) {
    std::ostringstream os;
    os << b.x1 << "," << b.y1 << "," << b.x2 << "," << b.y2;
    return os.str();
}

nlohmann::json cache_to_json(const SegmentCache& cache) {
    nlohmann::json instances = nlohmann::json::array();
    for (std::size_t i = 0; i < cache.instances.size(); ++i) {
        const ScoredInstance& inst = cache.instances[i];
        const BoundingBox& b = inst.box;
        instances.push_back({{"index", i},
                             {"image_id", cache.image_id},
                             {"score", inst.score},
                             {"box", {b.x1, b.y1, b.x2, b.y2}},
                             {"bbox", {b.x1, b.y1, b.width(), b.height()}},
                             {"area", inst.mask.count()},
                             {"segmentation", rle_to_json(rle_encode(inst.mask))}});
    }
    return {{"image_id", cache.image_id},
            {"width", cache.width()},
            {"height", cache.height()},
            {"pad",
             {{"input_size", cache.pad.input_size},
              {"scale", cache.pad.scale},
              {"pad_x", cache.pad.pad_x},
              {"pad_y", cache.pad.pad_y}}},
            {"instances", instances}};
}

}  // namespace quickseg
