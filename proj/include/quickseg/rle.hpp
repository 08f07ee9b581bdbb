#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "quickseg/mask.hpp"

namespace quickseg {

/// COCO run-length encoding: alternating 0/1 runs over column-major pixels, starting with a
/// (possibly empty) 0-run.
struct RleMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> counts;

    friend bool operator==(const RleMask&, const RleMask&) = default;
};

RleMask rle_encode(const BinaryMask& m);

/// Throws MalformedRleError when the counts do not cover width * height exactly.
BinaryMask rle_decode(const RleMask& r);

/// COCO compressed ASCII form of `counts` (the string stored in annotation files).
std::string rle_counts_to_string(const std::vector<std::uint32_t>& counts);
std::vector<std::uint32_t> rle_counts_from_string(std::string_view s);

/// Number of set pixels, computed from the runs without decoding.
std::uint64_t rle_area(const RleMask& r);

}  // namespace quickseg
