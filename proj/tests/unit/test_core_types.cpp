#include <fstream>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "quickseg/cache_io.hpp"
#include "quickseg/errors.hpp"
#include "quickseg/geometry.hpp"
#include "quickseg/image.hpp"
#include "quickseg/mask.hpp"
#include "quickseg/rle.hpp"
#include "test_support.hpp"

using namespace quickseg;

namespace {

// Box IoU computed by counting unit cells of an integer-coordinate box pair.
double raster_box_iou(int ax1, int ay1, int ax2, int ay2, int bx1, int by1, int bx2, int by2) {
    int inter = 0, uni = 0;
    for (int y = std::min(ay1, by1); y < std::max(ay2, by2); ++y) {
        for (int x = std::min(ax1, bx1); x < std::max(ax2, bx2); ++x) {
            const bool a = x >= ax1 && x < ax2 && y >= ay1 && y < ay2;
            const bool b = x >= bx1 && x < bx2 && y >= by1 && y < by2;
            inter += a && b;
            uni += a || b;
        }
    }
    return uni ? static_cast<double>(inter) / uni : 0.0;
}

// Column-major run lengths written out longhand.
std::vector<std::uint32_t> naive_runs(const BinaryMask& m) {
    std::vector<std::uint32_t> runs;
    bool cur = false;
    std::uint32_t n = 0;
    for (int x = 0; x < m.width(); ++x) {
        for (int y = 0; y < m.height(); ++y) {
            if (m.get(x, y) != cur) {
                runs.push_back(n);
                cur = !cur;
                n = 0;
            }
            ++n;
        }
    }
    runs.push_back(n);
    return runs;
}

}  // namespace

TEST_CASE("box IoU of half-overlapping squares is one third") {
    const BoundingBox a{0, 0, 2, 2};
    const BoundingBox b{1, 0, 3, 2};
    CHECK(box_iou(a, b) == doctest::Approx(raster_box_iou(0, 0, 2, 2, 1, 0, 3, 2)).epsilon(1e-12));
    CHECK(box_iou(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("box IoU matches rasterized counts on random integer boxes") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> c(0, 20);
    for (int i = 0; i < 300; ++i) {
        int ax1 = c(rng), ax2 = c(rng), ay1 = c(rng), ay2 = c(rng);
        int bx1 = c(rng), bx2 = c(rng), by1 = c(rng), by2 = c(rng);
        if (ax1 > ax2) std::swap(ax1, ax2);
        if (ay1 > ay2) std::swap(ay1, ay2);
        if (bx1 > bx2) std::swap(bx1, bx2);
        if (by1 > by2) std::swap(by1, by2);
        const double got = box_iou({double(ax1), double(ay1), double(ax2), double(ay2)},
                                   {double(bx1), double(by1), double(bx2), double(by2)});
        CHECK(got == doctest::Approx(raster_box_iou(ax1, ay1, ax2, ay2, bx1, by1, bx2, by2)).epsilon(1e-12));
    }
}

TEST_CASE("box IoU edge cases") {
    CHECK(box_iou({0, 0, 1, 1}, {2, 2, 3, 3}) == 0.0);
    CHECK(box_iou({0, 0, 4, 4}, {0, 0, 4, 4}) == 1.0);
    CHECK(box_iou({1, 1, 1, 1}, {1, 1, 1, 1}) == 0.0);
    CHECK(BoundingBox::from_xywh(2, 3, 4, 5) == BoundingBox{2, 3, 6, 8});
    CHECK(BoundingBox{-5, -5, 50, 50}.clamped(10, 20) == BoundingBox{0, 0, 10, 20});
}

TEST_CASE("mask IoU of a mask inside one twice its size is one half") {
    const auto a = test::from_art({"##..", "...."});
    const auto b = test::from_art({"####", "...."});
    CHECK(mask_iou(a, b) == 0.5);
    CHECK(intersection_count(a, b) == 2);
    CHECK(mask_iou(BinaryMask(4, 2), BinaryMask(4, 2)) == 0.0);
    CHECK_THROWS_AS(mask_iou(a, BinaryMask(3, 2)), DimensionError);
}

TEST_CASE("mask IoU agrees with a per-pixel count") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto a = test::random_mask(rng, 67, 13, 0.4);
        const auto b = test::random_mask(rng, 67, 13, 0.6);
        int inter = 0, uni = 0;
        for (int y = 0; y < 13; ++y) {
            for (int x = 0; x < 67; ++x) {
                inter += a.get(x, y) && b.get(x, y);
                uni += a.get(x, y) || b.get(x, y);
            }
        }
        CHECK(mask_iou(a, b) == doctest::Approx(double(inter) / uni).epsilon(1e-12));
    }
}

TEST_CASE("bbox_of uses pixel edges") {
    const auto m = test::from_art({".....", "..#..", "..##.", "....."});
    CHECK(bbox_of(m) == BoundingBox{2, 1, 4, 3});
    CHECK(bbox_of(BinaryMask(3, 3)).empty());
}

TEST_CASE("RLE hand examples") {
    BinaryMask zeros(2, 2);
    CHECK(rle_encode(zeros).counts == std::vector<std::uint32_t>{4});
    BinaryMask ones(2, 2);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) ones.set(x, y);
    CHECK(rle_encode(ones).counts == std::vector<std::uint32_t>{0, 4});
    BinaryMask center(3, 3);
    center.set(1, 1);
    CHECK(rle_encode(center).counts == std::vector<std::uint32_t>{4, 1, 4});

    // Column-major: in a 3-wide, 2-high mask pixel (x=1, y=0) is the third in scan order.
    BinaryMask col(3, 2);
    col.set(1, 0);
    CHECK(rle_encode(col).counts == std::vector<std::uint32_t>{2, 1, 3});
}

TEST_CASE("RLE round-trips 1000 random masks and matches the longhand encoder") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> side(1, 40);
    std::uniform_real_distribution<double> dens(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const auto m = test::random_mask(rng, side(rng), side(rng), dens(rng));
        const RleMask r = rle_encode(m);
        REQUIRE(r.counts == naive_runs(m));
        CHECK(rle_decode(r) == m);
        CHECK(rle_area(r) == m.count());
        CHECK(rle_counts_from_string(rle_counts_to_string(r.counts)) == r.counts);
    }
}

TEST_CASE("RLE decode rejects counts that do not cover the image") {
    CHECK_THROWS_AS(rle_decode(RleMask{2, 2, {3}}), MalformedRleError);
    CHECK_THROWS_AS(rle_decode(RleMask{2, 2, {3, 2}}), MalformedRleError);
    CHECK_THROWS_AS(rle_counts_from_string("ab\x01"), MalformedRleError);
}

TEST_CASE("pycocotools-encoded strings decode to the same runs and area") {
    std::ifstream f(test::data("rle_vectors.json"));
    REQUIRE(f.good());
    const auto vectors = nlohmann::json::parse(f);
    REQUIRE(vectors.size() >= 9);
    for (const auto& v : vectors) {
        const int h = v["size"][0];
        const int w = v["size"][1];
        const auto counts = rle_counts_from_string(v["counts"].get<std::string>());
        CHECK(counts == v["uncompressed"].get<std::vector<std::uint32_t>>());
        const RleMask r{w, h, counts};
        const BinaryMask m = rle_decode(r);
        CHECK(m.count() == v["area"].get<std::size_t>());
        // Re-encoding reproduces pycocotools' string exactly.
        CHECK(rle_counts_to_string(rle_encode(m).counts) == v["counts"].get<std::string>());
        if (!v["pixels_colmajor"].is_null()) {
            const auto px = v["pixels_colmajor"].get<std::string>();
            for (int x = 0, i = 0; x < w; ++x)
                for (int y = 0; y < h; ++y, ++i) REQUIRE(m.get(x, y) == (px[i] == '1'));
        }
    }
}

TEST_CASE("RLE JSON accepts string or integer counts and reports bad paths") {
    const auto j = nlohmann::json::parse(R"({"size": [3, 3], "counts": [4, 1, 4]})");
    const RleMask r = rle_from_json(j);
    CHECK(r.width == 3);
    CHECK(r.height == 3);
    CHECK(rle_from_json(rle_to_json(r)) == r);
    try {
        rle_from_json(nlohmann::json::parse(R"({"counts": "4"})"), "$.ann[0]");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.path().find("$.ann[0]") == 0);
    }
}

TEST_CASE("PNG encode/decode round trip and undecodable input") {
    RgbImage img(5, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x) {
            auto* p = img.pixel(x, y);
            p[0] = static_cast<std::uint8_t>(x * 40);
            p[1] = static_cast<std::uint8_t>(y * 60);
            p[2] = 7;
        }
    CHECK(decode_image(encode_png(img)) == img);
    const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5};
    CHECK_THROWS_AS(decode_image(junk), InputError);
    CHECK_THROWS_AS(decode_image(std::vector<std::uint8_t>{}), InputError);
}
