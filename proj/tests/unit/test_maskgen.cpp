#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "quickseg/errors.hpp"
#include "quickseg/maskgen.hpp"
#include "quickseg/mock_backend.hpp"
#include "quickseg/scene.hpp"
#include "test_support.hpp"

using namespace quickseg;

namespace {

double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Textbook suppression-flag NMS.
std::vector<std::size_t> reference_nms(const std::vector<Detection>& dets, double conf, double iou, int max_det) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (dets[i].score >= conf) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].score != dets[b].score ? dets[a].score > dets[b].score
                                              : dets[a].anchor_index < dets[b].anchor_index;
    });
    std::vector<bool> suppressed(order.size(), false);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (suppressed[i]) continue;
        kept.push_back(dets[order[i]].anchor_index);
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            if (box_iou(dets[order[i]].box, dets[order[j]].box) > iou) suppressed[j] = true;
        }
    }
    if (kept.size() > static_cast<std::size_t>(max_det)) kept.resize(max_det);
    return kept;
}

}  // namespace

TEST_CASE("DFL side distance: uniform, one-hot and a three-bin softmax") {
    CHECK(dfl_side_distance(std::vector<float>(26, 0.3f)) == doctest::Approx(12.5).epsilon(1e-12));
    for (int j = 0; j < 26; ++j) {
        std::vector<float> hot(26, -30.0f);
        hot[j] = 30.0f;
        CHECK(dfl_side_distance(hot) == doctest::Approx(j).epsilon(1e-9));
    }
    // softmax(0, ln 2, 0) = (1/4, 1/2, 1/4): expectation 1.
    const std::vector<float> three{0.0f, static_cast<float>(std::log(2.0)), 0.0f};
    CHECK(dfl_side_distance(three) == doctest::Approx(1.0).epsilon(1e-7));
    // softmax(0, ln 2) = (1/3, 2/3): expectation 2/3.
    const std::vector<float> two{0.0f, static_cast<float>(std::log(2.0))};
    CHECK(dfl_side_distance(two) == doctest::Approx(2.0 / 3.0).epsilon(1e-7));
}

TEST_CASE("decode_dfl scales by stride around the anchor and clamps") {
    std::vector<float> logits(4 * 26, -30.0f);
    logits[0 * 26 + 2] = 30.0f;  // l = 2
    logits[1 * 26 + 1] = 30.0f;  // t = 1
    logits[2 * 26 + 3] = 30.0f;  // r = 3
    logits[3 * 26 + 20] = 30.0f; // b = 20
    const BoundingBox b = decode_dfl(logits, Anchor{12, 12, 8}, 26, 64);
    CHECK(b.x1 == 0.0);  // 12 - 16 clamped
    CHECK(b.y1 == doctest::Approx(4));
    CHECK(b.x2 == doctest::Approx(36));
    CHECK(b.y2 == doctest::Approx(64));  // 12 + 160 clamped
}

TEST_CASE("filter_and_nms matches the textbook reference on random clustered boxes") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<Detection> dets;
        const int clusters = 5 + trial % 7;
        for (int c = 0; c < clusters; ++c) {
            const double cx = u(rng) * 200, cy = u(rng) * 200, w = 10 + u(rng) * 40, h = 10 + u(rng) * 40;
            for (int k = 0; k < 12; ++k) {
                const double j = 3 * (u(rng) - 0.5);
                Detection d;
                d.box = {cx - w / 2 + j, cy - h / 2 - j, cx + w / 2 + j * u(rng), cy + h / 2};
                d.score = std::round(u(rng) * 20) / 20;  // coarse scores force ties
                d.anchor_index = dets.size();
                dets.push_back(d);
            }
        }
        std::shuffle(dets.begin(), dets.end(), rng);
        const NmsParams p{0.3, 0.3 + 0.6 * u(rng), 1 + trial * 3};
        const auto kept = filter_and_nms(dets, p);
        std::vector<std::size_t> got;
        for (const auto& d : kept) got.push_back(d.anchor_index);
        CHECK(got == reference_nms(dets, p.conf_thresh, p.iou_thresh, p.max_det));
    }
}

TEST_CASE("NMS boundary conventions") {
    Detection a{{0, 0, 10, 10}, 0.9, {}, 0};
    Detection b{{0, 0, 10, 5}, 0.8, {}, 1};  // IoU 0.5 with a
    Detection c{{50, 50, 60, 60}, 0.4, {}, 2};
    Detection d{{80, 80, 90, 90}, 0.3999, {}, 3};
    // IoU equal to the threshold is not suppressed; score equal to conf is kept.
    auto kept = filter_and_nms({a, b, c, d}, NmsParams{0.4, 0.5, 300});
    CHECK(kept.size() == 3);
    kept = filter_and_nms({a, b, c, d}, NmsParams{0.4, 0.49, 300});
    CHECK(kept.size() == 2);
    kept = filter_and_nms({c, a, b}, NmsParams{0.0, 0.9, 1});
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].anchor_index == 0);
    // Equal scores: lower anchor first.
    Detection e{{0, 0, 10, 10}, 0.9, {}, 7};
    kept = filter_and_nms({e, a}, NmsParams{0.0, 0.9, 300});
    CHECK(kept[0].anchor_index == 0);
    CHECK(kept.size() == 1);
}

TEST_CASE("mask logits are linear in the coefficients") {
    std::mt19937_64 rng(5);
    std::normal_distribution<float> n(0, 1);
    const int k = 6, s = 8;
    std::vector<float> protos(k * s * s);
    for (auto& v : protos) v = n(rng);
    const PrototypeView view{k, s, protos};
    std::vector<float> c1(k), c2(k), mix(k);
    for (int i = 0; i < k; ++i) {
        c1[i] = n(rng);
        c2[i] = n(rng);
        mix[i] = 2.0f * c1[i] - 0.5f * c2[i];
    }
    const FloatMap l1 = mask_logits(c1, view);
    const FloatMap l2 = mask_logits(c2, view);
    const FloatMap lm = mask_logits(mix, view);
    for (std::size_t i = 0; i < lm.values.size(); ++i) {
        CHECK(lm.values[i] == doctest::Approx(2.0 * l1.values[i] - 0.5 * l2.values[i]).epsilon(1e-5));
    }
    CHECK_THROWS_AS(mask_logits(std::vector<float>(k + 1), view), DimensionError);
}

TEST_CASE("assemble_mask at prototype resolution is a plain per-pixel sigmoid") {
    std::mt19937_64 rng(8);
    std::normal_distribution<float> n(0, 2);
    const int k = 3, s = 8;
    std::vector<float> protos(k * s * s);
    for (auto& v : protos) v = n(rng);
    const std::vector<float> c{0.7f, -0.2f, 0.4f};
    // Output pixel x maps to input (x + 0.5) * 4, i.e. exactly prototype centre x.
    const MaskGeometry geom{s, s, 4.0, 0.0, 0.0};
    const AssembledMask m = assemble_mask(c, {k, s, protos}, 4 * s, BoundingBox{0, 0, 8, 8}, 0.5, geom);
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
            double l = 0;
            for (int i = 0; i < k; ++i) l += double(c[i]) * protos[(i * s + y) * s + x];
            CHECK(m.prob.at(x, y) == doctest::Approx(sig(l)).epsilon(1e-6));
            CHECK(m.mask.get(x, y) == (sig(l) > 0.5));
        }
    }
}

TEST_CASE("assemble_mask crops to the box and thresholds strictly") {
    const int s = 4;
    std::vector<float> zeros(s * s, 0.0f);  // logit 0 -> probability exactly 0.5
    const AssembledMask half =
        assemble_mask(std::vector<float>{1.0f}, {1, s, zeros}, 16, BoundingBox{0, 0, 16, 16}, 0.5,
                      MaskGeometry::input_frame(16));
    CHECK(half.mask.count() == 0);
    CHECK(half.prob.at(3, 3) == 0.5f);

    std::vector<float> ones(s * s, 5.0f);
    const AssembledMask crop = assemble_mask(std::vector<float>{1.0f}, {1, s, ones}, 16, BoundingBox{2, 3, 9.4, 7},
                                             0.5, MaskGeometry::input_frame(16));
    // Pixel centres 2.5..8.5 horizontally, 3.5..6.5 vertically.
    CHECK(crop.mask.count() == 7 * 4);
    CHECK(crop.prob.at(1, 5) == 0.0f);
    CHECK(crop.prob.at(9, 5) == 0.0f);
    CHECK(bbox_of(crop.mask) == BoundingBox{2, 3, 9, 7});
}

TEST_CASE("segmenter recovers generated scenes and drops tiny masks") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const SyntheticScene scene = generate_scene(seed);
        auto mock = std::make_shared<MockBackend>(scene);
        Segmenter seg(mock);
        const auto cache = seg.segment_everything(render_scene(scene), "s");
        CHECK(seg.runs() == 1);
        CHECK(cache->instances.size() == scene.shapes.size());
        for (const auto& inst : cache->instances) {
            CHECK(inst.score >= 0.4);
            CHECK(inst.mask.count() >= 4);
            CHECK(inst.mask_box == bbox_of(inst.mask));
            REQUIRE(inst.prob_map.has_value());
        }
        // Instances are in descending score order.
        for (std::size_t i = 1; i < cache->instances.size(); ++i) {
            CHECK(cache->instances[i - 1].score >= cache->instances[i].score);
        }
    }
    SegmentOptions strict;
    strict.min_mask_pixels = 1u << 30;
    Segmenter none(std::make_shared<MockBackend>(generate_scene(2)), strict);
    CHECK(none.segment_everything(render_scene(generate_scene(2)))->instances.empty());
}
