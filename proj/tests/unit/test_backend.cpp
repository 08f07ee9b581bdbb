#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "quickseg/backend.hpp"
#include "quickseg/errors.hpp"
#include "quickseg/maskgen.hpp"
#include "quickseg/mock_backend.hpp"
#include "quickseg/onnx_backend.hpp"
#include "quickseg/scene.hpp"
#include "test_support.hpp"

using namespace quickseg;

TEST_CASE("letterbox geometry for landscape and portrait sources") {
    const PadInfo a = PadInfo::letterbox(640, 480, 1024);
    CHECK(a.scale == 1.6);
    CHECK(a.content_width() == 1024);
    CHECK(a.content_height() == 768);
    CHECK(a.pad_x == 0);
    CHECK(a.pad_y == 128);

    // 100 * 1024/300 = 341.33 -> 341 columns, (1024 - 341) / 2 = 341 padding on the left.
    const PadInfo b = PadInfo::letterbox(100, 300, 1024);
    CHECK(b.content_width() == 341);
    CHECK(b.content_height() == 1024);
    CHECK(b.pad_x == 341);
    CHECK(b.pad_y == 0);

    const BoundingBox box{10, 20, 30, 40};
    const BoundingBox back = a.to_source(a.to_input(box));
    CHECK(back.x1 == doctest::Approx(10));
    CHECK(back.y2 == doctest::Approx(40));
    CHECK(a.to_input(box) == BoundingBox{16, 160, 48, 192});
}

TEST_CASE("preprocess fills pad with 114/255 and keeps content intensities") {
    RgbImage img(64, 32, 255);
    const ImageTensor t = preprocess(img, 64);
    CHECK(t.size == 64);
    CHECK(t.pad.pad_y == 16);
    const std::size_t plane = 64 * 64;
    CHECK(t.data.size() == 3 * plane);
    CHECK(t.data[0] == doctest::Approx(114.0f / 255.0f));                 // top pad row
    CHECK(t.data[plane + 20 * 64 + 5] == doctest::Approx(1.0f));           // content
    CHECK(t.data[2 * plane + 63 * 64 + 63] == doctest::Approx(114.0f / 255.0f));
    CHECK_THROWS_AS(preprocess(img, 100), ConfigError);
    CHECK_THROWS_AS(preprocess(RgbImage{}, 64), InputError);
}

TEST_CASE("anchors enumerate strides finest first, row-major, at cell centres") {
    const auto a = make_anchors(1024, default_strides());
    CHECK(a.size() == 128 * 128 + 64 * 64 + 32 * 32);
    CHECK(a[0].cx == 4.0f);
    CHECK(a[0].cy == 4.0f);
    CHECK(a[0].stride == 8.0f);
    CHECK(a[1].cx == 12.0f);
    CHECK(a[128].cy == 12.0f);
    CHECK(a[128 * 128].stride == 16.0f);
    CHECK(a[128 * 128].cx == 8.0f);
    CHECK(a.back().cx == 1008.0f);
    CHECK(a.back().stride == 32.0f);
}

TEST_CASE("raw output validation catches mismatched tensors") {
    RawNetworkOutput out;
    out.input_size = 64;
    out.reg_max = 4;
    out.num_prototypes = 2;
    out.proto_size = 16;
    out.anchors = make_anchors(64, default_strides());
    const std::size_t a = out.anchors.size();
    out.cls_logits.assign(a, 0);
    out.dfl_logits.assign(a * 16, 0);
    out.mask_coeffs.assign(a * 2, 0);
    out.prototypes.assign(2 * 16 * 16, 0);
    CHECK_NOTHROW(out.validate());
    out.dfl_logits.pop_back();
    CHECK_THROWS_AS(out.validate(), BackendError);
}

TEST_CASE("scene JSON parses the fixture and reports schema paths") {
    const SyntheticScene s = load_scene(test::data("scene_basic.json"));
    CHECK(s.width == 320);
    REQUIRE(s.shapes.size() == 3);
    CHECK(s.shapes[1].kind == ShapeKind::Disk);
    CHECK(s.shapes[2].label == "blue quad");
    CHECK(scene_from_json(scene_to_json(s)).shapes.size() == 3);

    auto bad = nlohmann::json::parse(R"({"width": 10, "height": 10, "shapes": [{"type": "blob"}]})");
    try {
        scene_from_json(bad);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.path() == "$.shapes[0].type");
    }
    auto missing = nlohmann::json::parse(R"({"width": 10, "height": 10})");
    CHECK_THROWS_AS(scene_from_json(missing), SchemaError);
}

TEST_CASE("rasterize uses pixel centres") {
    SceneShape r;
    r.kind = ShapeKind::Rect;
    r.rect = {1.0, 1.0, 3.0, 2.6};
    const BinaryMask m = rasterize(r, 5, 4);
    // Centres at 1.5, 2.5 horizontally and 1.5, 2.5 vertically are inside.
    CHECK(m.count() == 4);
    CHECK(m.get(1, 1));
    CHECK(m.get(2, 2));
    CHECK_FALSE(m.get(3, 1));
}

TEST_CASE("mock backend reproduces scene shapes and counts inference calls") {
    const SyntheticScene scene = load_scene(test::data("scene_basic.json"));
    auto mock = std::make_shared<MockBackend>(scene);
    Segmenter seg(mock);
    const auto cache = seg.segment_everything(render_scene(scene));
    CHECK(mock->infer_calls() == 1);
    REQUIRE(cache->instances.size() == scene.shapes.size());
    for (std::size_t i = 0; i < scene.shapes.size(); ++i) {
        const BinaryMask truth = rasterize(scene.shapes[i], scene.width, scene.height);
        double best = 0;
        for (const auto& inst : cache->instances) {
            best = std::max(best, mask_iou(inst.mask, truth));
        }
        CHECK(best >= 0.95);
    }
}

TEST_CASE("mock backend rejects images of another size and oversized scenes") {
    const SyntheticScene scene = load_scene(test::data("scene_basic.json"));
    MockBackend mock(scene);
    CHECK_THROWS_AS(mock.infer(preprocess(RgbImage(100, 100), 1024)), BackendError);

    SyntheticScene crowded = grid_scene(512, 6, 6);  // 36 shapes > 32 - 2 channels
    CHECK_THROWS_AS(MockBackend{crowded}, CapacityError);
    MockOptions roomy;
    roomy.num_prototypes = 40;
    CHECK_NOTHROW(MockBackend{crowded, roomy});
}

TEST_CASE("generated scenes are deterministic per seed") {
    const auto a = generate_scene(42);
    const auto b = generate_scene(42);
    CHECK(scene_to_json(a) == scene_to_json(b));
    CHECK(a.shapes.size() >= 1);
    CHECK(a.shapes.size() <= 8);
    CHECK_NOTHROW(a.validate());
}

TEST_CASE("ONNX file backend returns tensors of the documented shapes") {
    OnnxBackend backend(OnnxModelConfig{test::data("tiny_seg.onnx"), 64, 26, default_strides()});
    const ImageTensor t = preprocess(RgbImage(50, 40, 90), 64);
    const RawNetworkOutput out = backend.infer(t);
    CHECK(out.num_anchors() == 8 * 8 + 4 * 4 + 2 * 2);
    CHECK(out.reg_max == 26);
    CHECK(out.num_prototypes == 4);
    CHECK(out.proto_size == 16);
    CHECK(out.dfl_logits.size() == out.num_anchors() * 4 * 26);
    CHECK_NOTHROW(out.validate());
    for (float c : out.mask_coeffs) {
        REQUIRE(std::abs(c) <= 1.0f);
    }
    // Same input, same output.
    CHECK(backend.infer(t).cls_logits == out.cls_logits);

    Segmenter seg(std::make_shared<OnnxBackend>(OnnxModelConfig{test::data("tiny_seg.onnx"), 64, 26,
                                                                default_strides()}));
    const auto cache = seg.segment_everything(RgbImage(50, 40, 90));
    CHECK(cache->width() == 50);
    for (const auto& inst : cache->instances) {
        CHECK(inst.mask.width() == 50);
        CHECK(inst.mask.height() == 40);
    }
}

TEST_CASE("ONNX file backend reports configuration mismatches") {
    CHECK_THROWS_AS(OnnxBackend(OnnxModelConfig{test::data("missing.onnx"), 64, 26, default_strides()}), BackendError);
    OnnxBackend wrong(OnnxModelConfig{test::data("tiny_seg_reg16.onnx"), 64, 26, default_strides()});
    CHECK_THROWS_AS(wrong.infer(preprocess(RgbImage(64, 64), 64)), BackendError);
    OnnxBackend sized(OnnxModelConfig{test::data("tiny_seg.onnx"), 64, 26, default_strides()});
    CHECK_THROWS_AS(sized.infer(preprocess(RgbImage(64, 64), 128)), BackendError);
}
