#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "quickseg/cache_io.hpp"
#include "quickseg/config.hpp"
#include "quickseg/edge.hpp"
#include "quickseg/errors.hpp"
#include "quickseg/eval.hpp"
#include "quickseg/mock_backend.hpp"
#include "quickseg/onnx_backend.hpp"
#include "quickseg/prompt.hpp"
#include "quickseg/rle.hpp"
#include "quickseg/scene.hpp"

namespace py = pybind11;
using namespace quickseg;

namespace {

using BoolArray = py::array_t<bool, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

BinaryMask mask_from_array(const BoolArray& a) {
    if (a.ndim() != 2) {
        throw DimensionError("mask array must be 2-D (height, width)");
    }
    const int h = static_cast<int>(a.shape(0));
    const int w = static_cast<int>(a.shape(1));
    BinaryMask m(w, h);
    auto v = a.unchecked<2>();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (v(y, x)) {
                m.set(x, y);
            }
        }
    }
    return m;
}

py::array_t<bool> mask_to_array(const BinaryMask& m) {
    py::array_t<bool> a({m.height(), m.width()});
    auto v = a.mutable_unchecked<2>();
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            v(y, x) = m.get(x, y);
        }
    }
    return a;
}

py::array_t<float> floatmap_to_array(const FloatMap& f) {
    py::array_t<float> a({f.height, f.width});
    std::copy(f.values.begin(), f.values.end(), a.mutable_data());
    return a;
}

RgbImage image_from_array(const ByteArray& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) {
        throw DimensionError("image array must be (height, width, 3) uint8 RGB");
    }
    RgbImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), img.data.begin());
    return img;
}

py::array_t<std::uint8_t> image_to_array(const RgbImage& img) {
    py::array_t<std::uint8_t> a({img.height, img.width, 3});
    std::copy(img.data.begin(), img.data.end(), a.mutable_data());
    return a;
}

nlohmann::json parse(const std::string& s) { return nlohmann::json::parse(s); }

}  // namespace

PYBIND11_MODULE(_quickseg, m) {
    m.doc() = "Native core of quickseg. JSON-shaped values cross the boundary as strings; the "
              "quickseg package wraps them as dicts.";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<InputError>(m, "InputError", base.ptr());
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<MalformedRleError>(m, "MalformedRleError", base.ptr());
    py::register_exception<BackendError>(m, "BackendError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<CapacityError>(m, "CapacityError", base.ptr());
    py::register_exception<SchemaError>(m, "SchemaError", base.ptr());

    py::class_<BoundingBox>(m, "BoundingBox")
        .def(py::init([](double x1, double y1, double x2, double y2) { return BoundingBox{x1, y1, x2, y2}; }),
             py::arg("x1"), py::arg("y1"), py::arg("x2"), py::arg("y2"))
        .def_readwrite("x1", &BoundingBox::x1)
        .def_readwrite("y1", &BoundingBox::y1)
        .def_readwrite("x2", &BoundingBox::x2)
        .def_readwrite("y2", &BoundingBox::y2)
        .def("area", &BoundingBox::area)
        .def("to_list", [](const BoundingBox& b) { return std::vector<double>{b.x1, b.y1, b.x2, b.y2}; })
        .def("__repr__", [](const BoundingBox& b) { return "BoundingBox(" + box_to_string(b) + ")"; });
    m.def("box_iou", &box_iou);

    m.def("mask_iou", [](const BoolArray& a, const BoolArray& b) { return mask_iou(mask_from_array(a), mask_from_array(b)); });
    m.def("rle_encode", [](const BoolArray& a) { return rle_to_json(rle_encode(mask_from_array(a))).dump(); },
          "COCO compressed RLE as a JSON string {size, counts}");
    m.def("rle_decode", [](const std::string& j) { return mask_to_array(rle_decode(rle_from_json(parse(j)))); });
    m.def("rle_counts_to_string", [](const std::vector<std::uint32_t>& c) { return rle_counts_to_string(c); });
    m.def("rle_counts_from_string", [](const std::string& s) { return rle_counts_from_string(s); });

    py::class_<SyntheticScene>(m, "Scene")
        .def_static("from_json", [](const std::string& j) { return scene_from_json(parse(j)); })
        .def_static("load", &load_scene)
        .def_static("generate", [](std::uint64_t seed, int width, int height, int min_shapes, int max_shapes) {
            SceneGenOptions o;
            o.width = width;
            o.height = height;
            o.min_shapes = min_shapes;
            o.max_shapes = max_shapes;
            return generate_scene(seed, o);
        }, py::arg("seed"), py::arg("width") = 640, py::arg("height") = 480, py::arg("min_shapes") = 1,
           py::arg("max_shapes") = 8)
        .def_static("grid", &grid_scene, py::arg("size"), py::arg("rows"), py::arg("cols"))
        .def_readonly("width", &SyntheticScene::width)
        .def_readonly("height", &SyntheticScene::height)
        .def("__len__", [](const SyntheticScene& s) { return s.shapes.size(); })
        .def("to_json", [](const SyntheticScene& s) { return scene_to_json(s).dump(); })
        .def("render", [](const SyntheticScene& s) { return image_to_array(render_scene(s)); })
        .def("shape_mask", [](const SyntheticScene& s, std::size_t i) {
            if (i >= s.shapes.size()) {
                throw py::index_error("shape index out of range");
            }
            return mask_to_array(rasterize(s.shapes[i], s.width, s.height));
        });

    py::class_<InferenceBackend, std::shared_ptr<InferenceBackend>>(m, "InferenceBackend")
        .def_property_readonly("name", &InferenceBackend::name)
        .def_property_readonly("input_size", &InferenceBackend::input_size);
    py::class_<MockBackend, InferenceBackend, std::shared_ptr<MockBackend>>(m, "MockBackend")
        .def(py::init([](const SyntheticScene& s, int input_size, int num_prototypes) {
                 MockOptions o;
                 o.input_size = input_size;
                 o.num_prototypes = num_prototypes;
                 return std::make_shared<MockBackend>(s, o);
             }),
             py::arg("scene"), py::arg("input_size") = kDefaultInputSize, py::arg("num_prototypes") = kDefaultPrototypes)
        .def_property_readonly("infer_calls", &MockBackend::infer_calls);
    py::class_<OnnxBackend, InferenceBackend, std::shared_ptr<OnnxBackend>>(m, "OnnxBackend")
        .def(py::init([](const std::string& path, int input_size, int reg_max) {
                 return std::make_shared<OnnxBackend>(OnnxModelConfig{path, input_size, reg_max, default_strides()});
             }),
             py::arg("path"), py::arg("input_size") = kDefaultInputSize, py::arg("reg_max") = kDefaultRegMax);

    py::class_<EmbeddingBackend, std::shared_ptr<EmbeddingBackend>>(m, "EmbeddingBackend")
        .def_property_readonly("name", &EmbeddingBackend::name);
    py::class_<MockEmbeddingBackend, EmbeddingBackend, std::shared_ptr<MockEmbeddingBackend>>(m, "MockEmbeddingBackend")
        .def(py::init<SyntheticScene, int>(), py::arg("scene"), py::arg("image_size") = 64);

    py::class_<SegmentCache, std::shared_ptr<SegmentCache>>(m, "SegmentCache")
        .def_property_readonly("image_id", [](const SegmentCache& c) { return c.image_id; })
        .def_property_readonly("width", &SegmentCache::width)
        .def_property_readonly("height", &SegmentCache::height)
        .def("__len__", [](const SegmentCache& c) { return c.instances.size(); })
        .def("score", [](const SegmentCache& c, std::size_t i) { return c.instances.at(i).score; })
        .def("box", [](const SegmentCache& c, std::size_t i) { return c.instances.at(i).box; })
        .def("mask", [](const SegmentCache& c, std::size_t i) { return mask_to_array(c.instances.at(i).mask); })
        .def("to_json", [](const SegmentCache& c) { return cache_to_json(c).dump(); })
        .def("edges", [](const SegmentCache& c, bool sum, bool per_map) {
            EdgeOptions o;
            o.aggregation = sum ? ProbAggregation::SumClipped : ProbAggregation::Max;
            o.per_map_sobel = per_map;
            return floatmap_to_array(edges_from_cache(c, o).strength);
        }, py::arg("sum_aggregation") = false, py::arg("per_map_sobel") = false)
        .def("prompt", [](const SegmentCache& c, const std::string& spec, const EmbeddingBackend* embedder,
                          int closing_iterations) {
            const PromptResult r = run_prompt(c, prompt_from_json(parse(spec)), embedder, nullptr,
                                              MergeOptions{closing_iterations});
            return py::make_tuple(r.indices, r.candidate_scores, mask_to_array(r.mask));
        }, py::arg("spec"), py::arg("embedder") = nullptr, py::arg("closing_iterations") = 1);

    // The segmenter is rebuilt per call; it holds no state beyond options.
    m.def("segment_everything", [](std::shared_ptr<InferenceBackend> backend, const ByteArray& image,
                                   const std::string& image_id, double conf, double iou, int max_det) {
        SegmentOptions o;
        o.nms = {conf, iou, max_det};
        Segmenter seg(std::move(backend), o);
        auto img = std::make_shared<const RgbImage>(image_from_array(image));
        py::gil_scoped_release release;
        return std::const_pointer_cast<SegmentCache>(seg.segment_everything(img, image_id));
    }, py::arg("backend"), py::arg("image"), py::arg("image_id") = "", py::arg("conf") = 0.4, py::arg("iou") = 0.9,
       py::arg("max_det") = 300);

    m.def("proposal_report", [](const std::string& ann, const std::string& props, const std::vector<int>& ks,
                                const std::string& iou_type) {
        const AnnotationSet a = parse_coco_json(parse(ann));
        const ProposalSet p = parse_proposals(parse(props), a);
        return proposal_report(p, a, ks, iou_type == "segm" ? IouType::Mask : IouType::Box).dump();
    }, py::arg("annotations"), py::arg("proposals"), py::arg("budgets") = std::vector<int>{10, 100, 1000},
       py::arg("iou_type") = "bbox");

    m.def("edge_report", [](const std::vector<py::array_t<float, py::array::c_style | py::array::forcecast>>& preds,
                            const std::vector<BoolArray>& gts, double tol, int thresholds) {
        std::vector<EdgeMap> p;
        std::vector<BinaryMask> g;
        for (const auto& a : preds) {
            if (a.ndim() != 2) {
                throw DimensionError("edge maps must be 2-D");
            }
            FloatMap f(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
            std::copy(a.data(), a.data() + a.size(), f.values.begin());
            p.push_back(EdgeMap{std::move(f)});
        }
        for (const auto& a : gts) {
            g.push_back(mask_from_array(a));
        }
        return edge_report(edge_metrics(p, g, tol, thresholds), tol, p.size()).dump();
    }, py::arg("predictions"), py::arg("ground_truth"), py::arg("tolerance") = -1.0, py::arg("thresholds") = 50);
}
