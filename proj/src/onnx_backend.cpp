#include "quickseg/onnx_backend.hpp"

#include <filesystem>
#include <mutex>

#include <opencv2/dnn.hpp>

#include "quickseg/errors.hpp"

namespace quickseg {

struct OnnxBackend::Impl {
    // cv::dnn::Net::forward mutates internal buffers; calls are serialised.
    mutable std::mutex mu;
    mutable cv::dnn::Net net;
};

namespace {

const std::vector<std::string> kOutputNames{"cls_logits", "dfl_logits", "mask_coeffs", "prototypes"};

std::vector<int> shape_of(const cv::Mat& m) {
    std::vector<int> s(static_cast<std::size_t>(m.dims));
    for (int i = 0; i < m.dims; ++i) {
        s[i] = m.size[i];
    }
    return s;
}

std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += (i ? "," : "") + std::to_string(s[i]);
    }
    return out + "]";
}

void expect_shape(const std::string& name, const cv::Mat& m, const std::vector<int>& want) {
    // A trailing singleton may be squeezed away by the exporter.
    std::vector<int> got = shape_of(m);
    std::vector<int> w = want;
    while (got.size() > w.size() && got.back() == 1) {
        got.pop_back();
    }
    while (w.size() > got.size() && w.back() == 1) {
        w.pop_back();
    }
    if (got != w) {
        throw BackendError("model output '" + name + "' has shape " + shape_str(shape_of(m)) + ", expected " +
                           shape_str(want));
    }
}

std::vector<float> flat(const cv::Mat& m) {
    const cv::Mat c = m.isContinuous() ? m : m.clone();
    const auto* p = c.ptr<float>();
    return {p, p + c.total()};
}

}  // namespace

OnnxBackend::OnnxBackend(OnnxModelConfig config) : config_(std::move(config)), impl_(std::make_unique<Impl>()) {
    if (!std::filesystem::exists(config_.path)) {
        throw BackendError("model file not found: " + config_.path);
    }
    try {
        impl_->net = cv::dnn::readNetFromONNX(config_.path);
    } catch (const cv::Exception& e) {
        throw BackendError("cannot load model " + config_.path + ": " + e.what());
    }
    if (impl_->net.empty()) {
        throw BackendError("model " + config_.path + " is empty");
    }
}

OnnxBackend::~OnnxBackend() = default;

RawNetworkOutput OnnxBackend::infer(const ImageTensor& tensor) const {
    if (tensor.size != config_.input_size) {
        throw BackendError("tensor size " + std::to_string(tensor.size) + " does not match model input size " +
                           std::to_string(config_.input_size));
    }
    const int s = tensor.size;
    const cv::Mat blob(std::vector<int>{1, 3, s, s}, CV_32F, const_cast<float*>(tensor.data.data()));

    std::vector<cv::Mat> outs;
    {
        std::lock_guard lock(impl_->mu);
        try {
            impl_->net.setInput(blob, "images");
            impl_->net.forward(outs, kOutputNames);
        } catch (const cv::Exception& e) {
            throw BackendError(std::string("inference failed: ") + e.what());
        }
        for (auto& m : outs) {
            m = m.clone();
        }
    }
    if (outs.size() != kOutputNames.size()) {
        throw BackendError("model did not produce the four expected outputs");
    }

    RawNetworkOutput r;
    r.input_size = s;
    r.reg_max = config_.reg_max;
    r.anchors = make_anchors(s, config_.strides);
    r.proto_size = s / 4;
    const int a = static_cast<int>(r.anchors.size());
    const cv::Mat& protos = outs[3];
    if (protos.dims != 4) {
        throw BackendError("model output 'prototypes' must be 4-D, got " + shape_str(shape_of(protos)));
    }
    r.num_prototypes = protos.size[1];
    expect_shape("cls_logits", outs[0], {1, a, 1});
    expect_shape("dfl_logits", outs[1], {1, a, 4 * r.reg_max});
    expect_shape("mask_coeffs", outs[2], {1, a, r.num_prototypes});
    expect_shape("prototypes", protos, {1, r.num_prototypes, r.proto_size, r.proto_size});

    r.cls_logits = flat(outs[0]);
    r.dfl_logits = flat(outs[1]);
    r.mask_coeffs = flat(outs[2]);
    for (auto& c : r.mask_coeffs) {
        c = std::clamp(c, -1.0f, 1.0f);
    }
    r.prototypes = flat(protos);
    r.validate();
    return r;
}

}  // namespace quickseg
