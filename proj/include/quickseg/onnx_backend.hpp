#pragma once

#include <memory>
#include <string>
#include <vector>

#include "quickseg/backend.hpp"

namespace quickseg {

/// Model file layout: one input named `images` (1 x 3 x S x S, RGB in [0, 1]) and four outputs
///   cls_logits  1 x A x 1
///   dfl_logits  1 x A x 4*reg_max
///   mask_coeffs 1 x A x k
///   prototypes  1 x k x S/4 x S/4
/// where A enumerates the stride-8, 16, 32 grids row-major, finest first.
struct OnnxModelConfig {
    std::string path;
    int input_size = kDefaultInputSize;
    int reg_max = kDefaultRegMax;
    std::vector<int> strides = default_strides();
};

class OnnxBackend : public InferenceBackend {
  public:
    /// Throws BackendError when the file is missing or not loadable.
    explicit OnnxBackend(OnnxModelConfig config);
    ~OnnxBackend() override;

    RawNetworkOutput infer(const ImageTensor& tensor) const override;
    int input_size() const override { return config_.input_size; }
    std::string name() const override { return "onnx:" + config_.path; }

  private:
    struct Impl;
    OnnxModelConfig config_;
    std::unique_ptr<Impl> impl_;
};

}  // namespace quickseg
