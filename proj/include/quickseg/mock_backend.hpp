#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "quickseg/backend.hpp"
#include "quickseg/scene.hpp"

namespace quickseg {

struct MockOptions {
    int input_size = kDefaultInputSize;
    int num_prototypes = kDefaultPrototypes;
    int reg_max = kDefaultRegMax;
    std::vector<int> strides = default_strides();
    /// Prototype logit per input pixel of signed distance to the shape outline.
    double edge_gain = 1.0;
    double logit_clamp = 12.0;
    /// Low-confidence anchors with random boxes and coefficients, all below 0.4 after sigmoid.
    int distractors = 3;
    /// Emit a second, slightly lower-scored anchor with an identical box per shape.
    bool duplicates = true;
    std::uint64_t seed = 7;
};

/// Number of prototype channels the mock keeps for structured noise.
inline constexpr int kMockNoiseChannels = 2;

/// Synthesises a network output whose decoding reproduces every shape of the scene.
/// Throws CapacityError when the scene has more shapes than num_prototypes - 2.
RawNetworkOutput mock_from_scene(const SyntheticScene& scene, const MockOptions& opts = {});

/// Weight-free backend; ignores pixel content and returns the scene's synthetic output.
class MockBackend : public InferenceBackend {
  public:
    explicit MockBackend(SyntheticScene scene, MockOptions opts = {});

    /// Throws BackendError if the tensor was letterboxed from an image of a different size.
    RawNetworkOutput infer(const ImageTensor& tensor) const override;
    int input_size() const override { return opts_.input_size; }
    std::string name() const override { return "mock"; }

    const SyntheticScene& scene() const { return scene_; }
    std::uint64_t infer_calls() const { return calls_.load(); }

  private:
    SyntheticScene scene_;
    MockOptions opts_;
    RawNetworkOutput output_;
    mutable std::atomic<std::uint64_t> calls_{0};
};

}  // namespace quickseg
