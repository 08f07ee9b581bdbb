#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "quickseg/image.hpp"
#include "quickseg/scene.hpp"

namespace quickseg {

/// Unit-length feature vector.
using Embedding = std::vector<float>;

/// Scales to unit L2 norm. Throws InputError for a zero vector.
Embedding normalized(std::vector<float> v);
double cosine_similarity(std::span<const float> a, std::span<const float> b);

/// Joint image/text encoder used for text prompts.
class EmbeddingBackend {
  public:
    virtual ~EmbeddingBackend() = default;

    /// Side length of the square crops fed to embed_image.
    virtual int image_size() const = 0;
    virtual Embedding embed_image(const RgbImage& crop) const = 0;
    virtual Embedding embed_text(std::string_view text) const = 0;
    virtual std::string name() const = 0;
};

/// Maps a crop to the one-hot vector of the scene shape whose colour is nearest the crop's mean
/// non-black colour, and a text to the shape whose label matches. Unknown text hashes to a fixed
/// pseudo-random direction.
class MockEmbeddingBackend : public EmbeddingBackend {
  public:
    explicit MockEmbeddingBackend(SyntheticScene scene, int image_size = 64);

    int image_size() const override { return image_size_; }
    Embedding embed_image(const RgbImage& crop) const override;
    Embedding embed_text(std::string_view text) const override;
    std::string name() const override { return "mock"; }

    int dimension() const { return static_cast<int>(scene_.shapes.size()) + 1; }

  private:
    SyntheticScene scene_;
    int image_size_;
};

/// Image encoder from an ONNX file (input `pixel_values`, 1 x 3 x S x S, CLIP mean/std
/// normalised; first output is the embedding) plus a JSON table {"text": [floats], ...} of
/// text embeddings exported offline.
class OnnxEmbeddingBackend : public EmbeddingBackend {
  public:
    OnnxEmbeddingBackend(const std::string& image_model_path, const std::string& text_table_path,
                         int image_size = 224);
    ~OnnxEmbeddingBackend() override;

    int image_size() const override { return image_size_; }
    Embedding embed_image(const RgbImage& crop) const override;
    /// Throws InputError for text absent from the table.
    Embedding embed_text(std::string_view text) const override;
    std::string name() const override { return "onnx"; }

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int image_size_;
};

/// Write-once-per-key memo of per-instance image embeddings. Concurrent callers asking for the
/// same key compute it exactly once.
class EmbeddingMemo {
  public:
    const Embedding& get_or_compute(std::size_t key, const std::function<Embedding()>& compute);

    std::size_t computations() const;

  private:
    struct Slot {
        std::once_flag once;
        Embedding value;
    };
    mutable std::mutex mu_;
    std::unordered_map<std::size_t, std::unique_ptr<Slot>> slots_;
    std::size_t computations_ = 0;
};

}  // namespace quickseg
