#include "quickseg/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <random>

#include <opencv2/dnn.hpp>

#include "json.hpp"
#include "quickseg/errors.hpp"

namespace quickseg {

Embedding normalized(std::vector<float> v) {
    double n2 = 0.0;
    for (float x : v) {
        n2 += static_cast<double>(x) * x;
    }
    if (n2 <= 0.0) {
        throw InputError("cannot normalise a zero embedding");
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (float& x : v) {
        x = static_cast<float>(x * inv);
    }
    return v;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw DimensionError("embedding dimensions differ: " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) {
        return 0.0;
    }
    return dot / std::sqrt(na * nb);
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Embedding one_hot(int dim, int i) {
    Embedding e(static_cast<std::size_t>(dim), 0.0f);
    e[static_cast<std::size_t>(i)] = 1.0f;
    return e;
}

}  // namespace

MockEmbeddingBackend::MockEmbeddingBackend(SyntheticScene scene, int image_size)
    : scene_(std::move(scene)), image_size_(image_size) {}

Embedding MockEmbeddingBackend::embed_image(const RgbImage& crop) const {
    const int dim = dimension();
    double sum[3] = {0, 0, 0};
    std::size_t n = 0;
    for (int y = 0; y < crop.height; ++y) {
        for (int x = 0; x < crop.width; ++x) {
            const std::uint8_t* p = crop.pixel(x, y);
            if (p[0] == 0 && p[1] == 0 && p[2] == 0) {
                continue;
            }
            for (int c = 0; c < 3; ++c) {
                sum[c] += p[c];
            }
            ++n;
        }
    }
    if (n == 0 || scene_.shapes.empty()) {
        return one_hot(dim, dim - 1);
    }
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < scene_.shapes.size(); ++i) {
        double d = 0;
        for (int c = 0; c < 3; ++c) {
            const double diff = sum[c] / n - scene_.shapes[i].color[c];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return one_hot(dim, best);
}

Embedding MockEmbeddingBackend::embed_text(std::string_view text) const {
    const int dim = dimension();
    const std::string t = lower(text);
    for (std::size_t i = 0; i < scene_.shapes.size(); ++i) {
        if (lower(scene_.shapes[i].label) == t) {
            return one_hot(dim, static_cast<int>(i));
        }
    }
    for (std::size_t i = 0; i < scene_.shapes.size(); ++i) {
        const std::string l = lower(scene_.shapes[i].label);
        if (!t.empty() && l.find(t) != std::string::npos) {
            return one_hot(dim, static_cast<int>(i));
        }
    }
    std::mt19937_64 rng(fnv1a(t));
    std::normal_distribution<float> g;
    std::vector<float> v(static_cast<std::size_t>(dim));
    for (auto& x : v) {
        x = g(rng);
    }
    return normalized(std::move(v));
}

struct OnnxEmbeddingBackend::Impl {
    std::mutex mu;
    cv::dnn::Net net;
    std::unordered_map<std::string, Embedding> text_table;
};

OnnxEmbeddingBackend::OnnxEmbeddingBackend(const std::string& image_model_path, const std::string& text_table_path,
                                           int image_size)
    : impl_(std::make_unique<Impl>()), image_size_(image_size) {
    if (!std::filesystem::exists(image_model_path)) {
        throw BackendError("embedding model not found: " + image_model_path);
    }
    try {
        impl_->net = cv::dnn::readNetFromONNX(image_model_path);
    } catch (const cv::Exception& e) {
        throw BackendError("cannot load embedding model " + image_model_path + ": " + e.what());
    }
    const auto bytes = read_file(text_table_path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("text embedding table is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) {
        throw SchemaError("$", "text embedding table must map text to vectors");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        impl_->text_table[lower(it.key())] = normalized(it.value().get<std::vector<float>>());
    }
}

OnnxEmbeddingBackend::~OnnxEmbeddingBackend() = default;

Embedding OnnxEmbeddingBackend::embed_image(const RgbImage& crop) const {
    static constexpr float kMean[3] = {0.48145466f, 0.4578275f, 0.40821073f};
    static constexpr float kStd[3] = {0.26862954f, 0.26130258f, 0.27577711f};
    const RgbImage img = resize(crop, image_size_, image_size_);
    const int s = image_size_;
    cv::Mat blob(std::vector<int>{1, 3, s, s}, CV_32F);
    auto* dst = blob.ptr<float>();
    const std::size_t plane = static_cast<std::size_t>(s) * s;
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
            const std::uint8_t* p = img.pixel(x, y);
            for (int c = 0; c < 3; ++c) {
                dst[c * plane + static_cast<std::size_t>(y) * s + x] = (p[c] / 255.0f - kMean[c]) / kStd[c];
            }
        }
    }
    cv::Mat out;
    {
        std::lock_guard lock(impl_->mu);
        try {
            impl_->net.setInput(blob, "pixel_values");
            out = impl_->net.forward().clone();
        } catch (const cv::Exception& e) {
            throw BackendError(std::string("embedding inference failed: ") + e.what());
        }
    }
    const auto* p = out.ptr<float>();
    return normalized(std::vector<float>(p, p + out.total()));
}

Embedding OnnxEmbeddingBackend::embed_text(std::string_view text) const {
    const auto it = impl_->text_table.find(lower(text));
    if (it == impl_->text_table.end()) {
        throw InputError("no text embedding for '" + std::string(text) + "'");
    }
    return it->second;
}

const Embedding& EmbeddingMemo::get_or_compute(std::size_t key, const std::function<Embedding()>& compute) {
    Slot* slot = nullptr;
    {
        std::lock_guard lock(mu_);
        auto& p = slots_[key];
        if (!p) {
            p = std::make_unique<Slot>();
        }
        slot = p.get();
    }
    std::call_once(slot->once, [&] {
        slot->value = compute();
        std::lock_guard lock(mu_);
        ++computations_;
    });
    return slot->value;
}

std::size_t EmbeddingMemo::computations() const {
    std::lock_guard lock(mu_);
    return computations_;
}

}  // namespace quickseg
