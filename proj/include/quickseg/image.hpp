#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace quickseg {

/// 8-bit RGB image, interleaved, row-major.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    RgbImage() = default;
    RgbImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

    std::uint8_t* pixel(int x, int y) { return &data[(static_cast<std::size_t>(y) * width + x) * 3]; }
    const std::uint8_t* pixel(int x, int y) const {
        return &data[(static_cast<std::size_t>(y) * width + x) * 3];
    }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Decodes PNG/JPEG bytes. Throws InputError when the buffer is not a decodable image.
RgbImage decode_image(std::span<const std::uint8_t> bytes);
RgbImage load_image(const std::string& path);

std::vector<std::uint8_t> encode_png(const RgbImage& img);
/// Single-channel 8-bit PNG.
std::vector<std::uint8_t> encode_gray_png(int width, int height, std::span<const std::uint8_t> gray);
/// Decodes any image to 8-bit grayscale.
std::vector<std::uint8_t> decode_gray(std::span<const std::uint8_t> bytes, int& width, int& height);

/// Bilinear resize, used for letterboxing and embedding crops.
RgbImage resize(const RgbImage& img, int width, int height);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);
void write_file(const std::string& path, const std::string& text);

}  // namespace quickseg
