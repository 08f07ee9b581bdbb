#include "quickseg/image.hpp"

#include <fstream>
#include <iterator>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "quickseg/errors.hpp"

namespace quickseg {

namespace {

cv::Mat as_mat(const RgbImage& img) {
    return cv::Mat(img.height, img.width, CV_8UC3, const_cast<std::uint8_t*>(img.data.data()));
}

RgbImage from_rgb_mat(const cv::Mat& rgb) {
    RgbImage out(rgb.cols, rgb.rows);
    cv::Mat dst(rgb.rows, rgb.cols, CV_8UC3, out.data.data());
    rgb.copyTo(dst);
    return out;
}

}  // namespace

RgbImage decode_image(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) {
        throw InputError("empty image buffer");
    }
    const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat bgr;
    try {
        bgr = cv::imdecode(buf, cv::IMREAD_COLOR);
    } catch (const cv::Exception& e) {
        throw InputError(std::string("undecodable image: ") + e.what());
    }
    if (bgr.empty()) {
        throw InputError("undecodable image");
    }
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    return from_rgb_mat(rgb);
}

RgbImage load_image(const std::string& path) { return decode_image(read_file(path)); }

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
    cv::Mat bgr;
    cv::cvtColor(as_mat(img), bgr, cv::COLOR_RGB2BGR);
    std::vector<std::uint8_t> out;
    cv::imencode(".png", bgr, out);
    return out;
}

std::vector<std::uint8_t> encode_gray_png(int width, int height, std::span<const std::uint8_t> gray) {
    const cv::Mat m(height, width, CV_8UC1, const_cast<std::uint8_t*>(gray.data()));
    std::vector<std::uint8_t> out;
    cv::imencode(".png", m, out);
    return out;
}

std::vector<std::uint8_t> decode_gray(std::span<const std::uint8_t> bytes, int& width, int& height) {
    if (bytes.empty()) {
        throw InputError("empty image buffer");
    }
    const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
    const cv::Mat g = cv::imdecode(buf, cv::IMREAD_GRAYSCALE);
    if (g.empty()) {
        throw InputError("undecodable image");
    }
    width = g.cols;
    height = g.rows;
    std::vector<std::uint8_t> out(static_cast<std::size_t>(width) * height);
    cv::Mat dst(height, width, CV_8UC1, out.data());
    g.copyTo(dst);
    return out;
}

RgbImage resize(const RgbImage& img, int width, int height) {
    if (img.width == width && img.height == height) {
        return img;
    }
    cv::Mat dst;
    cv::resize(as_mat(img), dst, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
    return from_rgb_mat(dst);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open file: " + path);
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write file: " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_file(const std::string& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace quickseg
