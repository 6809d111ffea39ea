#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "morel/common.hpp"

namespace morel {

// H x W x 3 image of doubles. Values are only clamped to [0,1] when written
// out; compositing and loss evaluation run unclamped.
class Image {
public:
    Image() = default;
    Image(int width, int height, double fill = 0.0)
        : width_(width), height_(height), data_(static_cast<size_t>(width) * height * 3, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    size_t size() const { return data_.size(); }

    double& at(int x, int y, int c) { return data_[(static_cast<size_t>(y) * width_ + x) * 3 + c]; }
    double at(int x, int y, int c) const { return data_[(static_cast<size_t>(y) * width_ + x) * 3 + c]; }

    Vec3 pixel(int x, int y) const {
        const size_t i = (static_cast<size_t>(y) * width_ + x) * 3;
        return {data_[i], data_[i + 1], data_[i + 2]};
    }
    void set_pixel(int x, int y, const Vec3& v) {
        const size_t i = (static_cast<size_t>(y) * width_ + x) * 3;
        data_[i] = v.r;
        data_[i + 1] = v.g;
        data_[i + 2] = v.b;
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Image& o) const { return width_ == o.width_ && height_ == o.height_; }

    // Per-channel luminance mean, used by SSIM.
    std::vector<double> luminance() const;

    bool operator==(const Image& o) const {
        return width_ == o.width_ && height_ == o.height_ && data_ == o.data_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

// 8-bit frame kept resident for datasets (4x smaller than doubles).
struct Frame8 {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;  // H*W*3, row-major RGB

    Image to_image() const;
    static Frame8 from_image(const Image& img);

    bool operator==(const Frame8& o) const {
        return width == o.width && height == o.height && data == o.data;
    }
};

// Binary PPM (P6, maxval 255). Values are clamped and rounded on write so a
// write/read roundtrip of an in-gamut image is the identity at 8-bit depth.
void write_ppm(const std::filesystem::path& path, const Image& img);
void write_ppm(const std::filesystem::path& path, const Frame8& frame);
Frame8 read_ppm(const std::filesystem::path& path);

inline uint8_t quantize8(double v) {
    const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return static_cast<uint8_t>(std::lround(c * 255.0));
}

}  // namespace morel
