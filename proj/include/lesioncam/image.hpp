#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lesioncam/errors.hpp"
#include "lesioncam/tensor.hpp"

namespace lesioncam {

struct GrayImage {
    int w = 0, h = 0;
    std::vector<std::uint8_t> px;  // row-major, h*w

    GrayImage() = default;
    GrayImage(int w_, int h_) : w(w_), h(h_), px(static_cast<std::size_t>(w_) * h_, 0) {}

    std::uint8_t& at(int x, int y) { return px[static_cast<std::size_t>(y) * w + x]; }
    std::uint8_t at(int x, int y) const { return px[static_cast<std::size_t>(y) * w + x]; }
};

struct RgbImage {
    int w = 0, h = 0;
    std::vector<std::uint8_t> px;  // row-major, interleaved rgb, 3*h*w

    RgbImage() = default;
    RgbImage(int w_, int h_) : w(w_), h(h_), px(static_cast<std::size_t>(w_) * h_ * 3, 0) {}

    std::uint8_t& at(int x, int y, int ch) {
        return px[(static_cast<std::size_t>(y) * w + x) * 3 + ch];
    }
    std::uint8_t at(int x, int y, int ch) const {
        return px[(static_cast<std::size_t>(y) * w + x) * 3 + ch];
    }
    bool same_size(const RgbImage& o) const { return w == o.w && h == o.h; }
};

struct BinaryMask {
    int w = 0, h = 0;
    std::vector<std::uint8_t> px;  // 0/1

    BinaryMask() = default;
    BinaryMask(int w_, int h_) : w(w_), h(h_), px(static_cast<std::size_t>(w_) * h_, 0) {}

    std::uint8_t& at(int x, int y) { return px[static_cast<std::size_t>(y) * w + x]; }
    std::uint8_t at(int x, int y) const { return px[static_cast<std::size_t>(y) * w + x]; }
    std::size_t count() const;
};

// Float-valued grid used for CAMs and heatmaps.
struct FloatGrid {
    int w = 0, h = 0;
    std::vector<float> v;

    FloatGrid() = default;
    FloatGrid(int w_, int h_) : w(w_), h(h_), v(static_cast<std::size_t>(w_) * h_, 0.0f) {}

    float& at(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
    float at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

// --- file IO; format chosen by extension (.ppm/.pgm/.png) or magic bytes ---

RgbImage decode_image(const std::string& path);
void encode_image(const RgbImage& img, const std::string& path);

GrayImage load_pgm(const std::string& path);
void save_pgm(const GrayImage& img, const std::string& path);

// --- conversions ---

GrayImage to_gray(const RgbImage& img);                  // rounded rec.601 luma
Tensor4 to_tensor(const RgbImage& img);                  // (1,3,h,w) scaled to [0,1]
GrayImage rgb_channel(const RgbImage& img, int ch);
GrayImage mask_to_gray(const BinaryMask& mask);          // 0/255
GrayImage heatmap_to_gray(const FloatGrid& grid);        // round(255*v), v in [0,1]

// Corner-aligned bilinear resize (source corners map to target corners).
RgbImage resize_bilinear(const RgbImage& img, int out_w, int out_h);

}  // namespace lesioncam
