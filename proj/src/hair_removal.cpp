#include "lesioncam/hair_removal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lesioncam/errors.hpp"

namespace lesioncam {

namespace {

constexpr int kOrientDx[4] = {1, 1, 0, -1};  // 0, 45, 90, 135 degrees
constexpr int kOrientDy[4] = {0, 1, 1, 1};

inline std::uint8_t sample_replicated(const GrayImage& img, int x, int y) {
    x = std::clamp(x, 0, img.w - 1);
    y = std::clamp(y, 0, img.h - 1);
    return img.at(x, y);
}

GrayImage line_dilate(const GrayImage& img, int dx, int dy, int half) {
    GrayImage out(img.w, img.h);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            std::uint8_t m = 0;
            for (int i = -half; i <= half; ++i)
                m = std::max(m, sample_replicated(img, x + i * dx, y + i * dy));
            out.at(x, y) = m;
        }
    return out;
}

GrayImage line_erode(const GrayImage& img, int dx, int dy, int half) {
    GrayImage out(img.w, img.h);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            std::uint8_t m = 255;
            for (int i = -half; i <= half; ++i)
                m = std::min(m, sample_replicated(img, x + i * dx, y + i * dy));
            out.at(x, y) = m;
        }
    return out;
}

}  // namespace

GrayImage generalized_closing(const GrayImage& channel, int se_length) {
    if (se_length < 3 || se_length % 2 == 0)
        throw UsageError("generalized_closing: se_length must be odd and >= 3");
    const int half = se_length / 2;
    GrayImage out(channel.w, channel.h);
    for (int o = 0; o < 4; ++o) {
        const GrayImage closed =
            line_erode(line_dilate(channel, kOrientDx[o], kOrientDy[o], half),
                       kOrientDx[o], kOrientDy[o], half);
        for (std::size_t i = 0; i < out.px.size(); ++i)
            out.px[i] = std::max(out.px[i], closed.px[i]);
    }
    return out;
}

BinaryMask build_hair_mask(const RgbImage& original, const RgbImage& closed, int threshold) {
    if (!original.same_size(closed))
        throw ShapeError("build_hair_mask: image sizes differ");
    BinaryMask mask(original.w, original.h);
    for (std::size_t i = 0; i < mask.px.size(); ++i) {
        int diff = 0;
        for (int ch = 0; ch < 3; ++ch)
            diff = std::max(diff, static_cast<int>(closed.px[i * 3 + ch]) -
                                      static_cast<int>(original.px[i * 3 + ch]));
        mask.px[i] = diff >= threshold ? 1 : 0;
    }
    return mask;
}

BinaryMask verify_structures(const BinaryMask& mask, int min_length, int max_mean_width) {
    BinaryMask out(mask.w, mask.h);
    std::vector<std::uint8_t> visited(mask.px.size(), 0);
    std::vector<std::pair<int, int>> stack;
    std::vector<std::size_t> pixels;
    static const int dx[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
    static const int dy[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
    for (int sy = 0; sy < mask.h; ++sy)
        for (int sx = 0; sx < mask.w; ++sx) {
            const std::size_t sidx = static_cast<std::size_t>(sy) * mask.w + sx;
            if (!mask.px[sidx] || visited[sidx]) continue;
            stack.assign(1, {sx, sy});
            pixels.clear();
            visited[sidx] = 1;
            int x0 = sx, x1 = sx, y0 = sy, y1 = sy;
            while (!stack.empty()) {
                const auto [x, y] = stack.back();
                stack.pop_back();
                pixels.push_back(static_cast<std::size_t>(y) * mask.w + x);
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
                for (int d = 0; d < 8; ++d) {
                    const int nx = x + dx[d], ny = y + dy[d];
                    if (nx < 0 || nx >= mask.w || ny < 0 || ny >= mask.h) continue;
                    const std::size_t idx = static_cast<std::size_t>(ny) * mask.w + nx;
                    if (!mask.px[idx] || visited[idx]) continue;
                    visited[idx] = 1;
                    stack.emplace_back(nx, ny);
                }
            }
            const int longest = std::max(x1 - x0 + 1, y1 - y0 + 1);
            const double mean_width = static_cast<double>(pixels.size()) / longest;
            if (longest >= min_length && mean_width <= max_mean_width)
                for (auto idx : pixels) out.px[idx] = 1;
        }
    return out;
}

RgbImage inpaint_bilinear(const RgbImage& image, const BinaryMask& mask) {
    if (mask.w != image.w || mask.h != image.h)
        throw ShapeError("inpaint_bilinear: mask size does not match image");
    if (mask.count() == mask.px.size())
        throw DataError("inpaint_bilinear: every pixel is masked");
    RgbImage out = image;
    for (int y = 0; y < image.h; ++y)
        for (int x = 0; x < image.w; ++x) {
            if (!mask.at(x, y)) continue;
            int xl = -1, xr = -1, yu = -1, yd = -1;
            for (int i = x - 1; i >= 0; --i)
                if (!mask.at(i, y)) { xl = i; break; }
            for (int i = x + 1; i < image.w; ++i)
                if (!mask.at(i, y)) { xr = i; break; }
            for (int i = y - 1; i >= 0; --i)
                if (!mask.at(x, i)) { yu = i; break; }
            for (int i = y + 1; i < image.h; ++i)
                if (!mask.at(x, i)) { yd = i; break; }

            const bool horiz_ok = xl >= 0 && xr >= 0;
            const bool vert_ok = yu >= 0 && yd >= 0;
            if (horiz_ok && (!vert_ok || xr - xl <= yd - yu)) {
                const double t = static_cast<double>(x - xl) / (xr - xl);
                for (int ch = 0; ch < 3; ++ch)
                    out.at(x, y, ch) = static_cast<std::uint8_t>(std::lround(
                        (1 - t) * image.at(xl, y, ch) + t * image.at(xr, y, ch)));
            } else if (vert_ok) {
                const double t = static_cast<double>(y - yu) / (yd - yu);
                for (int ch = 0; ch < 3; ++ch)
                    out.at(x, y, ch) = static_cast<std::uint8_t>(std::lround(
                        (1 - t) * image.at(x, yu, ch) + t * image.at(x, yd, ch)));
            } else {
                // No straddling pair on either axis: take the closest unmasked
                // pixel overall.
                long best = std::numeric_limits<long>::max();
                int bx = 0, by = 0;
                for (int j = 0; j < image.h; ++j)
                    for (int i = 0; i < image.w; ++i) {
                        if (mask.at(i, j)) continue;
                        const long d = static_cast<long>(i - x) * (i - x) +
                                       static_cast<long>(j - y) * (j - y);
                        if (d < best) {
                            best = d;
                            bx = i;
                            by = j;
                        }
                    }
                for (int ch = 0; ch < 3; ++ch) out.at(x, y, ch) = image.at(bx, by, ch);
            }
        }
    return out;
}

RgbImage adaptive_median(const RgbImage& image, const BinaryMask& mask, int max_window) {
    if (max_window < 3 || max_window % 2 == 0)
        throw UsageError("adaptive_median: max_window must be odd and >= 3");
    if (mask.w != image.w || mask.h != image.h)
        throw ShapeError("adaptive_median: mask size does not match image");

    // Region of interest: mask dilated by one pixel (8-neighborhood).
    BinaryMask region(mask.w, mask.h);
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x) {
            if (!mask.at(x, y)) continue;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (nx >= 0 && nx < mask.w && ny >= 0 && ny < mask.h)
                        region.at(nx, ny) = 1;
                }
        }

    RgbImage out = image;
    std::vector<std::uint8_t> window;
    for (int y = 0; y < image.h; ++y)
        for (int x = 0; x < image.w; ++x) {
            if (!region.at(x, y)) continue;
            for (int ch = 0; ch < 3; ++ch) {
                for (int size = 3; size <= max_window; size += 2) {
                    const int half = size / 2;
                    window.clear();
                    for (int dy = -half; dy <= half; ++dy)
                        for (int dx = -half; dx <= half; ++dx) {
                            const int nx = x + dx, ny = y + dy;
                            if (nx >= 0 && nx < image.w && ny >= 0 && ny < image.h)
                                window.push_back(image.at(nx, ny, ch));
                        }
                    std::sort(window.begin(), window.end());
                    const std::uint8_t med = window[window.size() / 2];
                    const std::uint8_t mn = window.front(), mx = window.back();
                    if ((mn < med && med < mx) || size == max_window) {
                        out.at(x, y, ch) = med;
                        break;
                    }
                }
            }
        }
    return out;
}

HairRemovalResult remove_hairs(const RgbImage& image, const HairParams& params) {
    RgbImage closed(image.w, image.h);
    for (int ch = 0; ch < 3; ++ch) {
        const GrayImage c = generalized_closing(rgb_channel(image, ch), params.se_length);
        for (std::size_t i = 0; i < c.px.size(); ++i) closed.px[i * 3 + ch] = c.px[i];
    }
    BinaryMask mask = build_hair_mask(image, closed, params.diff_threshold);
    mask = verify_structures(mask, params.min_length, params.max_mean_width);
    HairRemovalResult result;
    result.mask = mask;
    if (mask.count() == 0) {
        result.image = image;
        return result;
    }
    result.image = adaptive_median(inpaint_bilinear(image, mask), mask,
                                   params.median_max_window);
    return result;
}

}  // namespace lesioncam
