#include "lesioncam/cam.hpp"

#include <algorithm>
#include <cmath>

#include "lesioncam/errors.hpp"

namespace lesioncam {

CamMap compute_cam(const ForwardTrace& trace, const Tensor4& fc_weights, int class_id,
                   int item) {
    if (class_id < 0 || class_id >= fc_weights.n)
        throw UsageError("compute_cam: class " + std::to_string(class_id) +
                         " out of range for " + std::to_string(fc_weights.n) + " classes");
    if (item < 0 || item >= trace.feature_maps.n)
        throw UsageError("compute_cam: batch item out of range");
    if (fc_weights.c != trace.feature_maps.c)
        throw ShapeError("compute_cam: fc weights " + fc_weights.shape_str() +
                         " do not match " + std::to_string(trace.feature_maps.c) +
                         " feature channels");

    const Tensor4& f = trace.feature_maps;
    CamMap cam;
    cam.class_id = class_id;
    cam.grid = FloatGrid(f.w, f.h);
    for (int y = 0; y < f.h; ++y)
        for (int x = 0; x < f.w; ++x) {
            float sum = 0.0f;
            for (int k = 0; k < f.c; ++k)
                sum += fc_weights.at(class_id, k, 0, 0) * f.at(item, k, y, x);
            cam.grid.at(x, y) = sum;
        }
    return cam;
}

int predicted_class(const ForwardTrace& trace, int item) {
    int best = 0;
    for (int c = 1; c < trace.probs.c; ++c)
        if (trace.probs.at(item, c, 0, 0) > trace.probs.at(item, best, 0, 0)) best = c;
    return best;
}

CamMap cam_for_predicted(const ForwardTrace& trace, const Tensor4& fc_weights, int item) {
    return compute_cam(trace, fc_weights, predicted_class(trace, item), item);
}

FloatGrid upsample_bilinear(const FloatGrid& grid, int target_w, int target_h) {
    if (target_w < grid.w || target_h < grid.h)
        throw UsageError("upsample_bilinear: target smaller than source");
    if (target_w == grid.w && target_h == grid.h) return grid;
    FloatGrid out(target_w, target_h);
    const double sx = target_w > 1 ? static_cast<double>(grid.w - 1) / (target_w - 1) : 0.0;
    const double sy = target_h > 1 ? static_cast<double>(grid.h - 1) / (target_h - 1) : 0.0;
    for (int y = 0; y < target_h; ++y) {
        const double fy = y * sy;
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, grid.h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < target_w; ++x) {
            const double fx = x * sx;
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, grid.w - 1);
            const double wx = fx - x0;
            const double top = (1 - wx) * grid.at(x0, y0) + wx * grid.at(x1, y0);
            const double bot = (1 - wx) * grid.at(x0, y1) + wx * grid.at(x1, y1);
            out.at(x, y) = static_cast<float>((1 - wy) * top + wy * bot);
        }
    }
    return out;
}

FloatGrid project_heatmap(const FloatGrid& grid, int target_w, int target_h,
                          const FeatureGeometry& gx, const FeatureGeometry& gy) {
    if (grid.w < 1 || grid.h < 1) throw UsageError("project_heatmap: empty grid");
    if (gx.stride <= 0.0 || gy.stride <= 0.0)
        throw UsageError("project_heatmap: stride must be positive");
    FloatGrid out(target_w, target_h);
    const float gmin = *std::min_element(grid.v.begin(), grid.v.end());
    for (int y = 0; y < target_h; ++y) {
        const double ry = (y - gy.offset) / gy.stride;
        const double fy = std::clamp(ry, 0.0, static_cast<double>(grid.h - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, grid.h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < target_w; ++x) {
            const double rx = (x - gx.offset) / gx.stride;
            const double fx = std::clamp(rx, 0.0, static_cast<double>(grid.w - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, grid.w - 1);
            const double wx = fx - x0;
            const double top = (1 - wx) * grid.at(x0, y0) + wx * grid.at(x1, y0);
            const double bot = (1 - wx) * grid.at(x0, y1) + wx * grid.at(x1, y1);
            double v = (1 - wy) * top + wy * bot;
            // Decay the clamped band toward the grid minimum outside the
            // outermost cell centers so a border peak stays unique instead of
            // smearing into a plateau tied along the image edge.
            const double outside = std::abs(rx - fx) + std::abs(ry - fy);
            if (outside > 0.0) v = gmin + (v - gmin) / (1.0 + 0.25 * outside);
            out.at(x, y) = static_cast<float>(v);
        }
    }
    return out;
}

FloatGrid normalize(const FloatGrid& grid) {
    FloatGrid out(grid.w, grid.h);
    if (grid.v.empty()) return out;
    const auto [mn_it, mx_it] = std::minmax_element(grid.v.begin(), grid.v.end());
    const float mn = *mn_it, mx = *mx_it;
    if (mx == mn) return out;  // constant grid -> all zeros
    const float inv = 1.0f / (mx - mn);
    for (std::size_t i = 0; i < grid.v.size(); ++i) out.v[i] = (grid.v[i] - mn) * inv;
    return out;
}

std::array<std::uint8_t, 3> heat_color(float t) {
    t = std::clamp(t, 0.0f, 1.0f);
    // blue (0,0,255) -> yellow (255,255,0) -> red (255,0,0)
    double r, g, b;
    if (t < 0.5f) {
        const double u = t / 0.5;
        r = 255.0 * u;
        g = 255.0 * u;
        b = 255.0 * (1.0 - u);
    } else {
        const double u = (t - 0.5) / 0.5;
        r = 255.0;
        g = 255.0 * (1.0 - u);
        b = 0.0;
    }
    return {static_cast<std::uint8_t>(std::lround(r)),
            static_cast<std::uint8_t>(std::lround(g)),
            static_cast<std::uint8_t>(std::lround(b))};
}

RgbImage render_overlay(const RgbImage& image, const FloatGrid& heatmap, double alpha) {
    if (heatmap.w != image.w || heatmap.h != image.h)
        throw ShapeError("render_overlay: heatmap " + std::to_string(heatmap.w) + "x" +
                         std::to_string(heatmap.h) + " does not match image " +
                         std::to_string(image.w) + "x" + std::to_string(image.h));
    if (alpha < 0.0 || alpha > 1.0) throw UsageError("render_overlay: alpha must be in [0,1]");
    RgbImage out(image.w, image.h);
    for (int y = 0; y < image.h; ++y)
        for (int x = 0; x < image.w; ++x) {
            const auto color = heat_color(heatmap.at(x, y));
            for (int ch = 0; ch < 3; ++ch) {
                const double v = (1.0 - alpha) * image.at(x, y, ch) + alpha * color[ch];
                out.at(x, y, ch) = static_cast<std::uint8_t>(std::lround(v));
            }
        }
    return out;
}

}  // namespace lesioncam
