#include "lesioncam/region.hpp"

#include <algorithm>
#include <vector>

#include "lesioncam/errors.hpp"

namespace lesioncam {

BinaryMask threshold_mask(const FloatGrid& heatmap, double tau) {
    if (tau <= 0.0 || tau > 1.0) throw UsageError("threshold_mask: tau must be in (0,1]");
    BinaryMask mask(heatmap.w, heatmap.h);
    const float mx = heatmap.v.empty()
                         ? 0.0f
                         : *std::max_element(heatmap.v.begin(), heatmap.v.end());
    const float cut = static_cast<float>(tau) * mx;
    for (std::size_t i = 0; i < heatmap.v.size(); ++i)
        mask.px[i] = heatmap.v[i] >= cut ? 1 : 0;
    return mask;
}

namespace {

// Flood-fills the component containing seed, returns its pixel count and
// bounding box. visited shares indexing with the mask.
struct Component {
    std::size_t area = 0;
    BBox box;
};

Component flood_fill(const BinaryMask& mask, std::vector<std::uint8_t>& visited,
                     int seed_x, int seed_y, int connectivity) {
    static const int dx8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
    static const int dy8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
    static const int dx4[] = {0, -1, 1, 0};
    static const int dy4[] = {-1, 0, 0, 1};
    const int* dx = connectivity == 8 ? dx8 : dx4;
    const int* dy = connectivity == 8 ? dy8 : dy4;
    const int ndirs = connectivity == 8 ? 8 : 4;

    Component comp;
    comp.box = {seed_x, seed_y, seed_x + 1, seed_y + 1};
    std::vector<std::pair<int, int>> stack{{seed_x, seed_y}};
    visited[static_cast<std::size_t>(seed_y) * mask.w + seed_x] = 1;
    while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        ++comp.area;
        comp.box.x0 = std::min(comp.box.x0, x);
        comp.box.y0 = std::min(comp.box.y0, y);
        comp.box.x1 = std::max(comp.box.x1, x + 1);
        comp.box.y1 = std::max(comp.box.y1, y + 1);
        for (int d = 0; d < ndirs; ++d) {
            const int nx = x + dx[d], ny = y + dy[d];
            if (nx < 0 || nx >= mask.w || ny < 0 || ny >= mask.h) continue;
            const std::size_t idx = static_cast<std::size_t>(ny) * mask.w + nx;
            if (!mask.px[idx] || visited[idx]) continue;
            visited[idx] = 1;
            stack.emplace_back(nx, ny);
        }
    }
    return comp;
}

}  // namespace

BBox largest_component_bbox(const BinaryMask& mask, int connectivity) {
    if (connectivity != 4 && connectivity != 8)
        throw UsageError("largest_component_bbox: connectivity must be 4 or 8");
    std::vector<std::uint8_t> visited(mask.px.size(), 0);
    bool found = false;
    Component best;
    // Scanning row-major means the first component of any given size wins
    // ties (strict > below).
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * mask.w + x;
            if (!mask.px[idx] || visited[idx]) continue;
            Component comp = flood_fill(mask, visited, x, y, connectivity);
            if (!found || comp.area > best.area) {
                best = comp;
                found = true;
            }
        }
    if (!found) throw DataError("largest_component_bbox: mask has no true pixels");
    return best.box;
}

BBox expand_clamp(const BBox& box, double margin_frac, int image_w, int image_h) {
    if (margin_frac < 0.0) throw UsageError("expand_clamp: margin_frac must be >= 0");
    const int mx = static_cast<int>(margin_frac * box.width());
    const int my = static_cast<int>(margin_frac * box.height());
    BBox out;
    out.x0 = std::max(0, box.x0 - mx);
    out.y0 = std::max(0, box.y0 - my);
    out.x1 = std::min(image_w, box.x1 + mx);
    out.y1 = std::min(image_h, box.y1 + my);
    return out;
}

RgbImage crop(const RgbImage& image, const BBox& box) {
    if (box.x0 < 0 || box.y0 < 0 || box.x1 > image.w || box.y1 > image.h ||
        box.x0 >= box.x1 || box.y0 >= box.y1)
        throw UsageError("crop: invalid box for image bounds");
    RgbImage out(box.width(), box.height());
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
            for (int ch = 0; ch < 3; ++ch)
                out.at(x, y, ch) = image.at(box.x0 + x, box.y0 + y, ch);
    return out;
}

RgbImage extract_import_region(const RgbImage& image, const FloatGrid& heatmap,
                               const RegionParams& params, BBox* box_out) {
    if (heatmap.w != image.w || heatmap.h != image.h)
        throw ShapeError("extract_import_region: heatmap resolution does not match image");
    const BinaryMask mask = threshold_mask(heatmap, params.threshold_frac);
    const BBox raw = largest_component_bbox(mask, params.connectivity);
    const BBox box = expand_clamp(raw, params.margin_frac, image.w, image.h);
    if (box_out) *box_out = box;
    return crop(image, box);
}

}  // namespace lesioncam
