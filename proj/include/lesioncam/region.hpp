#pragma once

#include "lesioncam/image.hpp"

namespace lesioncam {

// Half-open pixel box: x0/y0 inclusive, x1/y1 exclusive.
struct BBox {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool operator==(const BBox&) const = default;
};

struct RegionParams {
    double threshold_frac = 0.2;  // of heatmap max
    double margin_frac = 0.1;
    int connectivity = 8;  // 4 or 8
};

// mask(p) true iff heatmap(p) >= tau * max(heatmap).
BinaryMask threshold_mask(const FloatGrid& heatmap, double tau);

// Bounding box of the connected component with the most pixels; ties go to
// the component containing the smallest row-major pixel index.
BBox largest_component_bbox(const BinaryMask& mask, int connectivity);

// Grow each side by floor(margin_frac * side length), clamp to image bounds.
BBox expand_clamp(const BBox& box, double margin_frac, int image_w, int image_h);

// Pixel-exact crop of the box region.
RgbImage crop(const RgbImage& image, const BBox& box);

// threshold -> largest component -> expand -> crop. The heatmap must already
// be upsampled to the image resolution.
RgbImage extract_import_region(const RgbImage& image, const FloatGrid& heatmap,
                               const RegionParams& params, BBox* box_out = nullptr);

}  // namespace lesioncam
