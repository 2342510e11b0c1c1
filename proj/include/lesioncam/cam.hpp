#pragma once

#include <array>

#include "lesioncam/image.hpp"
#include "lesioncam/network.hpp"

namespace lesioncam {

// Raw, unnormalized per-class activation map. grid mean equals the class
// logit (mean-GAP + bias-free FC identity).
struct CamMap {
    int class_id = 0;
    FloatGrid grid;
};

// Per-pixel dot product of last-conv channel activations with the class's FC
// weight column: M_c(x,y) = sum_k w_k^c f_k(x,y).
CamMap compute_cam(const ForwardTrace& trace, const Tensor4& fc_weights, int class_id,
                   int item = 0);

// CAM of the argmax-probability class; probability ties go to the lowest
// class index.
CamMap cam_for_predicted(const ForwardTrace& trace, const Tensor4& fc_weights,
                         int item = 0);

int predicted_class(const ForwardTrace& trace, int item = 0);

// Corner-aligned bilinear upsample; target must be >= source per dimension.
FloatGrid upsample_bilinear(const FloatGrid& grid, int target_w, int target_h);

// Bilinear resample that places grid cell (fx, fy) at input pixel
// (offset + stride*fx, offset + stride*fy) and clamps beyond the outermost
// cell centers. Aligning the map to the receptive-field centers keeps its
// peaks over the image structure that produced them; a corner-aligned
// upsample stretches the border cells outward instead.
FloatGrid project_heatmap(const FloatGrid& grid, int target_w, int target_h,
                          const FeatureGeometry& gx, const FeatureGeometry& gy);

// Min-max normalize to [0,1]; a constant grid maps to all zeros.
FloatGrid normalize(const FloatGrid& grid);

// Linear 3-stop colormap: 0 -> blue, 0.5 -> yellow, 1 -> red.
std::array<std::uint8_t, 3> heat_color(float t);

// pixel = (1-alpha)*original + alpha*colormap(heatmap).
RgbImage render_overlay(const RgbImage& image, const FloatGrid& heatmap, double alpha);

}  // namespace lesioncam
