#pragma once

#include "lesioncam/image.hpp"

namespace lesioncam {

struct HairParams {
    int se_length = 9;         // line structuring element length, odd, >= 3
    int diff_threshold = 20;   // closed-minus-original cut, of 255
    int min_length = 15;       // px, thin/long verification
    int max_mean_width = 5;    // px, area / longest bbox side
    int median_max_window = 7; // odd
};

// Grayscale closing (line dilation then erosion) along 0/45/90/135 degrees,
// pixelwise max over the four orientations. Border handling by edge
// replication. Result >= input everywhere.
GrayImage generalized_closing(const GrayImage& channel, int se_length);

// mask(p) true iff max over channels of closed(p) - original(p) >= threshold.
BinaryMask build_hair_mask(const RgbImage& original, const RgbImage& closed, int threshold);

// Keeps 8-connected components that are long (longest bbox side >= min_length)
// and thin (area / longest bbox side <= max_mean_width).
BinaryMask verify_structures(const BinaryMask& mask, int min_length, int max_mean_width);

// Replaces masked pixels by linear interpolation between the nearest unmasked
// pixels along the axis (horizontal or vertical) with the smaller gap.
RgbImage inpaint_bilinear(const RgbImage& image, const BinaryMask& mask);

// Adaptive median filtering restricted to the mask dilated by one pixel.
RgbImage adaptive_median(const RgbImage& image, const BinaryMask& mask, int max_window);

struct HairRemovalResult {
    RgbImage image;
    BinaryMask mask;
};

// Full DullRazor-style chain: closing per channel -> mask -> thin/long
// verification -> inpaint -> adaptive median.
HairRemovalResult remove_hairs(const RgbImage& image, const HairParams& params);

}  // namespace lesioncam
