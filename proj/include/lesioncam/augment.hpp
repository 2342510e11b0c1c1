#pragma once

#include <string>
#include <vector>

#include "lesioncam/data.hpp"
#include "lesioncam/image.hpp"

namespace lesioncam {

struct AugmentPolicy {
    std::vector<int> rotation_quarters = {0, 1, 2};  // clockwise quarter turns
    bool hflip = false;
    int five_crop = 0;  // crop side length; 0 disables
};

// k clockwise quarter turns; lossless pixel permutation.
RgbImage rotate90(const RgbImage& image, int k);

RgbImage hflip(const RgbImage& image);

// Corner crops (tl, tr, bl, br) then center crop, in that order.
std::vector<RgbImage> five_crop(const RgbImage& image, int crop_w, int crop_h);

// One enumerated (rotation, flip, crop) combination. crop_index -1 = no crop.
struct AugmentVariant {
    int rotation_k = 0;
    bool flipped = false;
    int crop_index = -1;

    std::string id_suffix() const;  // "_r<k>[_f][_c<i>]"
};

std::vector<AugmentVariant> enumerate_variants(const AugmentPolicy& policy);

RgbImage apply_variant(const RgbImage& image, const AugmentVariant& v, int crop_size);

struct AugmentedRecord {
    std::string id;         // "<source_id><suffix>"
    std::string source_id;
    LabelRecord label;      // copied unchanged, image_id rewritten to id
    AugmentVariant variant;
};

// Full combinatorial product record x rotation x flip x crop, in enumeration
// order. Output count = |records| * |rotations| * (hflip?2:1) * (crop?5:1).
std::vector<AugmentedRecord> expand_dataset(const std::vector<LabelRecord>& records,
                                            const AugmentPolicy& policy);

}  // namespace lesioncam
