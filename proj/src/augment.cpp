#include "lesioncam/augment.hpp"

#include "lesioncam/errors.hpp"

namespace lesioncam {

RgbImage rotate90(const RgbImage& image, int k) {
    if (k < 0 || k > 3) throw UsageError("rotate90: k must be in {0,1,2,3}");
    if (k == 0) return image;
    RgbImage src = image;
    for (int turn = 0; turn < k; ++turn) {
        // One clockwise quarter turn: dst(x,y) = src(y, H-1-x).
        RgbImage dst(src.h, src.w);
        for (int y = 0; y < dst.h; ++y)
            for (int x = 0; x < dst.w; ++x)
                for (int ch = 0; ch < 3; ++ch)
                    dst.at(x, y, ch) = src.at(y, src.h - 1 - x, ch);
        src = std::move(dst);
    }
    return src;
}

RgbImage hflip(const RgbImage& image) {
    RgbImage out(image.w, image.h);
    for (int y = 0; y < image.h; ++y)
        for (int x = 0; x < image.w; ++x)
            for (int ch = 0; ch < 3; ++ch)
                out.at(x, y, ch) = image.at(image.w - 1 - x, y, ch);
    return out;
}

namespace {

RgbImage crop_region(const RgbImage& image, int x0, int y0, int w, int h) {
    RgbImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch)
                out.at(x, y, ch) = image.at(x0 + x, y0 + y, ch);
    return out;
}

}  // namespace

std::vector<RgbImage> five_crop(const RgbImage& image, int crop_w, int crop_h) {
    if (crop_w < 1 || crop_h < 1 || crop_w > image.w || crop_h > image.h)
        throw UsageError("five_crop: crop size must fit inside the image");
    const int rx = image.w - crop_w, ry = image.h - crop_h;
    return {crop_region(image, 0, 0, crop_w, crop_h),
            crop_region(image, rx, 0, crop_w, crop_h),
            crop_region(image, 0, ry, crop_w, crop_h),
            crop_region(image, rx, ry, crop_w, crop_h),
            crop_region(image, rx / 2, ry / 2, crop_w, crop_h)};
}

std::string AugmentVariant::id_suffix() const {
    std::string s = "_r" + std::to_string(rotation_k);
    if (flipped) s += "_f";
    if (crop_index >= 0) s += "_c" + std::to_string(crop_index);
    return s;
}

std::vector<AugmentVariant> enumerate_variants(const AugmentPolicy& policy) {
    if (policy.rotation_quarters.empty())
        throw UsageError("augment policy: rotation set must be nonempty");
    for (int k : policy.rotation_quarters)
        if (k < 0 || k > 3) throw UsageError("augment policy: rotation k out of {0,1,2,3}");
    std::vector<AugmentVariant> variants;
    for (int k : policy.rotation_quarters)
        for (int f = 0; f < (policy.hflip ? 2 : 1); ++f) {
            if (policy.five_crop > 0) {
                for (int c = 0; c < 5; ++c)
                    variants.push_back({k, f == 1, c});
            } else {
                variants.push_back({k, f == 1, -1});
            }
        }
    return variants;
}

RgbImage apply_variant(const RgbImage& image, const AugmentVariant& v, int crop_size) {
    RgbImage out = rotate90(image, v.rotation_k);
    if (v.flipped) out = hflip(out);
    if (v.crop_index >= 0) out = five_crop(out, crop_size, crop_size)[v.crop_index];
    return out;
}

std::vector<AugmentedRecord> expand_dataset(const std::vector<LabelRecord>& records,
                                            const AugmentPolicy& policy) {
    const auto variants = enumerate_variants(policy);
    std::vector<AugmentedRecord> out;
    out.reserve(records.size() * variants.size());
    for (const auto& rec : records)
        for (const auto& v : variants) {
            AugmentedRecord ar;
            ar.source_id = rec.image_id;
            ar.id = rec.image_id + v.id_suffix();
            ar.label = rec;
            ar.label.image_id = ar.id;
            ar.variant = v;
            out.push_back(std::move(ar));
        }
    return out;
}

}  // namespace lesioncam
