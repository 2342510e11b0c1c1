#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lesioncam/image.hpp"
#include "lesioncam/network.hpp"
#include "lesioncam/region.hpp"

namespace lesioncam {

// ISIC-2017 ground-truth row. Class scheme: melanoma -> 0,
// seborrheic keratosis -> 1, nevus (both flags 0) -> 2.
struct LabelRecord {
    std::string image_id;
    int melanoma = 0;
    int seborrheic_keratosis = 0;

    int class_id() const { return melanoma ? 0 : (seborrheic_keratosis ? 1 : 2); }
    static LabelRecord from_class(std::string id, int cls);
};

struct ClassCounts {
    int melanoma = 0, seborrheic_keratosis = 0, nevus = 0;
};

// Parses "image_id,melanoma,seborrheic_keratosis"; accepts 0/1 and 0.0/1.0.
std::vector<LabelRecord> load_labels(const std::string& csv_path);
ClassCounts count_classes(const std::vector<LabelRecord>& records);

struct ManifestEntry {
    std::string image_path;
    LabelRecord label;
    std::optional<BBox> true_bbox;
};

struct DatasetManifest {
    std::string root;
    std::vector<ManifestEntry> entries;
};

// Manifest CSV: image_path,melanoma,seborrheic_keratosis[,bbox_x0,...,bbox_y1]
void save_manifest(const DatasetManifest& manifest, const std::string& csv_path);
DatasetManifest load_manifest(const std::string& csv_path, bool check_paths = true);

struct SyntheticSpec {
    int image_size = 64;
    int per_class = 100;
    double hair_density = 0.0;  // expected hair lines per image
    std::uint32_t seed = 0;
};

struct SyntheticSample {
    std::string id;
    RgbImage image;
    RgbImage clean_image;  // before hair drawing; equals image when no hair
    int class_id = 0;
    BBox lesion_bbox;
    BinaryMask hair_mask;
};

// Deterministic synthetic dermoscopy generator. Class styles: 0 = irregular
// dark multi-lobe blob, 1 = mid-tone plaque with stippled texture, 2 = smooth
// round reddish-tan blob.
std::vector<SyntheticSample> generate_synthetic(const SyntheticSpec& spec);

// Writes samples as PNGs under dir plus a manifest CSV (with true bboxes) and,
// when hair is present, per-sample hair-mask PGMs under dir/masks.
DatasetManifest materialize_synthetic(const std::vector<SyntheticSample>& samples,
                                      const std::string& dir);

// Class-stratified seeded shuffle split.
std::pair<DatasetManifest, DatasetManifest> split(const DatasetManifest& manifest,
                                                  double train_frac, std::uint32_t seed);

// Loads/decodes/resizes every manifest image into a training tensor.
Dataset load_dataset(const DatasetManifest& manifest, int input_size);

}  // namespace lesioncam
