#pragma once

#include <array>
#include <string>
#include <vector>

#include "lesioncam/augment.hpp"
#include "lesioncam/cam.hpp"
#include "lesioncam/data.hpp"
#include "lesioncam/hair_removal.hpp"
#include "lesioncam/network.hpp"
#include "lesioncam/region.hpp"

namespace lesioncam {

struct PipelineConfig {
    NetworkConfig network;  // shared architecture for both stages
    RegionParams region;
    bool hair_enabled = false;
    HairParams hair;
    bool augment_enabled = false;
    AugmentPolicy augment;
    Hyperparams train;
    std::string stage1_weights;
    std::string stage2_weights;
    std::string final_score_source = "stage2";  // "stage2" or "mean"
    std::string stage2_init = "copy";           // "copy" or "fresh"
    int cam_class = -1;                         // -1 = argmax class drives the crop
};

PipelineConfig default_pipeline_config();

// Loads the JSON config file (sections: network/region/hair/augment/train/
// pipeline); missing keys keep their defaults.
PipelineConfig load_pipeline_config(const std::string& path);

struct PredictionRecord {
    std::string image_id;
    double p_mel = 0.0, p_sk = 0.0, p_nevus = 0.0;  // final probabilities
    std::array<double, 3> stage1_probs{};
    BBox crop_box;
    int predicted_class = 0;
};

struct Stage1Output {
    std::array<double, 3> probs{};
    CamMap cam;            // raw map at feature-map resolution
    FloatGrid heatmap;     // normalized, upsampled to the input image size
    RgbImage preprocessed; // hair-removed original-resolution image
};

Stage1Output run_stage1(const RgbImage& image, Network& net, const PipelineConfig& cfg);

PredictionRecord run_two_stage(const RgbImage& image, const std::string& image_id,
                               Network& stage1, Network& stage2,
                               const PipelineConfig& cfg);

struct StageTrainResult {
    Network net;
    std::vector<double> loss;  // per-epoch mean
};

// Trains one network on (optionally hair-removed, augmented) full images and
// saves it to cfg.stage1_weights when set.
StageTrainResult train_stage1(const DatasetManifest& manifest, const PipelineConfig& cfg);

// Derives one CAM crop per training image from the trained stage-1 network,
// trains the second network on the crops (init per cfg.stage2_init), and
// saves it to cfg.stage2_weights when set.
StageTrainResult train_stage2(const DatasetManifest& manifest, const Network& stage1,
                              const PipelineConfig& cfg);

struct TwoStageTrainResult {
    Network stage1;
    Network stage2;
    std::vector<double> stage1_loss;
    std::vector<double> stage2_loss;
};

// Trains stage 1 on (optionally hair-removed, augmented) full images, derives
// one CAM crop per training image, then trains stage 2 on the crops.
TwoStageTrainResult train_two_stage(const DatasetManifest& manifest,
                                    const PipelineConfig& cfg);

// Predictions CSV: image_id,p_mel,p_sk,p_nevus with 6 decimal places.
void save_predictions(const std::vector<PredictionRecord>& records,
                      const std::string& csv_path);
std::vector<PredictionRecord> load_predictions(const std::string& csv_path);

}  // namespace lesioncam
