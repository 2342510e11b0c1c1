#include "lesioncam/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lesioncam/errors.hpp"

namespace lesioncam {

PipelineConfig default_pipeline_config() {
    PipelineConfig cfg;
    cfg.network = tiny_config();
    return cfg;
}

namespace {

RgbImage preprocess(const RgbImage& image, const PipelineConfig& cfg) {
    if (!cfg.hair_enabled) return image;
    return remove_hairs(image, cfg.hair).image;
}

std::array<double, 3> probs_of(const ForwardTrace& trace, int item = 0) {
    std::array<double, 3> p{};
    for (int c = 0; c < 3; ++c) p[c] = trace.probs.at(item, c, 0, 0);
    return p;
}

// Builds the training tensor from preprocessed images, applying the augment
// policy when enabled.
Dataset assemble_dataset(const std::vector<RgbImage>& images, const std::vector<int>& labels,
                         const PipelineConfig& cfg) {
    std::vector<AugmentVariant> variants;
    if (cfg.augment_enabled) {
        variants = enumerate_variants(cfg.augment);
    } else {
        variants.push_back(AugmentVariant{});
    }
    const int S = cfg.network.input_size;
    Dataset ds;
    ds.images = Tensor4(static_cast<int>(images.size() * variants.size()), 3, S, S);
    const std::size_t img_elems = static_cast<std::size_t>(3) * S * S;
    std::size_t row = 0;
    for (std::size_t i = 0; i < images.size(); ++i)
        for (const auto& v : variants) {
            RgbImage img = apply_variant(images[i], v, cfg.augment.five_crop);
            img = resize_bilinear(img, S, S);
            const Tensor4 t = to_tensor(img);
            std::copy(t.data.begin(), t.data.end(), ds.images.data.begin() + row * img_elems);
            ds.labels.push_back(labels[i]);
            ++row;
        }
    return ds;
}

}  // namespace

Stage1Output run_stage1(const RgbImage& image, Network& net, const PipelineConfig& cfg) {
    Stage1Output out;
    out.preprocessed = preprocess(image, cfg);
    const RgbImage resized =
        resize_bilinear(out.preprocessed, cfg.network.input_size, cfg.network.input_size);
    const ForwardTrace trace = net.forward(to_tensor(resized), nn::Mode::Eval);
    out.probs = probs_of(trace);
    out.cam = cfg.cam_class >= 0 ? compute_cam(trace, net.fc_weights(), cfg.cam_class)
                                 : cam_for_predicted(trace, net.fc_weights());

    // The map is projected through the receptive-field geometry, composed
    // with the corner-aligned resize back to the preprocessed resolution.
    const FeatureGeometry geom = feature_map_geometry(cfg.network);
    const int S = cfg.network.input_size;
    const double sx = S > 1 ? (out.preprocessed.w - 1.0) / (S - 1.0) : 1.0;
    const double sy = S > 1 ? (out.preprocessed.h - 1.0) / (S - 1.0) : 1.0;
    const FeatureGeometry gx{geom.offset * sx, geom.stride * sx};
    const FeatureGeometry gy{geom.offset * sy, geom.stride * sy};
    out.heatmap = normalize(
        project_heatmap(out.cam.grid, out.preprocessed.w, out.preprocessed.h, gx, gy));
    return out;
}

PredictionRecord run_two_stage(const RgbImage& image, const std::string& image_id,
                               Network& stage1, Network& stage2,
                               const PipelineConfig& cfg) {
    const Stage1Output s1 = run_stage1(image, stage1, cfg);

    PredictionRecord rec;
    rec.image_id = image_id;
    rec.stage1_probs = s1.probs;
    const RgbImage crop =
        extract_import_region(s1.preprocessed, s1.heatmap, cfg.region, &rec.crop_box);
    const RgbImage crop_resized =
        resize_bilinear(crop, cfg.network.input_size, cfg.network.input_size);
    const ForwardTrace trace = stage2.forward(to_tensor(crop_resized), nn::Mode::Eval);
    const std::array<double, 3> s2 = probs_of(trace);

    std::array<double, 3> final_probs = s2;
    if (cfg.final_score_source == "mean") {
        for (int c = 0; c < 3; ++c) final_probs[c] = 0.5 * (s1.probs[c] + s2[c]);
    } else if (cfg.final_score_source != "stage2") {
        throw UsageError("final_score_source must be 'stage2' or 'mean'");
    }
    rec.p_mel = final_probs[0];
    rec.p_sk = final_probs[1];
    rec.p_nevus = final_probs[2];
    rec.predicted_class = 0;
    for (int c = 1; c < 3; ++c)
        if (final_probs[c] > final_probs[rec.predicted_class]) rec.predicted_class = c;
    return rec;
}

namespace {

// Decodes and preprocesses every manifest image, collecting class labels.
void load_images(const DatasetManifest& manifest, const PipelineConfig& cfg,
                 std::vector<RgbImage>& images, std::vector<int>& labels) {
    images.reserve(manifest.entries.size());
    labels.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        images.push_back(preprocess(decode_image(e.image_path), cfg));
        labels.push_back(e.label.class_id());
    }
}

}  // namespace

StageTrainResult train_stage1(const DatasetManifest& manifest, const PipelineConfig& cfg) {
    if (manifest.entries.empty()) throw UsageError("train_stage1: manifest is empty");
    std::vector<RgbImage> images;
    std::vector<int> labels;
    load_images(manifest, cfg, images, labels);

    StageTrainResult result{Network(cfg.network), {}};
    result.loss = result.net.train(assemble_dataset(images, labels, cfg), cfg.train);
    if (!cfg.stage1_weights.empty()) result.net.save_weights(cfg.stage1_weights);
    return result;
}

StageTrainResult train_stage2(const DatasetManifest& manifest, const Network& stage1,
                              const PipelineConfig& cfg) {
    if (manifest.entries.empty()) throw UsageError("train_stage2: manifest is empty");
    std::vector<RgbImage> images;
    std::vector<int> labels;
    load_images(manifest, cfg, images, labels);

    // One CAM-driven crop per (preprocessed) training image; hair removal is
    // already baked into `images`.
    PipelineConfig crop_cfg = cfg;
    crop_cfg.hair_enabled = false;
    Network s1 = stage1;
    std::vector<RgbImage> crops;
    crops.reserve(images.size());
    for (const auto& img : images) {
        const Stage1Output out = run_stage1(img, s1, crop_cfg);
        crops.push_back(extract_import_region(out.preprocessed, out.heatmap, cfg.region));
    }

    StageTrainResult result{Network(cfg.network), {}};
    if (cfg.stage2_init == "copy") {
        result.net.copy_weights_from(stage1);
    } else if (cfg.stage2_init != "fresh") {
        throw UsageError("stage2_init must be 'copy' or 'fresh'");
    }
    result.loss = result.net.train(assemble_dataset(crops, labels, cfg), cfg.train);
    if (!cfg.stage2_weights.empty()) result.net.save_weights(cfg.stage2_weights);
    return result;
}

TwoStageTrainResult train_two_stage(const DatasetManifest& manifest,
                                    const PipelineConfig& cfg) {
    if (manifest.entries.empty()) throw UsageError("train_two_stage: manifest is empty");
    StageTrainResult s1 = train_stage1(manifest, cfg);
    StageTrainResult s2 = train_stage2(manifest, s1.net, cfg);
    return TwoStageTrainResult{std::move(s1.net), std::move(s2.net), std::move(s1.loss),
                               std::move(s2.loss)};
}

void save_predictions(const std::vector<PredictionRecord>& records,
                      const std::string& csv_path) {
    std::ofstream out(csv_path);
    if (!out) throw FormatError("cannot open '" + csv_path + "' for writing");
    out << "image_id,p_mel,p_sk,p_nevus\n";
    out.setf(std::ios::fixed);
    out.precision(6);
    for (const auto& r : records)
        out << r.image_id << "," << r.p_mel << "," << r.p_sk << "," << r.p_nevus << "\n";
    if (!out) throw FormatError("failed to write '" + csv_path + "'");
}

std::vector<PredictionRecord> load_predictions(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw FormatError("cannot open predictions '" + csv_path + "'");
    std::string line;
    if (!std::getline(in, line) || line.rfind("image_id,p_mel,p_sk,p_nevus", 0) != 0)
        throw FormatError("'" + csv_path + "': expected header image_id,p_mel,p_sk,p_nevus");
    std::vector<PredictionRecord> records;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        PredictionRecord r;
        std::string field;
        try {
            std::getline(ss, r.image_id, ',');
            std::getline(ss, field, ',');
            r.p_mel = std::stod(field);
            std::getline(ss, field, ',');
            r.p_sk = std::stod(field);
            std::getline(ss, field, ',');
            r.p_nevus = std::stod(field);
        } catch (const std::exception&) {
            throw FormatError("'" + csv_path + "' line " + std::to_string(line_no) +
                              ": malformed prediction row");
        }
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace lesioncam
