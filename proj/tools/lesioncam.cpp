// Command-line front end: preprocess / augment / synth / train / infer /
// cam / pipeline / eval over the lesioncam core library.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "lesioncam/eval.hpp"
#include "lesioncam/pipeline.hpp"

namespace fs = std::filesystem;
using namespace lesioncam;

namespace {

struct GlobalOpts {
    std::string config_path;
    int seed = -1;           // -1 = keep the config's seeds
    bool deterministic = false;
};

PipelineConfig make_config(const GlobalOpts& g) {
    PipelineConfig cfg = g.config_path.empty() ? default_pipeline_config()
                                               : load_pipeline_config(g.config_path);
    if (g.seed >= 0) {
        cfg.network.seed = static_cast<std::uint32_t>(g.seed);
        cfg.train.seed = static_cast<std::uint32_t>(g.seed);
    }
    // Execution is already serial and seeded; the flag exists so scripted runs
    // can state the intent explicitly.
    (void)g.deterministic;
    return cfg;
}

void add_globals(CLI::App* cmd, GlobalOpts& g) {
    cmd->add_option("--config", g.config_path, "JSON config file");
    cmd->add_option("--seed", g.seed, "override network and training seeds");
    cmd->add_flag("--deterministic", g.deterministic, "force a fully reproducible run");
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

Network load_network(const std::string& weights, const PipelineConfig& cfg) {
    if (weights.empty()) throw UsageError("no weights file given (flag or config)");
    return Network::load_weights(weights, cfg.network);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out << text;
}

void save_gray(const GrayImage& img, const std::string& path) {
    if (fs::path(path).extension() == ".pgm") {
        save_pgm(img, path);
        return;
    }
    RgbImage rgb(img.w, img.h);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = img.at(x, y);
    encode_image(rgb, path);
}

// ---- subcommands ----

int cmd_preprocess(const GlobalOpts& g, const std::string& in, const std::string& out,
                   const std::string& mask_out, const HairParams& hp) {
    (void)g;
    const HairRemovalResult r = remove_hairs(decode_image(in), hp);
    encode_image(r.image, out);
    if (!mask_out.empty()) save_pgm(mask_to_gray(r.mask), mask_out);
    return 0;
}

int cmd_augment(const GlobalOpts& g, const std::string& manifest_path,
                const std::string& out_dir) {
    const PipelineConfig cfg = make_config(g);
    const DatasetManifest in = load_manifest(manifest_path);
    fs::create_directories(out_dir);

    const auto variants = enumerate_variants(cfg.augment);
    DatasetManifest out;
    out.root = out_dir;
    for (const auto& e : in.entries) {
        const RgbImage img = decode_image(e.image_path);
        for (const auto& v : variants) {
            const std::string id = stem_of(e.image_path) + v.id_suffix();
            encode_image(apply_variant(img, v, cfg.augment.five_crop),
                         (fs::path(out_dir) / (id + ".png")).string());
            ManifestEntry ne;
            ne.image_path = id + ".png";  // relative to the manifest's directory
            ne.label = e.label;
            ne.label.image_id = id;
            out.entries.push_back(std::move(ne));
        }
    }
    save_manifest(out, (fs::path(out_dir) / "manifest.csv").string());
    std::printf("%zu images -> %zu augmented\n", in.entries.size(), out.entries.size());
    return 0;
}

int cmd_synth(const GlobalOpts& g, const std::string& out_dir, int per_class, int size,
              double hair_density) {
    SyntheticSpec spec;
    spec.image_size = size;
    spec.per_class = per_class;
    spec.hair_density = hair_density;
    spec.seed = g.seed >= 0 ? static_cast<std::uint32_t>(g.seed) : 0;
    const DatasetManifest m = materialize_synthetic(generate_synthetic(spec), out_dir);
    std::printf("wrote %zu images under %s\n", m.entries.size(), out_dir.c_str());
    return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& manifest_path, const std::string& stage,
              std::string w1, std::string w2) {
    PipelineConfig cfg = make_config(g);
    if (!w1.empty()) cfg.stage1_weights = w1;
    if (!w2.empty()) cfg.stage2_weights = w2;
    if (cfg.stage1_weights.empty()) cfg.stage1_weights = "stage1_weights.bin";
    if (cfg.stage2_weights.empty()) cfg.stage2_weights = "stage2_weights.bin";
    const DatasetManifest manifest = load_manifest(manifest_path);

    if (stage == "1") {
        const StageTrainResult r = train_stage1(manifest, cfg);
        std::printf("stage1 final loss %.6f -> %s\n", r.loss.empty() ? 0.0 : r.loss.back(),
                    cfg.stage1_weights.c_str());
    } else if (stage == "2") {
        const Network s1 = load_network(cfg.stage1_weights, cfg);
        const StageTrainResult r = train_stage2(manifest, s1, cfg);
        std::printf("stage2 final loss %.6f -> %s\n", r.loss.empty() ? 0.0 : r.loss.back(),
                    cfg.stage2_weights.c_str());
    } else {
        const TwoStageTrainResult r = train_two_stage(manifest, cfg);
        std::printf("stage1 final loss %.6f -> %s\nstage2 final loss %.6f -> %s\n",
                    r.stage1_loss.empty() ? 0.0 : r.stage1_loss.back(),
                    cfg.stage1_weights.c_str(),
                    r.stage2_loss.empty() ? 0.0 : r.stage2_loss.back(),
                    cfg.stage2_weights.c_str());
    }
    return 0;
}

int cmd_infer(const GlobalOpts& g, const std::string& in, std::string weights) {
    const PipelineConfig cfg = make_config(g);
    if (weights.empty()) weights = cfg.stage1_weights;
    Network net = load_network(weights, cfg);
    const Stage1Output out = run_stage1(decode_image(in), net, cfg);
    std::printf("image_id,p_mel,p_sk,p_nevus\n%s,%.6f,%.6f,%.6f\n", stem_of(in).c_str(),
                out.probs[0], out.probs[1], out.probs[2]);
    return 0;
}

int cmd_cam(const GlobalOpts& g, const std::string& in, std::string weights, int cam_class,
            const std::string& heatmap_out, const std::string& overlay_out,
            const std::string& mask_out, const std::string& bbox_out,
            const std::string& crop_out, double alpha) {
    PipelineConfig cfg = make_config(g);
    if (cam_class >= 0) cfg.cam_class = cam_class;
    if (weights.empty()) weights = cfg.stage1_weights;
    Network net = load_network(weights, cfg);

    const RgbImage img = decode_image(in);
    const Stage1Output out = run_stage1(img, net, cfg);
    if (!heatmap_out.empty()) save_gray(heatmap_to_gray(out.heatmap), heatmap_out);
    if (!overlay_out.empty())
        encode_image(render_overlay(out.preprocessed, out.heatmap, alpha), overlay_out);

    BBox box;
    const RgbImage crop_img =
        extract_import_region(out.preprocessed, out.heatmap, cfg.region, &box);
    if (!mask_out.empty()) {
        const BinaryMask mask = threshold_mask(out.heatmap, cfg.region.threshold_frac);
        save_pgm(mask_to_gray(mask), mask_out);
    }
    if (!bbox_out.empty()) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%d %d %d %d\n", box.x0, box.y0, box.x1, box.y1);
        write_text(bbox_out, buf);
    }
    if (!crop_out.empty()) encode_image(crop_img, crop_out);
    std::printf("class %d  crop %d %d %d %d\n", out.cam.class_id, box.x0, box.y0, box.x1,
                box.y1);
    return 0;
}

int cmd_pipeline(const GlobalOpts& g, const std::vector<std::string>& inputs,
                 const std::string& out_csv, std::string w1, std::string w2) {
    PipelineConfig cfg = make_config(g);
    if (!w1.empty()) cfg.stage1_weights = w1;
    if (!w2.empty()) cfg.stage2_weights = w2;
    Network s1 = load_network(cfg.stage1_weights, cfg);
    Network s2 = load_network(cfg.stage2_weights, cfg);

    std::vector<PredictionRecord> records;
    for (const auto& path : inputs)
        records.push_back(run_two_stage(decode_image(path), stem_of(path), s1, s2, cfg));
    save_predictions(records, out_csv);
    std::printf("wrote %zu predictions to %s\n", records.size(), out_csv.c_str());
    return 0;
}

int cmd_eval(const GlobalOpts& g, const std::string& pred_path, const std::string& truth_path,
             bool csv) {
    (void)g;
    const std::vector<PredictionRecord> preds = load_predictions(pred_path);
    std::map<std::string, int> truth;
    for (const auto& rec : load_labels(truth_path)) truth[rec.image_id] = rec.class_id();

    std::vector<ScoredSample> mel, sk;
    for (const auto& p : preds) {
        const auto it = truth.find(p.image_id);
        if (it == truth.end())
            throw DataError("no ground truth for image_id '" + p.image_id + "'");
        mel.push_back({p.p_mel, it->second == 0 ? 1 : 0});
        sk.push_back({p.p_sk, it->second == 1 ? 1 : 0});
    }
    const AucReport r = report(mel, sk);
    std::fputs((csv ? format_report_csv(r) : format_report(r)).c_str(), stdout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CAM-guided two-stage skin lesion classifier"};
    app.require_subcommand(1);

    GlobalOpts g;

    // preprocess
    std::string pp_in, pp_out, pp_mask;
    HairParams hp;
    auto* preprocess = app.add_subcommand("preprocess", "hair removal on one image");
    add_globals(preprocess, g);
    preprocess->add_option("--in", pp_in, "input image")->required();
    preprocess->add_option("--out", pp_out, "output image")->required();
    preprocess->add_option("--mask", pp_mask, "write the hair mask (pgm)");
    preprocess->add_option("--se-length", hp.se_length, "line structuring element length");
    preprocess->add_option("--threshold", hp.diff_threshold, "closing difference cut");
    preprocess->add_option("--min-length", hp.min_length, "thin/long: min bbox side");
    preprocess->add_option("--max-mean-width", hp.max_mean_width, "thin/long: max area/side");
    preprocess->add_option("--median-window", hp.median_max_window, "adaptive median cap");

    // augment
    std::string aug_manifest, aug_out;
    auto* augment = app.add_subcommand("augment", "materialize the expansion policy");
    add_globals(augment, g);
    augment->add_option("--manifest", aug_manifest, "input manifest csv")->required();
    augment->add_option("--out-dir", aug_out, "output directory")->required();

    // synth
    std::string synth_out;
    int synth_per_class = 100, synth_size = 64;
    double synth_hair = 0.0;
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    add_globals(synth, g);
    synth->add_option("--out-dir", synth_out, "output directory")->required();
    synth->add_option("--per-class", synth_per_class, "images per class");
    synth->add_option("--size", synth_size, "square image size");
    synth->add_option("--hair-density", synth_hair, "expected hairs per image");

    // train
    std::string tr_manifest, tr_stage = "both", tr_w1, tr_w2;
    auto* train = app.add_subcommand("train", "train stage 1, stage 2, or both");
    add_globals(train, g);
    train->add_option("--manifest", tr_manifest, "training manifest csv")->required();
    train->add_option("--stage", tr_stage, "1, 2, or both")
        ->check(CLI::IsMember({"1", "2", "both"}));
    train->add_option("--stage1-weights", tr_w1, "stage-1 weight file");
    train->add_option("--stage2-weights", tr_w2, "stage-2 weight file");

    // infer
    std::string inf_in, inf_weights;
    auto* infer = app.add_subcommand("infer", "single-network class probabilities");
    add_globals(infer, g);
    infer->add_option("--in", inf_in, "input image")->required();
    infer->add_option("--weights", inf_weights, "weight file");

    // cam
    std::string cam_in, cam_weights, cam_heatmap, cam_overlay, cam_mask, cam_bbox, cam_crop;
    int cam_class = -1;
    double cam_alpha = 0.5;
    auto* cam = app.add_subcommand("cam", "activation map and import region outputs");
    add_globals(cam, g);
    cam->add_option("--in", cam_in, "input image")->required();
    cam->add_option("--weights", cam_weights, "weight file");
    cam->add_option("--cam-class", cam_class, "pin the map to this class");
    cam->add_option("--heatmap", cam_heatmap, "write normalized heatmap image");
    cam->add_option("--overlay", cam_overlay, "write colormapped overlay png");
    cam->add_option("--mask", cam_mask, "write threshold mask pgm");
    cam->add_option("--bbox", cam_bbox, "write crop box text: x0 y0 x1 y1");
    cam->add_option("--crop", cam_crop, "write import-region crop png");
    cam->add_option("--alpha", cam_alpha, "overlay blend weight");

    // pipeline
    std::vector<std::string> pl_in;
    std::string pl_out, pl_w1, pl_w2;
    auto* pipeline = app.add_subcommand("pipeline", "two-stage prediction to csv");
    add_globals(pipeline, g);
    pipeline->add_option("--in", pl_in, "input image (repeatable)")->required();
    pipeline->add_option("--out", pl_out, "predictions csv")->required();
    pipeline->add_option("--stage1-weights", pl_w1, "stage-1 weight file");
    pipeline->add_option("--stage2-weights", pl_w2, "stage-2 weight file");

    // eval
    std::string ev_pred, ev_truth;
    bool ev_csv = false;
    auto* eval = app.add_subcommand("eval", "AUC report from predictions + ground truth");
    add_globals(eval, g);
    eval->add_option("--pred", ev_pred, "predictions csv")->required();
    eval->add_option("--truth", ev_truth, "ground truth csv")->required();
    eval->add_flag("--csv", ev_csv, "machine-readable row instead of the table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // usage problems are exit 1, help is 0
    }

    try {
        if (preprocess->parsed())
            return cmd_preprocess(g, pp_in, pp_out, pp_mask, hp);
        if (augment->parsed()) return cmd_augment(g, aug_manifest, aug_out);
        if (synth->parsed())
            return cmd_synth(g, synth_out, synth_per_class, synth_size, synth_hair);
        if (train->parsed()) return cmd_train(g, tr_manifest, tr_stage, tr_w1, tr_w2);
        if (infer->parsed()) return cmd_infer(g, inf_in, inf_weights);
        if (cam->parsed())
            return cmd_cam(g, cam_in, cam_weights, cam_class, cam_heatmap, cam_overlay,
                           cam_mask, cam_bbox, cam_crop, cam_alpha);
        if (pipeline->parsed()) return cmd_pipeline(g, pl_in, pl_out, pl_w1, pl_w2);
        if (eval->parsed()) return cmd_eval(g, ev_pred, ev_truth, ev_csv);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 1;
}
