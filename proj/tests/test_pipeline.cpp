#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "lesioncam/pipeline.hpp"

using namespace lesioncam;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = (fs::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

PipelineConfig small_cfg() {
    PipelineConfig cfg = default_pipeline_config();
    cfg.network = NetworkConfig{};
    cfg.network.preset = "custom";
    cfg.network.input_size = 16;
    cfg.network.layers = {LayerSpec::conv(4, 3, 1, 1), LayerSpec::relu(),
                          LayerSpec::maxpool(),        LayerSpec::conv(8, 3, 1, 1),
                          LayerSpec::relu(),           LayerSpec::gap(),
                          LayerSpec::fc(3)};
    cfg.train.epochs = 1;
    cfg.train.batch_size = 4;
    return cfg;
}

RgbImage sample_image(int size, std::uint32_t seed) {
    SyntheticSpec spec;
    spec.image_size = size;
    spec.per_class = 1;
    spec.seed = seed;
    return generate_synthetic(spec)[0].image;
}

}  // namespace

TEST_CASE("config loader applies sections over defaults") {
    const std::string path = write_temp("cfg.json", R"({
        "network": {"preset": "tiny", "input_size": 32, "seed": 3},
        "region": {"threshold_frac": 0.5, "connectivity": 4},
        "hair": {"enabled": true, "diff_threshold": 25},
        "augment": {"enabled": true, "rotations": [0, 1], "hflip": true},
        "train": {"lr": 0.005, "epochs": 2, "seed": 7},
        "pipeline": {"final_score_source": "mean", "stage2_init": "fresh", "cam_class": 1}
    })");
    const PipelineConfig cfg = load_pipeline_config(path);
    CHECK(cfg.network.input_size == 32);
    CHECK(cfg.region.threshold_frac == 0.5);
    CHECK(cfg.region.connectivity == 4);
    CHECK(cfg.region.margin_frac == doctest::Approx(0.1));  // default kept
    CHECK(cfg.hair_enabled);
    CHECK(cfg.hair.diff_threshold == 25);
    CHECK(cfg.augment_enabled);
    CHECK(cfg.augment.rotation_quarters == std::vector<int>{0, 1});
    CHECK(cfg.augment.hflip);
    CHECK(cfg.train.lr == 0.005);
    CHECK(cfg.train.epochs == 2);
    CHECK(cfg.final_score_source == "mean");
    CHECK(cfg.stage2_init == "fresh");
    CHECK(cfg.cam_class == 1);
    fs::remove(path);
}

TEST_CASE("empty config file yields the defaults") {
    const std::string path = write_temp("cfg_empty.json", "{}");
    const PipelineConfig cfg = load_pipeline_config(path);
    const PipelineConfig def = default_pipeline_config();
    CHECK(cfg.network.preset == def.network.preset);
    CHECK(cfg.region.threshold_frac == def.region.threshold_frac);
    CHECK(cfg.final_score_source == "stage2");
    fs::remove(path);
}

TEST_CASE("invalid json is a format error") {
    const std::string path = write_temp("cfg_bad.json", "{ not json");
    CHECK_THROWS_AS(load_pipeline_config(path), FormatError);
    fs::remove(path);
}

TEST_CASE("custom network preset without layers is rejected") {
    const std::string path =
        write_temp("cfg_nolayers.json", R"({"network": {"preset": "custom"}})");
    CHECK_THROWS_AS(load_pipeline_config(path), FormatError);
    fs::remove(path);
}

TEST_CASE("stage1 output is deterministic and well-shaped") {
    const PipelineConfig cfg = small_cfg();
    Network net(cfg.network);
    const RgbImage img = sample_image(24, 1);

    const Stage1Output a = run_stage1(img, net, cfg);
    const Stage1Output b = run_stage1(img, net, cfg);

    CHECK(a.probs == b.probs);
    CHECK(a.cam.grid.v == b.cam.grid.v);
    CHECK(a.heatmap.w == img.w);
    CHECK(a.heatmap.h == img.h);
    CHECK(a.preprocessed.px == img.px);  // hair removal disabled by default

    double sum = 0.0;
    for (double p : a.probs) {
        CHECK(p >= 0.0);
        sum += p;
    }
    CHECK(sum == doctest::Approx(1.0));
    for (float v : a.heatmap.v) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("cam_class override pins the cam to that class") {
    PipelineConfig cfg = small_cfg();
    cfg.cam_class = 2;
    Network net(cfg.network);
    const Stage1Output out = run_stage1(sample_image(20, 2), net, cfg);
    CHECK(out.cam.class_id == 2);
}

TEST_CASE("two-stage record carries stage1 probs, a valid box and an argmax class") {
    const PipelineConfig cfg = small_cfg();
    Network s1(cfg.network);
    NetworkConfig cfg2 = cfg.network;
    cfg2.seed = 99;
    Network s2(cfg2);
    const RgbImage img = sample_image(24, 3);

    const PredictionRecord rec = run_two_stage(img, "sample", s1, s2, cfg);
    CHECK(rec.image_id == "sample");
    CHECK(rec.p_mel + rec.p_sk + rec.p_nevus == doctest::Approx(1.0));
    CHECK(rec.crop_box.x0 >= 0);
    CHECK(rec.crop_box.x1 <= img.w);
    CHECK(rec.crop_box.width() > 0);
    CHECK(rec.crop_box.height() > 0);
    const std::array<double, 3> p = {rec.p_mel, rec.p_sk, rec.p_nevus};
    for (int c = 0; c < 3; ++c) CHECK(p[rec.predicted_class] >= p[c]);

    const std::array<double, 3> s1_probs = run_stage1(img, s1, cfg).probs;
    CHECK(rec.stage1_probs == s1_probs);
}

TEST_CASE("mean selector averages the per-stage probabilities") {
    PipelineConfig cfg = small_cfg();
    Network s1(cfg.network);
    NetworkConfig cfg2 = cfg.network;
    cfg2.seed = 123;
    Network s2(cfg2);
    const RgbImage img = sample_image(24, 4);

    cfg.final_score_source = "stage2";
    const PredictionRecord a = run_two_stage(img, "x", s1, s2, cfg);
    cfg.final_score_source = "mean";
    const PredictionRecord b = run_two_stage(img, "x", s1, s2, cfg);
    CHECK(b.p_mel == doctest::Approx(0.5 * (a.stage1_probs[0] + a.p_mel)));
    CHECK(b.p_sk == doctest::Approx(0.5 * (a.stage1_probs[1] + a.p_sk)));
    CHECK(b.p_nevus == doctest::Approx(0.5 * (a.stage1_probs[2] + a.p_nevus)));

    cfg.final_score_source = "median";
    CHECK_THROWS_AS(run_two_stage(img, "x", s1, s2, cfg), UsageError);
}

TEST_CASE("same stage networks agree with stage1 when the crop is the full image") {
    // a huge margin clamps any crop to the full image, so with identical
    // weights stage 2 sees the same input as stage 1
    PipelineConfig cfg = small_cfg();
    cfg.region.margin_frac = 100.0;
    Network s1(cfg.network);
    Network s2(cfg.network);
    s2.copy_weights_from(s1);
    const RgbImage img = sample_image(16, 5);  // already at input size, no resize drift
    const PredictionRecord rec = run_two_stage(img, "x", s1, s2, cfg);
    CHECK(rec.crop_box == BBox{0, 0, 16, 16});
    CHECK(rec.p_mel == doctest::Approx(rec.stage1_probs[0]));
    CHECK(rec.p_sk == doctest::Approx(rec.stage1_probs[1]));
}

TEST_CASE("train_two_stage runs end to end and honors copy vs fresh init") {
    SyntheticSpec spec;
    spec.image_size = 24;
    spec.per_class = 2;
    spec.seed = 21;
    const std::string dir = (fs::temp_directory_path() / "pipe_train").string();
    const DatasetManifest manifest = materialize_synthetic(generate_synthetic(spec), dir);

    PipelineConfig cfg = small_cfg();
    cfg.train.epochs = 0;  // no updates, so stage weights stay at init

    SUBCASE("copy init makes the stages identical at epoch zero") {
        cfg.stage2_init = "copy";
        TwoStageTrainResult r = train_two_stage(manifest, cfg);
        const RgbImage img = sample_image(24, 22);
        const Stage1Output a = run_stage1(img, r.stage1, cfg);
        const Stage1Output b = run_stage1(img, r.stage2, cfg);
        CHECK(a.probs == b.probs);
    }

    SUBCASE("fresh init keeps stage 2 at its own random draw") {
        cfg.stage2_init = "fresh";
        TwoStageTrainResult r = train_two_stage(manifest, cfg);
        const RgbImage img = sample_image(24, 22);
        const Stage1Output a = run_stage1(img, r.stage1, cfg);
        const Stage1Output b = run_stage1(img, r.stage2, cfg);
        CHECK(a.probs == b.probs);  // same seed, same draw
    }

    SUBCASE("one epoch produces one loss entry per stage and saves weights") {
        cfg.train.epochs = 1;
        cfg.stage1_weights = (fs::path(dir) / "s1.bin").string();
        cfg.stage2_weights = (fs::path(dir) / "s2.bin").string();
        TwoStageTrainResult r = train_two_stage(manifest, cfg);
        CHECK(r.stage1_loss.size() == 1);
        CHECK(r.stage2_loss.size() == 1);
        CHECK(fs::exists(cfg.stage1_weights));
        CHECK(fs::exists(cfg.stage2_weights));
        Network loaded = Network::load_weights(cfg.stage1_weights, cfg.network);
        const RgbImage img = sample_image(24, 23);
        CHECK(run_stage1(img, r.stage1, cfg).probs == run_stage1(img, loaded, cfg).probs);
    }

    SUBCASE("empty manifest is rejected") {
        CHECK_THROWS_AS(train_two_stage(DatasetManifest{}, cfg), UsageError);
    }

    fs::remove_all(dir);
}

TEST_CASE("predictions csv roundtrip at six decimals") {
    std::vector<PredictionRecord> recs(2);
    recs[0].image_id = "a";
    recs[0].p_mel = 0.123456;
    recs[0].p_sk = 0.5;
    recs[0].p_nevus = 0.376544;
    recs[1].image_id = "b";
    recs[1].p_mel = 1.0;

    const std::string path = (fs::temp_directory_path() / "preds.csv").string();
    save_predictions(recs, path);
    const auto back = load_predictions(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].image_id == "a");
    CHECK(back[0].p_mel == doctest::Approx(0.123456).epsilon(1e-9));
    CHECK(back[0].p_sk == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(back[1].p_mel == doctest::Approx(1.0).epsilon(1e-9));
    fs::remove(path);
}

TEST_CASE("predictions loader rejects a wrong header and malformed rows") {
    const std::string bad_header = write_temp("preds_bad1.csv", "id,a,b,c\nx,0,0,0\n");
    CHECK_THROWS_AS(load_predictions(bad_header), FormatError);
    fs::remove(bad_header);

    const std::string bad_row =
        write_temp("preds_bad2.csv", "image_id,p_mel,p_sk,p_nevus\nx,oops,0,0\n");
    CHECK_THROWS_WITH_AS(load_predictions(bad_row), doctest::Contains("line 2"), FormatError);
    fs::remove(bad_row);
}
