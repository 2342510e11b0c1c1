#include <fstream>

#include <json.hpp>

#include "lesioncam/errors.hpp"
#include "lesioncam/pipeline.hpp"

namespace lesioncam {

namespace {

using nlohmann::json;

LayerSpec parse_layer(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "conv")
        return LayerSpec::conv(j.at("out_channels").get<int>(), j.at("kernel").get<int>(),
                               j.value("stride", 1), j.value("padding", 0));
    if (kind == "relu") return LayerSpec::relu();
    if (kind == "maxpool") return LayerSpec::maxpool();
    if (kind == "gap") return LayerSpec::gap();
    if (kind == "dropout") return LayerSpec::dropout(j.value("p", 0.5));
    if (kind == "fc") return LayerSpec::fc(j.at("num_classes").get<int>());
    throw FormatError("config: unknown layer kind '" + kind + "'");
}

NetworkConfig parse_network(const json& j) {
    const std::string preset = j.value("preset", "tiny");
    NetworkConfig cfg;
    if (preset == "custom") {
        cfg.preset = "custom";
        if (!j.contains("layers"))
            throw FormatError("config: custom network preset requires a layers list");
        for (const auto& l : j.at("layers")) cfg.layers.push_back(parse_layer(l));
        cfg.input_size = j.value("input_size", 64);
        cfg.num_classes = j.value("num_classes", 3);
        cfg.dropout_p = j.value("dropout_p", 0.5);
        cfg.seed = j.value("seed", 0u);
    } else {
        cfg = preset_config(preset, j.value("seed", 0u));
        if (j.contains("input_size")) cfg.input_size = j.at("input_size").get<int>();
        if (j.contains("num_classes")) {
            cfg.num_classes = j.at("num_classes").get<int>();
            cfg.layers.back() = LayerSpec::fc(cfg.num_classes);
        }
        if (j.contains("dropout_p")) {
            cfg.dropout_p = j.at("dropout_p").get<double>();
            for (auto& l : cfg.layers)
                if (l.kind == LayerSpec::Kind::Dropout) l.p = cfg.dropout_p;
        }
    }
    return cfg;
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw FormatError("config '" + path + "': " + e.what());
    }

    PipelineConfig cfg = default_pipeline_config();
    try {
        if (j.contains("network")) cfg.network = parse_network(j.at("network"));
        if (j.contains("region")) {
            const auto& r = j.at("region");
            cfg.region.threshold_frac = r.value("threshold_frac", cfg.region.threshold_frac);
            cfg.region.margin_frac = r.value("margin_frac", cfg.region.margin_frac);
            cfg.region.connectivity = r.value("connectivity", cfg.region.connectivity);
        }
        if (j.contains("hair")) {
            const auto& h = j.at("hair");
            cfg.hair_enabled = h.value("enabled", cfg.hair_enabled);
            cfg.hair.se_length = h.value("se_length", cfg.hair.se_length);
            cfg.hair.diff_threshold = h.value("diff_threshold", cfg.hair.diff_threshold);
            cfg.hair.min_length = h.value("min_length", cfg.hair.min_length);
            cfg.hair.max_mean_width = h.value("max_mean_width", cfg.hair.max_mean_width);
            cfg.hair.median_max_window =
                h.value("median_max_window", cfg.hair.median_max_window);
        }
        if (j.contains("augment")) {
            const auto& a = j.at("augment");
            cfg.augment_enabled = a.value("enabled", cfg.augment_enabled);
            if (a.contains("rotations"))
                cfg.augment.rotation_quarters = a.at("rotations").get<std::vector<int>>();
            cfg.augment.hflip = a.value("hflip", cfg.augment.hflip);
            cfg.augment.five_crop = a.value("five_crop", cfg.augment.five_crop);
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            cfg.train.lr = t.value("lr", cfg.train.lr);
            cfg.train.momentum = t.value("momentum", cfg.train.momentum);
            cfg.train.weight_decay = t.value("weight_decay", cfg.train.weight_decay);
            cfg.train.epochs = t.value("epochs", cfg.train.epochs);
            cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
            cfg.train.seed = t.value("seed", cfg.train.seed);
        }
        if (j.contains("pipeline")) {
            const auto& p = j.at("pipeline");
            cfg.stage1_weights = p.value("stage1_weights", cfg.stage1_weights);
            cfg.stage2_weights = p.value("stage2_weights", cfg.stage2_weights);
            cfg.final_score_source = p.value("final_score_source", cfg.final_score_source);
            cfg.stage2_init = p.value("stage2_init", cfg.stage2_init);
            cfg.cam_class = p.value("cam_class", cfg.cam_class);
        }
    } catch (const json::exception& e) {
        throw FormatError("config '" + path + "': " + e.what());
    }
    validate_config(cfg.network);
    return cfg;
}

}  // namespace lesioncam
