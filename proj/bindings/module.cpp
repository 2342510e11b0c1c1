// pybind11 bindings: numpy images in, numpy/plain-python results out.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lesioncam/eval.hpp"
#include "lesioncam/pipeline.hpp"

namespace py = pybind11;
using namespace lesioncam;

namespace {

RgbImage rgb_from_array(const py::array_t<std::uint8_t, py::array::c_style>& a) {
    if (a.ndim() != 3 || a.shape(2) != 3)
        throw UsageError("expected a uint8 array of shape (h, w, 3)");
    RgbImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy_n(a.data(), img.px.size(), img.px.data());
    return img;
}

py::array_t<std::uint8_t> rgb_to_array(const RgbImage& img) {
    py::array_t<std::uint8_t> a({img.h, img.w, 3});
    std::copy_n(img.px.data(), img.px.size(), a.mutable_data());
    return a;
}

py::array_t<std::uint8_t> mask_to_array(const BinaryMask& mask) {
    py::array_t<std::uint8_t> a({mask.h, mask.w});
    std::copy_n(mask.px.data(), mask.px.size(), a.mutable_data());
    return a;
}

py::array_t<float> grid_to_array(const FloatGrid& grid) {
    py::array_t<float> a({grid.h, grid.w});
    std::copy_n(grid.v.data(), grid.v.size(), a.mutable_data());
    return a;
}

std::vector<ScoredSample> zip_samples(const std::vector<double>& scores,
                                      const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw UsageError("scores and labels must have the same length");
    std::vector<ScoredSample> samples(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) samples[i] = {scores[i], labels[i]};
    return samples;
}

// Config + both stage networks, the unit of work for python callers.
struct PyPipeline {
    PipelineConfig cfg;
    Network stage1;
    Network stage2;

    explicit PyPipeline(const std::string& config_path)
        : cfg(config_path.empty() ? default_pipeline_config()
                                  : load_pipeline_config(config_path)),
          stage1(cfg.network),
          stage2(cfg.network) {}

    void train(const std::string& manifest_csv) {
        const TwoStageTrainResult r = train_two_stage(load_manifest(manifest_csv), cfg);
        stage1 = r.stage1;
        stage2 = r.stage2;
    }

    void load_weights(const std::string& stage1_path, const std::string& stage2_path) {
        stage1 = Network::load_weights(stage1_path, cfg.network);
        stage2 = Network::load_weights(stage2_path, cfg.network);
    }

    void save_weights(const std::string& stage1_path, const std::string& stage2_path) {
        stage1.save_weights(stage1_path);
        stage2.save_weights(stage2_path);
    }

    py::dict predict(const py::array_t<std::uint8_t, py::array::c_style>& image) {
        const RgbImage img = rgb_from_array(image);
        const Stage1Output s1 = run_stage1(img, stage1, cfg);
        const PredictionRecord rec = run_two_stage(img, "image", stage1, stage2, cfg);
        py::dict out;
        out["probs"] = py::make_tuple(rec.p_mel, rec.p_sk, rec.p_nevus);
        out["stage1_probs"] =
            py::make_tuple(rec.stage1_probs[0], rec.stage1_probs[1], rec.stage1_probs[2]);
        out["predicted_class"] = rec.predicted_class;
        out["crop_box"] =
            py::make_tuple(rec.crop_box.x0, rec.crop_box.y0, rec.crop_box.x1, rec.crop_box.y1);
        out["heatmap"] = grid_to_array(s1.heatmap);
        return out;
    }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "CAM-guided two-stage skin lesion classification core";

    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);

    m.def(
        "roc_auc",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            return roc_auc(zip_samples(scores, labels));
        },
        py::arg("scores"), py::arg("labels"),
        "Mann-Whitney AUC with mid-rank tie handling.");

    m.def(
        "auc_report",
        [](const std::vector<double>& mel_scores, const std::vector<int>& mel_labels,
           const std::vector<double>& sk_scores, const std::vector<int>& sk_labels) {
            const AucReport r = report(zip_samples(mel_scores, mel_labels),
                                       zip_samples(sk_scores, sk_labels));
            py::dict out;
            out["m_auc"] = r.m_auc;
            out["sk_auc"] = r.sk_auc;
            out["avg_auc"] = r.avg_auc;
            return out;
        },
        py::arg("mel_scores"), py::arg("mel_labels"), py::arg("sk_scores"),
        py::arg("sk_labels"), "Melanoma-vs-rest and keratosis-vs-rest AUC report.");

    m.def(
        "remove_hairs",
        [](const py::array_t<std::uint8_t, py::array::c_style>& image, int se_length,
           int diff_threshold, int min_length, int max_mean_width, int median_max_window) {
            HairParams params{se_length, diff_threshold, min_length, max_mean_width,
                              median_max_window};
            const HairRemovalResult r = remove_hairs(rgb_from_array(image), params);
            return py::make_tuple(rgb_to_array(r.image), mask_to_array(r.mask));
        },
        py::arg("image"), py::arg("se_length") = 9, py::arg("diff_threshold") = 20,
        py::arg("min_length") = 15, py::arg("max_mean_width") = 5,
        py::arg("median_max_window") = 7,
        "Morphological hair removal; returns (cleaned image, hair mask).");

    m.def(
        "rotate90",
        [](const py::array_t<std::uint8_t, py::array::c_style>& image, int k) {
            return rgb_to_array(rotate90(rgb_from_array(image), k));
        },
        py::arg("image"), py::arg("k") = 1, "k clockwise quarter turns.");

    m.def(
        "hflip",
        [](const py::array_t<std::uint8_t, py::array::c_style>& image) {
            return rgb_to_array(hflip(rgb_from_array(image)));
        },
        py::arg("image"), "Horizontal mirror.");

    m.def(
        "generate_synthetic",
        [](int per_class, int image_size, double hair_density, std::uint32_t seed) {
            SyntheticSpec spec;
            spec.per_class = per_class;
            spec.image_size = image_size;
            spec.hair_density = hair_density;
            spec.seed = seed;
            py::list out;
            for (const auto& s : generate_synthetic(spec)) {
                py::dict d;
                d["id"] = s.id;
                d["image"] = rgb_to_array(s.image);
                d["class_id"] = s.class_id;
                d["bbox"] = py::make_tuple(s.lesion_bbox.x0, s.lesion_bbox.y0,
                                           s.lesion_bbox.x1, s.lesion_bbox.y1);
                out.append(d);
            }
            return out;
        },
        py::arg("per_class") = 10, py::arg("image_size") = 64, py::arg("hair_density") = 0.0,
        py::arg("seed") = 0, "Deterministic synthetic dermoscopy samples.");

    m.def(
        "materialize_synthetic",
        [](int per_class, int image_size, double hair_density, std::uint32_t seed,
           const std::string& out_dir) {
            SyntheticSpec spec;
            spec.per_class = per_class;
            spec.image_size = image_size;
            spec.hair_density = hair_density;
            spec.seed = seed;
            materialize_synthetic(generate_synthetic(spec), out_dir);
            return out_dir + "/manifest.csv";
        },
        py::arg("per_class"), py::arg("image_size"), py::arg("hair_density"), py::arg("seed"),
        py::arg("out_dir"), "Write a synthetic dataset and return the manifest path.");

    py::class_<PyPipeline>(m, "Pipeline",
                           "Two-stage classifier: config, training, prediction.")
        .def(py::init<const std::string&>(), py::arg("config_path") = std::string())
        .def("train", &PyPipeline::train, py::arg("manifest_csv"))
        .def("load_weights", &PyPipeline::load_weights, py::arg("stage1_path"),
             py::arg("stage2_path"))
        .def("save_weights", &PyPipeline::save_weights, py::arg("stage1_path"),
             py::arg("stage2_path"))
        .def("predict", &PyPipeline::predict, py::arg("image"));
}
