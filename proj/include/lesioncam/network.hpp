#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lesioncam/layers.hpp"
#include "lesioncam/tensor.hpp"

namespace lesioncam {

struct LayerSpec {
    enum class Kind { Conv, Relu, MaxPool2x2, Gap, Dropout, Fc };
    Kind kind = Kind::Relu;
    int out_channels = 0;  // conv
    int kernel = 0;        // conv
    int stride = 1;        // conv
    int padding = 0;       // conv
    double p = 0.0;        // dropout
    int num_classes = 0;   // fc

    static LayerSpec conv(int oc, int k, int stride = 1, int pad = 0) {
        LayerSpec s;
        s.kind = Kind::Conv;
        s.out_channels = oc;
        s.kernel = k;
        s.stride = stride;
        s.padding = pad;
        return s;
    }
    static LayerSpec relu() { return LayerSpec{Kind::Relu}; }
    static LayerSpec maxpool() { return LayerSpec{Kind::MaxPool2x2}; }
    static LayerSpec gap() { return LayerSpec{Kind::Gap}; }
    static LayerSpec dropout(double p) {
        LayerSpec s;
        s.kind = Kind::Dropout;
        s.p = p;
        return s;
    }
    static LayerSpec fc(int classes) {
        LayerSpec s;
        s.kind = Kind::Fc;
        s.num_classes = classes;
        return s;
    }
};

struct NetworkConfig {
    std::string preset = "custom";
    std::vector<LayerSpec> layers;
    int input_size = 64;
    int input_channels = 3;
    int num_classes = 3;
    double dropout_p = 0.5;
    std::uint32_t seed = 0;
};

// 14-conv GAP-headed classifier: VGG-style channel doubling up to a final
// 1024-channel conv, pad dropped on the last two convs, four 2x2 max-pools.
// 224x224x3 input yields a 10x10x1024 feature map.
NetworkConfig paper14_config(std::uint32_t seed = 0);

// 6 unpadded convs / 2 pools on 64x64 input with the same GAP-dropout-FC
// head; 64x64x3 input yields a 9x9x64 feature map.
NetworkConfig tiny_config(std::uint32_t seed = 0);

NetworkConfig preset_config(const std::string& name, std::uint32_t seed = 0);

// Throws UsageError naming the violated invariant.
void validate_config(const NetworkConfig& cfg);

// (channels, height, width) of the tensor entering the GAP layer, from the
// config's shape arithmetic alone.
struct FeatureShape {
    int c = 0, h = 0, w = 0;
};
FeatureShape feature_map_shape(const NetworkConfig& cfg);

// Affine map from feature-map indices to input-pixel coordinates: feature
// (fx, fy) is centered on input pixel (offset + stride*fx, offset + stride*fy).
struct FeatureGeometry {
    double offset = 0.0;
    double stride = 1.0;
};
FeatureGeometry feature_map_geometry(const NetworkConfig& cfg);

struct ForwardTrace {
    Tensor4 feature_maps;  // input to the GAP layer (last conv block output)
    Tensor4 gap_vector;    // (n, K, 1, 1)
    Tensor4 logits;        // (n, C, 1, 1)
    Tensor4 probs;         // softmax(logits)
};

struct Dataset {
    Tensor4 images;           // (N, c, h, w)
    std::vector<int> labels;  // length N
};

struct Hyperparams {
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 0.0;
    int epochs = 10;
    int batch_size = 16;
    std::uint32_t seed = 0;
};

class Network {
public:
    explicit Network(NetworkConfig cfg);

    const NetworkConfig& config() const { return cfg_; }
    const Tensor4& fc_weights() const { return fc_.value; }

    ForwardTrace forward(const Tensor4& batch, nn::Mode mode);

    // Returns per-epoch mean loss. Deterministic for a fixed hp.seed.
    std::vector<double> train(const Dataset& ds, const Hyperparams& hp);

    void save_weights(const std::string& path) const;
    static Network load_weights(const std::string& path, NetworkConfig cfg);

    // Copies parameter values (not optimizer state) from another network of
    // identical architecture.
    void copy_weights_from(const Network& other);

private:
    struct ConvParams {
        Param kernels;
        VecParam bias;
    };

    void init_params();
    double train_batch(const Tensor4& batch, const std::vector<int>& labels,
                       const Hyperparams& hp);

    NetworkConfig cfg_;
    std::vector<ConvParams> convs_;  // conv layers in order
    Param fc_;
    std::mt19937 dropout_rng_;
};

}  // namespace lesioncam
