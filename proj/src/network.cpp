#include "lesioncam/network.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "lesioncam/errors.hpp"

namespace lesioncam {

namespace {

// Shifts [0,1] image tensors to [-0.5,0.5] before the first conv. With
// all-positive inputs the first layer's per-unit weight gradients share one
// sign, and SGD with momentum then drives a coherent shrink of the early
// kernels; centering decorrelates the updates.
void center_input(Tensor4& x) {
    for (auto& v : x.data) v -= 0.5f;
}

void append_conv_block(std::vector<LayerSpec>& layers, int oc, int pad) {
    layers.push_back(LayerSpec::conv(oc, 3, 1, pad));
    layers.push_back(LayerSpec::relu());
}

}  // namespace

NetworkConfig paper14_config(std::uint32_t seed) {
    NetworkConfig cfg;
    cfg.preset = "paper14";
    cfg.input_size = 224;
    cfg.num_classes = 3;
    cfg.dropout_p = 0.5;
    cfg.seed = seed;
    const int channels[14] = {64, 64, 128, 128, 256, 256, 256,
                              512, 512, 512, 512, 512, 512, 1024};
    for (int i = 0; i < 14; ++i) {
        append_conv_block(cfg.layers, channels[i], i < 12 ? 1 : 0);
        if (i == 1 || i == 3 || i == 6 || i == 9) {
            cfg.layers.push_back(LayerSpec::maxpool());
        }
    }
    cfg.layers.push_back(LayerSpec::gap());
    cfg.layers.push_back(LayerSpec::dropout(cfg.dropout_p));
    cfg.layers.push_back(LayerSpec::fc(cfg.num_classes));
    return cfg;
}

NetworkConfig tiny_config(std::uint32_t seed) {
    NetworkConfig cfg;
    cfg.preset = "tiny";
    cfg.input_size = 64;
    cfg.num_classes = 3;
    cfg.dropout_p = 0.5;
    cfg.seed = seed;
    // No padding anywhere: a zero-padded frame is a constant feature in every
    // image, and with a bias-free FC head the optimizer learns to read it as a
    // per-class bias, which drags the activation-map peaks to the corners.
    const int channels[6] = {16, 16, 32, 32, 64, 64};
    for (int i = 0; i < 6; ++i) {
        append_conv_block(cfg.layers, channels[i], 0);
        if (i == 1 || i == 3) cfg.layers.push_back(LayerSpec::maxpool());
    }
    cfg.layers.push_back(LayerSpec::gap());
    cfg.layers.push_back(LayerSpec::dropout(cfg.dropout_p));
    cfg.layers.push_back(LayerSpec::fc(cfg.num_classes));
    return cfg;
}

NetworkConfig preset_config(const std::string& name, std::uint32_t seed) {
    if (name == "paper14") return paper14_config(seed);
    if (name == "tiny") return tiny_config(seed);
    throw UsageError("unknown network preset '" + name + "'");
}

void validate_config(const NetworkConfig& cfg) {
    if (cfg.layers.empty()) throw UsageError("network config: layer list is empty");
    int gap_count = 0, fc_count = 0;
    int gap_pos = -1, fc_pos = -1;
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        const auto& l = cfg.layers[i];
        switch (l.kind) {
            case LayerSpec::Kind::Gap:
                ++gap_count;
                gap_pos = static_cast<int>(i);
                break;
            case LayerSpec::Kind::Fc:
                ++fc_count;
                fc_pos = static_cast<int>(i);
                break;
            case LayerSpec::Kind::Conv:
                if (l.padding < 0) throw UsageError("network config: conv padding < 0");
                if (l.stride < 1) throw UsageError("network config: conv stride < 1");
                break;
            case LayerSpec::Kind::Dropout:
                if (l.p < 0.0 || l.p >= 1.0)
                    throw UsageError("network config: dropout p must be in [0,1)");
                break;
            default:
                break;
        }
    }
    if (gap_count != 1)
        throw UsageError("network config: exactly one gap layer required, found " +
                         std::to_string(gap_count));
    if (fc_count != 1)
        throw UsageError("network config: exactly one fc layer required, found " +
                         std::to_string(fc_count));
    if (fc_pos != static_cast<int>(cfg.layers.size()) - 1)
        throw UsageError("network config: fc layer must be last");
    if (gap_pos > fc_pos) throw UsageError("network config: gap must precede fc");

    // Walk the shape arithmetic; every intermediate must stay positive.
    int h = cfg.input_size, w = cfg.input_size;
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        const auto& l = cfg.layers[i];
        if (l.kind == LayerSpec::Kind::Conv) {
            h = (h + 2 * l.padding - l.kernel) / l.stride + 1;
            w = (w + 2 * l.padding - l.kernel) / l.stride + 1;
        } else if (l.kind == LayerSpec::Kind::MaxPool2x2) {
            h /= 2;
            w /= 2;
        } else if (l.kind == LayerSpec::Kind::Gap) {
            h = 1;
            w = 1;
        }
        if (h < 1 || w < 1)
            throw UsageError("network config: layer " + std::to_string(i) +
                             " produces non-positive spatial size");
    }
}

FeatureShape feature_map_shape(const NetworkConfig& cfg) {
    validate_config(cfg);
    FeatureShape s{cfg.input_channels, cfg.input_size, cfg.input_size};
    for (const auto& l : cfg.layers) {
        if (l.kind == LayerSpec::Kind::Conv) {
            s.c = l.out_channels;
            s.h = (s.h + 2 * l.padding - l.kernel) / l.stride + 1;
            s.w = (s.w + 2 * l.padding - l.kernel) / l.stride + 1;
        } else if (l.kind == LayerSpec::Kind::MaxPool2x2) {
            s.h /= 2;
            s.w /= 2;
        } else if (l.kind == LayerSpec::Kind::Gap) {
            break;
        }
    }
    return s;
}

FeatureGeometry feature_map_geometry(const NetworkConfig& cfg) {
    validate_config(cfg);
    FeatureGeometry g;
    for (const auto& l : cfg.layers) {
        if (l.kind == LayerSpec::Kind::Conv) {
            g.offset += ((l.kernel - 1) / 2.0 - l.padding) * g.stride;
            g.stride *= l.stride;
        } else if (l.kind == LayerSpec::Kind::MaxPool2x2) {
            g.offset += 0.5 * g.stride;
            g.stride *= 2.0;
        } else if (l.kind == LayerSpec::Kind::Gap) {
            break;
        }
    }
    return g;
}

Network::Network(NetworkConfig cfg) : cfg_(std::move(cfg)), dropout_rng_(cfg_.seed) {
    validate_config(cfg_);
    init_params();
}

void Network::init_params() {
    std::mt19937 rng(cfg_.seed);
    int in_ch = cfg_.input_channels;
    int gap_channels = in_ch;
    for (const auto& l : cfg_.layers) {
        if (l.kind == LayerSpec::Kind::Conv) {
            ConvParams p{Param(Tensor4(l.out_channels, in_ch, l.kernel, l.kernel)),
                         VecParam(static_cast<std::size_t>(l.out_channels))};
            nn::he_uniform_init(p.kernels.value, in_ch * l.kernel * l.kernel, rng);
            convs_.push_back(std::move(p));
            in_ch = l.out_channels;
        } else if (l.kind == LayerSpec::Kind::Gap) {
            gap_channels = in_ch;
        } else if (l.kind == LayerSpec::Kind::Fc) {
            fc_ = Param(Tensor4(l.num_classes, gap_channels, 1, 1));
            nn::he_uniform_init(fc_.value, gap_channels, rng);
            // Scale the head down so initial logits sit near zero. A
            // full-scale head starts confidently wrong, and the fastest
            // descent direction is then a uniform shrink of every conv
            // kernel; the features collapse and training stalls.
            for (auto& v : fc_.value.data) v *= 0.01f;
        }
    }
}

ForwardTrace Network::forward(const Tensor4& batch, nn::Mode mode) {
    if (batch.h != cfg_.input_size || batch.w != cfg_.input_size ||
        batch.c != cfg_.input_channels) {
        throw ShapeError("forward: batch " + batch.shape_str() + " does not match input size " +
                         std::to_string(cfg_.input_size) + "x" +
                         std::to_string(cfg_.input_size) + "x" +
                         std::to_string(cfg_.input_channels));
    }
    ForwardTrace trace;
    Tensor4 x = batch;
    center_input(x);
    std::size_t conv_idx = 0;
    std::vector<std::uint8_t> mask;
    for (const auto& l : cfg_.layers) {
        switch (l.kind) {
            case LayerSpec::Kind::Conv: {
                const auto& p = convs_[conv_idx++];
                x = nn::conv2d_forward(x, p.kernels.value, p.bias.value, l.stride, l.padding);
                break;
            }
            case LayerSpec::Kind::Relu:
                x = nn::relu_forward(x);
                break;
            case LayerSpec::Kind::MaxPool2x2:
                x = nn::maxpool2x2_forward(x);
                break;
            case LayerSpec::Kind::Gap:
                trace.feature_maps = x;
                x = nn::gap_forward(x);
                trace.gap_vector = x;
                break;
            case LayerSpec::Kind::Dropout:
                x = nn::dropout_forward(x, l.p, mode, dropout_rng_, mask);
                break;
            case LayerSpec::Kind::Fc:
                x = nn::fc_forward(x, fc_.value);
                break;
        }
    }
    trace.logits = x;
    trace.probs = nn::softmax_batch(x);
    return trace;
}

double Network::train_batch(const Tensor4& batch, const std::vector<int>& labels,
                            const Hyperparams& hp) {
    const std::size_t L = cfg_.layers.size();
    std::vector<Tensor4> inputs(L);
    std::vector<std::vector<std::uint8_t>> masks(L);
    int gap_h = 0, gap_w = 0;

    Tensor4 x = batch;
    center_input(x);
    std::size_t conv_idx = 0;
    for (std::size_t i = 0; i < L; ++i) {
        const auto& l = cfg_.layers[i];
        inputs[i] = x;
        switch (l.kind) {
            case LayerSpec::Kind::Conv: {
                const auto& p = convs_[conv_idx++];
                x = nn::conv2d_forward(x, p.kernels.value, p.bias.value, l.stride, l.padding);
                break;
            }
            case LayerSpec::Kind::Relu:
                x = nn::relu_forward(x);
                break;
            case LayerSpec::Kind::MaxPool2x2:
                x = nn::maxpool2x2_forward(x);
                break;
            case LayerSpec::Kind::Gap:
                gap_h = x.h;
                gap_w = x.w;
                x = nn::gap_forward(x);
                break;
            case LayerSpec::Kind::Dropout:
                x = nn::dropout_forward(x, l.p, nn::Mode::Train, dropout_rng_, masks[i]);
                break;
            case LayerSpec::Kind::Fc:
                x = nn::fc_forward(x, fc_.value);
                break;
        }
    }
    const Tensor4 probs = nn::softmax_batch(x);
    const double loss = nn::cross_entropy(probs, labels);

    Tensor4 grad = nn::softmax_ce_grad(probs, labels);
    for (std::size_t ri = L; ri-- > 0;) {
        const auto& l = cfg_.layers[ri];
        switch (l.kind) {
            case LayerSpec::Kind::Conv: {
                auto& p = convs_[--conv_idx];
                auto g = nn::conv2d_backward(grad, inputs[ri], p.kernels.value, l.stride,
                                             l.padding);
                for (std::size_t j = 0; j < p.kernels.grad.data.size(); ++j)
                    p.kernels.grad.data[j] += g.kernels.data[j];
                for (std::size_t j = 0; j < p.bias.grad.size(); ++j)
                    p.bias.grad[j] += g.bias[j];
                grad = std::move(g.input);
                break;
            }
            case LayerSpec::Kind::Relu:
                grad = nn::relu_backward(grad, inputs[ri]);
                break;
            case LayerSpec::Kind::MaxPool2x2:
                grad = nn::maxpool2x2_backward(grad, inputs[ri]);
                break;
            case LayerSpec::Kind::Gap:
                grad = nn::gap_backward(grad, gap_h, gap_w);
                break;
            case LayerSpec::Kind::Dropout:
                grad = nn::dropout_backward(grad, l.p, masks[ri]);
                break;
            case LayerSpec::Kind::Fc: {
                auto g = nn::fc_backward(grad, inputs[ri], fc_.value);
                for (std::size_t j = 0; j < fc_.grad.data.size(); ++j)
                    fc_.grad.data[j] += g.weights.data[j];
                grad = std::move(g.input);
                break;
            }
        }
    }

    for (auto& p : convs_) {
        nn::sgd_step(p.kernels, hp.lr, hp.momentum, hp.weight_decay);
        nn::sgd_step(p.bias, hp.lr, hp.momentum, hp.weight_decay);
    }
    nn::sgd_step(fc_, hp.lr, hp.momentum, hp.weight_decay);
    return loss;
}

std::vector<double> Network::train(const Dataset& ds, const Hyperparams& hp) {
    const int N = ds.images.n;
    if (N == 0) throw UsageError("train: dataset is empty");
    if (static_cast<int>(ds.labels.size()) != N)
        throw UsageError("train: label count does not match image count");
    if (ds.images.h != cfg_.input_size || ds.images.w != cfg_.input_size)
        throw ShapeError("train: images " + ds.images.shape_str() +
                         " do not match network input size");

    std::mt19937 shuffle_rng(hp.seed);
    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> history;
    history.reserve(hp.epochs);
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        int batches = 0;
        for (int start = 0; start < N; start += hp.batch_size) {
            const int bs = std::min(hp.batch_size, N - start);
            Tensor4 batch(bs, ds.images.c, ds.images.h, ds.images.w);
            std::vector<int> labels(bs);
            const std::size_t img_elems =
                static_cast<std::size_t>(ds.images.c) * ds.images.h * ds.images.w;
            for (int b = 0; b < bs; ++b) {
                const int src = order[start + b];
                std::copy_n(ds.images.data.begin() + src * img_elems, img_elems,
                            batch.data.begin() + b * img_elems);
                labels[b] = ds.labels[src];
            }
            epoch_loss += train_batch(batch, labels, hp);
            ++batches;
        }
        history.push_back(epoch_loss / batches);
    }
    return history;
}

namespace {

constexpr char kMagic[6] = {'L', 'C', 'A', 'M', 'W', '1'};

void write_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("weight file truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_floats(std::ofstream& out, const float* data, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, &data[i], 4);
        write_u32(out, bits);
    }
}

void read_floats(std::ifstream& in, float* data, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = read_u32(in);
        std::memcpy(&data[i], &bits, 4);
    }
}

void write_param(std::ofstream& out, const Tensor4& t) {
    write_u32(out, static_cast<std::uint32_t>(t.n));
    write_u32(out, static_cast<std::uint32_t>(t.c));
    write_u32(out, static_cast<std::uint32_t>(t.h));
    write_u32(out, static_cast<std::uint32_t>(t.w));
    write_floats(out, t.data.data(), t.data.size());
}

Tensor4 read_param(std::ifstream& in) {
    const int n = static_cast<int>(read_u32(in));
    const int c = static_cast<int>(read_u32(in));
    const int h = static_cast<int>(read_u32(in));
    const int w = static_cast<int>(read_u32(in));
    Tensor4 t(n, c, h, w);
    read_floats(in, t.data.data(), t.data.size());
    return t;
}

}  // namespace

void Network::save_weights(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, static_cast<std::uint32_t>(convs_.size() * 2 + 1));
    for (const auto& p : convs_) {
        write_param(out, p.kernels.value);
        Tensor4 bias(1, static_cast<int>(p.bias.value.size()), 1, 1);
        std::copy(p.bias.value.begin(), p.bias.value.end(), bias.data.begin());
        write_param(out, bias);
    }
    write_param(out, fc_.value);
    if (!out) throw FormatError("failed to write weight file '" + path + "'");
}

Network Network::load_weights(const std::string& path, NetworkConfig cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open weight file '" + path + "'");
    char magic[6];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw FormatError("'" + path + "' is not a LCAMW1 weight file");

    Network net(std::move(cfg));
    const std::uint32_t count = read_u32(in);
    const std::uint32_t expected = static_cast<std::uint32_t>(net.convs_.size() * 2 + 1);
    if (count != expected)
        throw FormatError("weight file holds " + std::to_string(count) +
                          " parameters, config expects " + std::to_string(expected));
    for (auto& p : net.convs_) {
        Tensor4 kernels = read_param(in);
        if (!kernels.same_shape(p.kernels.value))
            throw FormatError("weight file kernel shape " + kernels.shape_str() +
                              " does not match config shape " +
                              p.kernels.value.shape_str());
        p.kernels.value = std::move(kernels);
        Tensor4 bias = read_param(in);
        if (bias.data.size() != p.bias.value.size())
            throw FormatError("weight file bias length " + std::to_string(bias.data.size()) +
                              " does not match config length " +
                              std::to_string(p.bias.value.size()));
        std::copy(bias.data.begin(), bias.data.end(), p.bias.value.begin());
    }
    Tensor4 fcw = read_param(in);
    if (!fcw.same_shape(net.fc_.value))
        throw FormatError("weight file fc shape " + fcw.shape_str() +
                          " does not match config shape " + net.fc_.value.shape_str());
    net.fc_.value = std::move(fcw);
    return net;
}

void Network::copy_weights_from(const Network& other) {
    if (convs_.size() != other.convs_.size() ||
        !fc_.value.same_shape(other.fc_.value))
        throw UsageError("copy_weights_from: architectures differ");
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        if (!convs_[i].kernels.value.same_shape(other.convs_[i].kernels.value))
            throw UsageError("copy_weights_from: conv shapes differ");
        convs_[i].kernels.value = other.convs_[i].kernels.value;
        convs_[i].bias.value = other.convs_[i].bias.value;
    }
    fc_.value = other.fc_.value;
}

}  // namespace lesioncam
