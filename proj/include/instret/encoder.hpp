#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "instret/dsp.hpp"
#include "instret/nn.hpp"

namespace instret {

// Convolutional encoder: conv stages (3x3, stride 1, same padding, ReLU,
// 2x2 max-pool), global mean pooling over time-frequency, a fully-connected
// trunk, then the output layer. The single encoder appends a ReLU and a
// classifier head; its post-ReLU activation is the instrument embedding. The
// multi encoder's output layer is slots x embed_dim, reshaped to one
// embedding per row.
struct EncoderConfig {
    std::vector<int> conv_channels = {8, 16, 32};
    int fc_width = 128;
    int embed_dim = 1024;  // D
    int slots = 0;         // M; 0 marks a single encoder
    int input_frames = 155;
    int input_bins = 64;

    static EncoderConfig small_preset();
    static EncoderConfig large_preset();
    static EncoderConfig preset(const std::string& name);

    void validate() const;
    bool is_multi() const { return slots > 0; }
    int output_width() const { return is_multi() ? slots * embed_dim : embed_dim; }
    // spatial size after the pooling pyramid
    std::pair<int, int> conv_output_hw() const;
    uint64_t hash() const;
};

struct EncoderParams {
    EncoderConfig config;
    struct Stage {
        nn::Tensor w;  // [out, in, 3, 3]
        nn::Tensor b;  // [out]
    };
    std::vector<Stage> stages;
    nn::Tensor trunk_w, trunk_b;  // [fc_width, last_channels], [fc_width]
    nn::Tensor out_w, out_b;      // [output_width, fc_width], [output_width]

    // ordered traversal over every tensor; drives the optimizer, checkpoints
    // and gradient checks
    template <class F>
    void visit(F&& f) {
        for (size_t s = 0; s < stages.size(); ++s) {
            f("stage" + std::to_string(s) + ".w", stages[s].w);
            f("stage" + std::to_string(s) + ".b", stages[s].b);
        }
        f("trunk.w", trunk_w);
        f("trunk.b", trunk_b);
        f("out.w", out_w);
        f("out.b", out_b);
    }
    std::vector<nn::Tensor*> tensors();
    std::vector<const nn::Tensor*> tensors() const;
};

struct ClassifierHead {
    nn::Tensor w;  // [classes, embed_dim]
    nn::Tensor b;  // [classes]
    int classes() const { return w.shape.empty() ? 0 : w.dim(0); }
};

EncoderParams init_encoder(const EncoderConfig& config, Rng& rng);
ClassifierHead init_head(int classes, int embed_dim, Rng& rng);
EncoderParams zero_like(const EncoderParams& params);

// cached activations from one forward pass, consumed by encoder_backward
struct Tape {
    uint64_t config_hash = 0;
    nn::Tensor input;  // [1, frames, bins], standardized
    struct StageTape {
        nn::Tensor conv_in;
        nn::Tensor conv_out;  // pre-ReLU
        nn::Tensor relu_out;
        std::vector<int> pool_argmax;
        nn::Tensor pool_out;
    };
    std::vector<StageTape> stages;
    nn::Tensor pooled;     // [channels]
    nn::Tensor trunk_pre;  // [fc_width]
    nn::Tensor trunk_act;  // [fc_width]
    nn::Tensor out_pre;    // [output_width]
};

// per-clip standardized input tensor; raises ShapeMismatch if the mel does
// not match the encoder's expected input geometry
nn::Tensor encoder_input(const EncoderConfig& config, const Matrix& mel);

// trunk + output layer; fills tape when given
nn::Tensor encoder_raw_output(const EncoderParams& params, const Matrix& mel, Tape* tape);

struct SingleForward {
    nn::Tensor logits;
    std::vector<double> embedding;  // post-ReLU penultimate activation
};

SingleForward forward_single(const EncoderParams& params, const ClassifierHead& head,
                             const Matrix& mel, Tape* tape = nullptr);

// embedding only (library building, verification, frozen targets)
std::vector<double> single_embedding(const EncoderParams& params, const Matrix& mel);

// M x D matrix of output embeddings
Matrix forward_multi(const EncoderParams& params, const Matrix& mel, int slots);

// gradients of every encoder parameter given d loss / d out_pre
EncoderParams encoder_backward(const EncoderParams& params, const Tape& tape,
                               const nn::Tensor& out_grad);

// nudges an (exactly) zero embedding off the origin so cosine terms stay
// defined during training and retrieval
void guard_nonzero(std::vector<double>& v);

// ---- checkpoints: float32 tensors + JSON index ----

struct Checkpoint {
    EncoderParams params;
    std::optional<ClassifierHead> head;
    uint64_t source_hash = 0;  // hash of the file this was loaded from
};

void save_checkpoint(const std::filesystem::path& path, const EncoderParams& params,
                     const ClassifierHead* head);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace instret
