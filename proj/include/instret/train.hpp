#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "instret/encoder.hpp"
#include "instret/pit.hpp"

namespace instret {

struct LabeledDataset {
    std::vector<Matrix> mels;  // one log-mel matrix per clip
    std::vector<int> labels;   // class index per clip
    int num_classes = 0;
};

struct EpochMetrics {
    int epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;  // training accuracy for single, unused for multi
};

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& rows);

struct TrainSingleConfig {
    int epochs = 10;
    int batch_size = 32;    // paper setting
    double lr = 0.001;      // paper setting
    uint64_t seed = 0;
    int workers = 1;        // >1 trades bit-reproducibility-across-worker-counts for speed
};

struct TrainSingleResult {
    EncoderParams params;
    ClassifierHead head;
    std::vector<EpochMetrics> metrics;
    double final_accuracy = 0.0;  // over the full training set after the last epoch
};

TrainSingleResult train_single(const LabeledDataset& dataset, const EncoderConfig& encoder_config,
                               const TrainSingleConfig& config);

// one multi-encoder training example: a mixture and its frozen target
// embeddings (N x D rows, one per stem)
struct MultiExample {
    Matrix mixture_mel;
    Matrix targets;
};

// deterministic sampler: draw index -> example; backs both pre-rendered
// manifests and on-the-fly random mixing
using MixSampler = std::function<MultiExample(uint64_t draw_index)>;

struct TrainMultiConfig {
    int epochs = 10;
    int batches_per_epoch = 20;
    int batch_size = 128;  // paper setting
    double lr = 0.001;     // paper setting
    uint64_t seed = 0;
    int workers = 1;
};

struct TrainMultiResult {
    EncoderParams params;
    std::vector<EpochMetrics> metrics;  // mean PIT loss per epoch
};

TrainMultiResult train_multi(const MixSampler& sampler, const EncoderConfig& encoder_config,
                             const TrainMultiConfig& config);

// Wraps a frozen single encoder as a target-embedding provider; raises
// FrozenEncoderMissing when given a multi checkpoint.
std::function<std::vector<double>(const Matrix&)> frozen_embedder(const EncoderParams& single);

}  // namespace instret
