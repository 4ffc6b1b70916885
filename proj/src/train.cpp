#include "instret/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "instret/util.hpp"

namespace instret {

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& rows) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), Err::IoError, "cannot write " + path.string());
    out << "epoch,loss,accuracy\n";
    for (const auto& r : rows) out << r.epoch << "," << r.loss << "," << r.accuracy << "\n";
}

namespace {

struct FullGrads {
    EncoderParams enc;
    nn::Tensor head_w, head_b;
    double loss = 0.0;
    int correct = 0;

    static FullGrads zero(const EncoderParams& params, const ClassifierHead& head) {
        FullGrads g;
        g.enc = zero_like(params);
        g.head_w = nn::Tensor(head.w.shape);
        g.head_b = nn::Tensor(head.b.shape);
        return g;
    }

    void add(const FullGrads& other) {
        auto mine = enc.tensors();
        auto theirs = other.enc.tensors();
        for (size_t i = 0; i < mine.size(); ++i)
            for (size_t k = 0; k < mine[i]->size(); ++k) mine[i]->data[k] += theirs[i]->data[k];
        for (size_t k = 0; k < head_w.size(); ++k) head_w.data[k] += other.head_w.data[k];
        for (size_t k = 0; k < head_b.size(); ++k) head_b.data[k] += other.head_b.data[k];
        loss += other.loss;
        correct += other.correct;
    }

    void scale(double s) {
        for (nn::Tensor* t : enc.tensors())
            for (double& v : t->data) v *= s;
        for (double& v : head_w.data) v *= s;
        for (double& v : head_b.data) v *= s;
    }
};

int argmax(const nn::Tensor& t) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(t.size()); ++i)
        if (t.data[static_cast<size_t>(i)] > t.data[static_cast<size_t>(best)]) best = i;
    return best;
}

// forward + backward for one labeled clip, accumulated into `acc`
void single_sample_pass(const EncoderParams& params, const ClassifierHead& head, const Matrix& mel,
                        int label, FullGrads& acc) {
    Tape tape;
    SingleForward fwd = forward_single(params, head, mel, &tape);
    nn::CrossEntropyResult ce = nn::cross_entropy_loss(fwd.logits, label);
    acc.loss += ce.loss;
    if (argmax(fwd.logits) == label) acc.correct += 1;

    nn::Tensor emb_t({params.config.embed_dim});
    emb_t.data = fwd.embedding;
    nn::Tensor g_emb, g_head_w, g_head_b;
    nn::affine_backward(emb_t, head.w, ce.grad, g_emb, g_head_w, g_head_b);
    for (size_t k = 0; k < acc.head_w.size(); ++k) acc.head_w.data[k] += g_head_w.data[k];
    for (size_t k = 0; k < acc.head_b.size(); ++k) acc.head_b.data[k] += g_head_b.data[k];

    nn::Tensor g_out_pre;
    nn::relu_backward(tape.out_pre, g_emb, g_out_pre);
    EncoderParams enc_grads = encoder_backward(params, tape, g_out_pre);
    auto mine = acc.enc.tensors();
    auto theirs = enc_grads.tensors();
    for (size_t i = 0; i < mine.size(); ++i)
        for (size_t k = 0; k < mine[i]->size(); ++k) mine[i]->data[k] += theirs[i]->data[k];
}

}  // namespace

TrainSingleResult train_single(const LabeledDataset& dataset, const EncoderConfig& encoder_config,
                               const TrainSingleConfig& config) {
    require(!dataset.mels.empty(), Err::EmptyDataset, "no training clips");
    require(dataset.mels.size() == dataset.labels.size(), Err::LengthMismatch,
            "clip/label count mismatch");
    require(dataset.num_classes >= 2, Err::BadConfig, "need at least two classes");
    for (int label : dataset.labels)
        require(label >= 0 && label < dataset.num_classes, Err::LabelOutOfRange,
                "label outside [0, num_classes)");
    require(!encoder_config.is_multi(), Err::BadConfig,
            "train_single needs a single-encoder config");

    Rng rng(config.seed);
    TrainSingleResult result;
    result.params = init_encoder(encoder_config, rng);
    result.head = init_head(dataset.num_classes, encoder_config.embed_dim, rng);

    nn::AdamState adam;
    adam.lr = config.lr;

    int n = static_cast<int>(dataset.mels.size());
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    int workers = std::max(1, config.workers);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        int epoch_correct = 0;

        for (int start = 0; start < n; start += config.batch_size) {
            int count = std::min(config.batch_size, n - start);
            std::vector<FullGrads> partial;
            int lanes = std::min(workers, count);
            for (int w = 0; w < lanes; ++w)
                partial.push_back(FullGrads::zero(result.params, result.head));

            int chunk = (count + lanes - 1) / lanes;
            parallel_for(lanes, lanes, [&](int lane) {
                int lo = lane * chunk;
                int hi = std::min(count, lo + chunk);
                for (int i = lo; i < hi; ++i) {
                    int idx = order[static_cast<size_t>(start + i)];
                    single_sample_pass(result.params, result.head,
                                       dataset.mels[static_cast<size_t>(idx)],
                                       dataset.labels[static_cast<size_t>(idx)],
                                       partial[static_cast<size_t>(lane)]);
                }
            });
            for (int w = 1; w < lanes; ++w) partial[0].add(partial[static_cast<size_t>(w)]);
            FullGrads& batch = partial[0];
            epoch_loss += batch.loss;
            epoch_correct += batch.correct;
            batch.scale(1.0 / count);

            std::vector<nn::Tensor*> tensors = result.params.tensors();
            tensors.push_back(&result.head.w);
            tensors.push_back(&result.head.b);
            std::vector<const nn::Tensor*> grads;
            for (nn::Tensor* t : batch.enc.tensors()) grads.push_back(t);
            grads.push_back(&batch.head_w);
            grads.push_back(&batch.head_b);
            nn::adam_step(tensors, grads, adam);
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.loss = epoch_loss / n;
        m.accuracy = static_cast<double>(epoch_correct) / n;
        result.metrics.push_back(m);
    }

    // final accuracy over the whole set with the trained weights
    std::vector<int> hits(static_cast<size_t>(workers), 0);
    parallel_for(workers, workers, [&](int lane) {
        int chunk = (n + workers - 1) / workers;
        int lo = lane * chunk;
        int hi = std::min(n, lo + chunk);
        for (int i = lo; i < hi; ++i) {
            SingleForward fwd = forward_single(result.params, result.head,
                                               dataset.mels[static_cast<size_t>(i)]);
            if (argmax(fwd.logits) == dataset.labels[static_cast<size_t>(i)])
                hits[static_cast<size_t>(lane)] += 1;
        }
    });
    int total_hits = 0;
    for (int h : hits) total_hits += h;
    result.final_accuracy = static_cast<double>(total_hits) / n;
    return result;
}

TrainMultiResult train_multi(const MixSampler& sampler, const EncoderConfig& encoder_config,
                             const TrainMultiConfig& config) {
    require(static_cast<bool>(sampler), Err::BadConfig, "mix sampler not set");
    require(encoder_config.is_multi(), Err::BadConfig, "train_multi needs a multi-encoder config");
    require(config.batches_per_epoch >= 1 && config.batch_size >= 1, Err::BadConfig,
            "bad multi training schedule");

    Rng rng(config.seed);
    TrainMultiResult result;
    result.params = init_encoder(encoder_config, rng);

    nn::AdamState adam;
    adam.lr = config.lr;

    int slots = encoder_config.slots;
    int dim = encoder_config.embed_dim;
    int workers = std::max(1, config.workers);
    uint64_t draw_counter = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double epoch_loss = 0.0;
        int epoch_examples = 0;

        for (int b = 0; b < config.batches_per_epoch; ++b) {
            int count = config.batch_size;
            int lanes = std::min(workers, count);
            std::vector<EncoderParams> partial;
            std::vector<double> lane_loss(static_cast<size_t>(lanes), 0.0);
            for (int w = 0; w < lanes; ++w) partial.push_back(zero_like(result.params));

            uint64_t base = draw_counter;
            draw_counter += static_cast<uint64_t>(count);

            int chunk = (count + lanes - 1) / lanes;
            parallel_for(lanes, lanes, [&](int lane) {
                int lo = lane * chunk;
                int hi = std::min(count, lo + chunk);
                for (int i = lo; i < hi; ++i) {
                    MultiExample ex = sampler(base + static_cast<uint64_t>(i));
                    Tape tape;
                    nn::Tensor out_pre = encoder_raw_output(result.params, ex.mixture_mel, &tape);

                    Matrix outputs(slots, dim);
                    outputs.values.assign(out_pre.data.begin(), out_pre.data.end());
                    // training-time epsilon guard for exactly-zero rows
                    for (int j = 0; j < slots; ++j) {
                        bool all_zero = true;
                        for (int k = 0; k < dim; ++k)
                            if (outputs.at(j, k) != 0.0) {
                                all_zero = false;
                                break;
                            }
                        if (all_zero) outputs.at(j, 0) = 1e-9;
                    }

                    PitLossResult pit = pit_loss(ex.targets, outputs);
                    lane_loss[static_cast<size_t>(lane)] += pit.loss;

                    nn::Tensor upstream({slots * dim});
                    upstream.data = pit.output_grads.values;
                    EncoderParams grads = encoder_backward(result.params, tape, upstream);
                    auto mine = partial[static_cast<size_t>(lane)].tensors();
                    auto theirs = grads.tensors();
                    for (size_t t = 0; t < mine.size(); ++t)
                        for (size_t k = 0; k < mine[t]->size(); ++k)
                            mine[t]->data[k] += theirs[t]->data[k];
                }
            });

            for (int w = 1; w < lanes; ++w) {
                auto dst = partial[0].tensors();
                auto src = partial[static_cast<size_t>(w)].tensors();
                for (size_t t = 0; t < dst.size(); ++t)
                    for (size_t k = 0; k < dst[t]->size(); ++k) dst[t]->data[k] += src[t]->data[k];
                lane_loss[0] += lane_loss[static_cast<size_t>(w)];
            }
            epoch_loss += lane_loss[0];
            epoch_examples += count;

            for (nn::Tensor* t : partial[0].tensors())
                for (double& v : t->data) v /= count;

            std::vector<nn::Tensor*> tensors = result.params.tensors();
            std::vector<const nn::Tensor*> grads;
            for (nn::Tensor* t : partial[0].tensors()) grads.push_back(t);
            nn::adam_step(tensors, grads, adam);
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.loss = epoch_loss / epoch_examples;
        result.metrics.push_back(m);
    }
    return result;
}

std::function<std::vector<double>(const Matrix&)> frozen_embedder(const EncoderParams& single) {
    require(!single.config.is_multi(), Err::FrozenEncoderMissing,
            "target provider must be a trained single encoder");
    EncoderParams frozen = single;  // value copy: training can never mutate it
    return [frozen](const Matrix& mel) { return single_embedding(frozen, mel); };
}

}  // namespace instret
