// Acceptance suite: one pass/fail line per criterion. Returns the number of
// failed criteria. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "instret/dataset.hpp"
#include "instret/metrics.hpp"
#include "instret/midi.hpp"
#include "instret/train.hpp"
#include "instret/util.hpp"

using namespace instret;

namespace {

constexpr uint64_t kToySeed = 20240917;
constexpr int kWorkers = 2;

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

Matrix random_rows(Rng& rng, int rows, int cols) {
    Matrix m(rows, cols);
    for (double& v : m.values) v = rng.uniform(-1.0, 1.0);
    for (int r = 0; r < rows; ++r) {
        double n = 0.0;
        for (int c = 0; c < cols; ++c) n += m.at(r, c) * m.at(r, c);
        if (std::sqrt(n) < 0.1) m.at(r, 0) += 1.0;
    }
    return m;
}

// ---------- criterion 1 ----------
Check criterion_assignment_oracle() {
    Check check;
    Rng rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
        int m = rng.uniform_int(1, 7);
        int n = rng.uniform_int(1, std::min(m, 5));
        CostMatrix cost;
        cost.values = Matrix(n, m);
        for (double& v : cost.values.values) v = rng.uniform(0.0, 2.0);
        double fast = assignment_cost(cost, hungarian(cost));
        double exact = assignment_cost(cost, brute_force_assign(cost));
        check.expect(std::abs(fast - exact) <= 1e-9,
                     "trial " + std::to_string(trial) + ": totals differ by " +
                         std::to_string(std::abs(fast - exact)));
        if (!check.ok) break;
    }
    return check;
}

// ---------- criterion 2 ----------
Check criterion_pit_invariance() {
    Check check;
    Rng rng(202);
    for (int trial = 0; trial < 500; ++trial) {
        int m = rng.uniform_int(2, 7);
        int n = rng.uniform_int(1, m);
        int d = rng.uniform_int(4, 12);
        Matrix targets = random_rows(rng, n, d);
        Matrix outputs = random_rows(rng, m, d);
        double base = pit_loss(targets, outputs).loss;
        check.expect(base >= 0.0 && base <= 2.0 * n + 1e-12, "loss outside [0, 2N]");

        std::vector<int> tperm(static_cast<size_t>(n));
        std::iota(tperm.begin(), tperm.end(), 0);
        rng.shuffle(tperm);
        Matrix tshuf(n, d);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < d; ++k) tshuf.at(i, k) = targets.at(tperm[static_cast<size_t>(i)], k);
        check.expect(std::abs(pit_loss(tshuf, outputs).loss - base) <= 1e-9,
                     "target shuffle changed the loss");

        std::vector<int> operm(static_cast<size_t>(m));
        std::iota(operm.begin(), operm.end(), 0);
        rng.shuffle(operm);
        Matrix oshuf(m, d);
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < d; ++k) oshuf.at(j, k) = outputs.at(operm[static_cast<size_t>(j)], k);
        check.expect(std::abs(pit_loss(targets, oshuf).loss - base) <= 1e-9,
                     "output shuffle changed the loss");

        Matrix scaled = outputs;
        for (int j = 0; j < m; ++j) {
            double c = rng.uniform(0.05, 20.0);
            for (int k = 0; k < d; ++k) scaled.at(j, k) *= c;
        }
        check.expect(std::abs(pit_loss(targets, scaled).loss - base) <= 1e-9,
                     "positive row scaling changed the loss");
        if (!check.ok) break;
    }
    return check;
}

// ---------- criterion 3 ----------
double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

double grad_rel_err(double analytic, double numeric) {
    double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
}

Check criterion_gradient_checks() {
    Check check;
    const double h = 1e-4;
    Rng rng(303);

    // pit_loss wrt output entries, excluding assignment-switch points
    {
        int checked = 0;
        int guard = 0;
        while (checked < 100 && guard++ < 2000) {
            int m = rng.uniform_int(2, 5);
            int n = rng.uniform_int(1, m);
            int d = 6;
            Matrix targets = random_rows(rng, n, d);
            Matrix outputs = random_rows(rng, m, d);
            PitLossResult base = pit_loss(targets, outputs);
            int j = rng.uniform_int(0, m - 1);
            int k = rng.uniform_int(0, d - 1);
            Matrix plus = outputs, minus = outputs;
            plus.at(j, k) += h;
            minus.at(j, k) -= h;
            PitLossResult rp = pit_loss(targets, plus);
            PitLossResult rm = pit_loss(targets, minus);
            if (rp.assignment.mapping != base.assignment.mapping ||
                rm.assignment.mapping != base.assignment.mapping)
                continue;  // assignment-switch point
            double numeric = (rp.loss - rm.loss) / (2.0 * h);
            check.expect(grad_rel_err(base.output_grads.at(j, k), numeric) < 1e-4,
                         "pit grad mismatch at checked point " + std::to_string(checked));
            ++checked;
        }
        check.expect(checked == 100, "could not collect 100 stable pit points");
    }

    // encoder layers through the full net: perturb one parameter per probe
    {
        EncoderConfig c;
        c.conv_channels = {3, 4};
        c.fc_width = 10;
        c.embed_dim = 8;
        c.input_frames = 12;
        c.input_bins = 10;
        EncoderParams params = init_encoder(c, rng);
        Matrix mel(c.input_frames, c.input_bins);
        for (double& v : mel.values) v = rng.uniform(-2.0, 2.0);
        nn::Tensor upstream({c.output_width()});
        for (double& v : upstream.data) v = rng.uniform(-1.0, 1.0);

        Tape tape;
        (void)encoder_raw_output(params, mel, &tape);
        EncoderParams grads = encoder_backward(params, tape, upstream);

        auto loss_now = [&]() {
            nn::Tensor out = encoder_raw_output(params, mel, nullptr);
            double acc = 0.0;
            for (size_t i = 0; i < out.size(); ++i) acc += out.data[i] * upstream.data[i];
            return acc;
        };

        auto tensors = params.tensors();
        auto gtensors = grads.tensors();
        // 100 random points per layer tensor group: conv stages, trunk, out
        for (size_t t = 0; t < tensors.size(); ++t) {
            for (int probe = 0; probe < 100; ++probe) {
                size_t i = static_cast<size_t>(
                    rng.uniform_int(0, static_cast<int>(tensors[t]->size()) - 1));
                double saved = tensors[t]->data[i];
                tensors[t]->data[i] = saved + h;
                double up = loss_now();
                tensors[t]->data[i] = saved - h;
                double down = loss_now();
                tensors[t]->data[i] = saved;
                double numeric = (up - down) / (2.0 * h);
                check.expect(grad_rel_err(gtensors[t]->data[i], numeric) < 1e-4,
                             "encoder grad mismatch in tensor " + std::to_string(t));
            }
        }
    }

    // isolated layer primitives: relu, maxpool, meanpool, affine, conv
    {
        nn::Tensor x({2, 6, 6});
        for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
        nn::Tensor w({3, 2, 3, 3});
        for (double& v : w.data) v = rng.uniform(-0.7, 0.7);
        nn::Tensor b({3});
        nn::Tensor up({3, 6, 6});
        for (double& v : up.data) v = rng.uniform(-1.0, 1.0);
        nn::Tensor y, gx, gw, gb;
        nn::conv2d_forward(x, w, b, y);
        nn::conv2d_backward(x, w, up, gx, gw, gb);
        auto conv_loss = [&](const nn::Tensor& xx, const nn::Tensor& ww, const nn::Tensor& bb) {
            nn::Tensor yy;
            nn::conv2d_forward(xx, ww, bb, yy);
            double acc = 0.0;
            for (size_t i = 0; i < yy.size(); ++i) acc += yy.data[i] * up.data[i];
            return acc;
        };
        for (int probe = 0; probe < 100; ++probe) {
            size_t i = static_cast<size_t>(rng.uniform_int(0, static_cast<int>(x.size()) - 1));
            nn::Tensor xp = x, xm = x;
            xp.data[i] += h;
            xm.data[i] -= h;
            double numeric = (conv_loss(xp, w, b) - conv_loss(xm, w, b)) / (2 * h);
            check.expect(grad_rel_err(gx.data[i], numeric) < 1e-4, "conv gx mismatch");
        }
        for (int probe = 0; probe < 100; ++probe) {
            size_t i = static_cast<size_t>(rng.uniform_int(0, static_cast<int>(w.size()) - 1));
            nn::Tensor wp = w, wm = w;
            wp.data[i] += h;
            wm.data[i] -= h;
            double numeric = (conv_loss(x, wp, b) - conv_loss(x, wm, b)) / (2 * h);
            check.expect(grad_rel_err(gw.data[i], numeric) < 1e-4, "conv gw mismatch");
        }
    }
    return check;
}

// ---------- toy pipeline shared by criteria 4 and 5 ----------
struct ToyContext {
    MelConfig mel;
    std::vector<InstrumentSpec> train_specs, valid_specs;
    ClipPool pool;                    // train clips (audio kept for mixing)
    LabeledDataset train_data;        // mels + labels aligned with pool entries
    std::vector<std::string> label_ids;
    TrainSingleResult single;
    bool built = false;
    bool trained = false;
};

ToyContext& toy() {
    static ToyContext ctx;
    return ctx;
}

void build_toy_context() {
    ToyContext& ctx = toy();
    if (ctx.built) return;
    ctx.built = true;
    ctx.mel.hop = 1024;  // 78-frame inputs keep the toy runs well inside budget

    std::vector<Family> families = {Family::Guitar, Family::Organ, Family::Flute, Family::String};
    Rng rng(kToySeed);
    ctx.train_specs = make_instrument_bank(families, 32, "t", rng);
    ctx.valid_specs = make_instrument_bank(families, 8, "v", rng);

    const int clips_per = 10;
    struct Rendered {
        AudioClip clip;
        Matrix mel;
    };
    std::vector<Rendered> rendered(32 * clips_per);
    parallel_for(32 * clips_per, kWorkers, [&](int idx) {
        int inst = idx / clips_per;
        uint64_t seed = mix_seed(kToySeed, 7000 + static_cast<uint64_t>(idx));
        TrackScore track = track_for_family(ctx.train_specs[static_cast<size_t>(inst)].family, {},
                                            seed);
        rendered[static_cast<size_t>(idx)].clip =
            render_single(ctx.train_specs[static_cast<size_t>(inst)], track.events);
        rendered[static_cast<size_t>(idx)].mel =
            log_mel(rendered[static_cast<size_t>(idx)].clip, ctx.mel).values;
    });

    ctx.train_data.num_classes = 32;
    for (int idx = 0; idx < 32 * clips_per; ++idx) {
        int inst = idx / clips_per;
        const auto& spec = ctx.train_specs[static_cast<size_t>(inst)];
        ctx.pool.add(spec.id, spec.family, std::move(rendered[static_cast<size_t>(idx)].clip));
        ctx.train_data.mels.push_back(std::move(rendered[static_cast<size_t>(idx)].mel));
        ctx.train_data.labels.push_back(inst);
    }
    for (const auto& spec : ctx.train_specs) ctx.label_ids.push_back(spec.id);
}

void train_toy_single() {
    ToyContext& ctx = toy();
    if (ctx.trained) return;
    build_toy_context();

    EncoderConfig enc = EncoderConfig::small_preset();
    enc.conv_channels = {12, 24, 48};
    enc.embed_dim = 64;
    enc.input_frames = ctx.mel.frame_count(kClipSamples);
    enc.input_bins = ctx.mel.mel_bins;

    TrainSingleConfig tc;
    tc.epochs = 140;
    tc.batch_size = 32;
    tc.lr = 0.002;
    tc.seed = kToySeed + 1;
    tc.workers = kWorkers;

    ctx.single = train_single(ctx.train_data, enc, tc);
    for (const auto& m : ctx.single.metrics)
        if (m.epoch % 4 == 0 || m.epoch + 1 == static_cast<int>(ctx.single.metrics.size()))
            std::fprintf(stderr, "    epoch %d loss %.4f acc %.4f\n", m.epoch, m.loss, m.accuracy);
    ctx.trained = true;
}

Check criterion_toy_single() {
    Check check;
    double start = now_s();
    train_toy_single();
    ToyContext& ctx = toy();

    std::fprintf(stderr, "  toy single: final accuracy %.4f, last-epoch loss %.4f\n",
                 ctx.single.final_accuracy, ctx.single.metrics.back().loss);
    check.expect(ctx.single.final_accuracy >= 0.98,
                 "final training accuracy " + std::to_string(ctx.single.final_accuracy) +
                     " < 0.98");

    // verification EER over the 8 held-out instruments, 5/20/20 protocol
    const int clips_per_valid = 25;
    std::vector<std::vector<std::vector<double>>> embeddings(8);
    for (auto& v : embeddings) v.resize(clips_per_valid);
    parallel_for(8 * clips_per_valid, kWorkers, [&](int idx) {
        int inst = idx / clips_per_valid;
        int clip = idx % clips_per_valid;
        uint64_t seed = mix_seed(kToySeed, 90000 + static_cast<uint64_t>(idx));
        const auto& spec = toy().valid_specs[static_cast<size_t>(inst)];
        TrackScore track = track_for_family(spec.family, {}, seed);
        AudioClip audio = render_single(spec, track.events);
        embeddings[static_cast<size_t>(inst)][static_cast<size_t>(clip)] =
            single_embedding(toy().single.params, log_mel(audio, toy().mel).values);
    });

    std::vector<std::string> valid_ids;
    for (const auto& s : ctx.valid_specs) valid_ids.push_back(s.id);
    EerReport report = eer(make_verification_trials(valid_ids, embeddings, kToySeed + 2));
    std::fprintf(stderr, "  toy single: mean verification EER %.4f (%.0f s elapsed)\n",
                 report.mean_eer, now_s() - start);
    check.expect(report.mean_eer <= 0.15,
                 "verification EER " + std::to_string(report.mean_eer) + " > 0.15");
    check.expect(report.mean_eer < 0.5, "EER not better than the score-blind level");
    return check;
}

Check criterion_toy_multi() {
    Check check;
    double start = now_s();
    train_toy_single();
    ToyContext& ctx = toy();

    // frozen targets per pool clip
    std::vector<std::vector<double>> clip_embeddings(ctx.pool.entries.size());
    parallel_for(static_cast<int>(ctx.pool.entries.size()), kWorkers, [&](int i) {
        clip_embeddings[static_cast<size_t>(i)] = single_embedding(
            ctx.single.params,
            log_mel(ctx.pool.entries[static_cast<size_t>(i)].clip, ctx.mel).values);
    });

    EncoderConfig enc;
    enc.conv_channels = {8, 16};
    enc.fc_width = 96;
    enc.embed_dim = 64;
    enc.slots = 4;
    enc.input_frames = ctx.mel.frame_count(kClipSamples);
    enc.input_bins = ctx.mel.mel_bins;

    MixSampler sampler = [&](uint64_t draw) {
        RandomMix mix = random_mix(ctx.pool, mix_seed(kToySeed + 3, draw), 2, 4);
        MultiExample ex;
        ex.mixture_mel = log_mel(mix.mixture, ctx.mel).values;
        ex.targets = Matrix(static_cast<int>(mix.entry_indices.size()), enc.embed_dim);
        for (size_t n = 0; n < mix.entry_indices.size(); ++n)
            for (int d = 0; d < enc.embed_dim; ++d)
                ex.targets.at(static_cast<int>(n), d) =
                    clip_embeddings[static_cast<size_t>(mix.entry_indices[n])][static_cast<size_t>(d)];
        return ex;
    };

    TrainMultiConfig tc;
    tc.epochs = 10;
    tc.batches_per_epoch = 12;
    tc.batch_size = 128;
    tc.lr = 0.001;
    tc.seed = kToySeed + 4;
    tc.workers = kWorkers;
    TrainMultiResult multi = train_multi(sampler, enc, tc);
    std::fprintf(stderr, "  toy multi: pit loss %.4f -> %.4f (%.0f s elapsed)\n",
                 multi.metrics.front().loss, multi.metrics.back().loss, now_s() - start);
    check.expect(multi.metrics.back().loss <= 0.5 * multi.metrics.front().loss,
                 "PIT loss did not halve from the first epoch");

    // library: mean embedding over the first 3 clips of each train instrument
    std::vector<LibraryClips> lib_clips(32);
    for (int k = 0; k < 32; ++k) {
        lib_clips[static_cast<size_t>(k)].id = ctx.train_specs[static_cast<size_t>(k)].id;
        lib_clips[static_cast<size_t>(k)].family = ctx.train_specs[static_cast<size_t>(k)].family;
        for (int c = 0; c < 3; ++c) {
            int entry = ctx.pool.clips_by_instrument[static_cast<size_t>(k)][static_cast<size_t>(c)];
            lib_clips[static_cast<size_t>(k)].mels.push_back(
                log_mel(ctx.pool.entries[static_cast<size_t>(entry)].clip, ctx.mel).values);
        }
    }
    EmbeddingLibrary library = build_library(ctx.single.params, lib_clips, "toy");

    // 200 held-out queries from a fresh seed stream
    const int n_queries = 200;
    std::vector<IdSet> truths(n_queries), predictions(n_queries);
    std::vector<std::vector<double>> scores(n_queries);
    parallel_for(n_queries, kWorkers, [&](int q) {
        RandomMix mix = random_mix(ctx.pool, mix_seed(kToySeed + 5, static_cast<uint64_t>(q)), 2, 4);
        truths[static_cast<size_t>(q)] =
            IdSet(mix.instrument_ids.begin(), mix.instrument_ids.end());
        RetrievalResult r = query(multi.params, library, mix.mixture, ctx.mel);
        predictions[static_cast<size_t>(q)] = r.retrieved;
        scores[static_cast<size_t>(q)] = r.instrument_scores;
    });

    std::map<std::string, std::string> id_to_family;
    for (size_t k = 0; k < library.ids.size(); ++k)
        id_to_family[library.ids[k]] = family_name(library.families[k]);

    MetricReport model = retrieval_report(predictions, truths, scores, library.ids, id_to_family);
    MetricReport chance =
        chance_baseline(truths, library.ids, id_to_family, 4, kToySeed + 6, 10);

    std::fprintf(stderr,
                 "  toy multi: instrument F1 macro %.3f (chance %.3f), mAP macro %.3f "
                 "(chance %.3f), family F1 macro %.3f (%.0f s elapsed)\n",
                 model.instrument_f1.macro, chance.instrument_f1.macro,
                 model.instrument_map.macro, chance.instrument_map.macro,
                 model.family_f1.macro, now_s() - start);

    check.expect(model.instrument_f1.macro >= chance.instrument_f1.macro + 0.30,
                 "instrument F1 macro lead below 0.30");
    check.expect(model.instrument_map.macro >= chance.instrument_map.macro + 0.30,
                 "instrument mAP macro lead below 0.30");
    check.expect(model.family_f1.macro >= model.instrument_f1.macro,
                 "family F1 macro below instrument F1 macro");
    check.expect(model.family_f1.weighted >= model.instrument_f1.weighted,
                 "family F1 weighted below instrument F1 weighted");
    return check;
}

// ---------- criterion 6 ----------
Check criterion_retrieval_invariants() {
    Check check;
    Rng rng(606);
    const int dim = 16;
    for (int trial = 0; trial < 1000; ++trial) {
        int m = rng.uniform_int(1, 9);
        int k = rng.uniform_int(2, 24);
        EmbeddingLibrary lib;
        lib.vectors = random_rows(rng, k, dim);
        for (int i = 0; i < k; ++i) {
            lib.ids.push_back("inst_" + std::to_string(i));
            lib.families.push_back(all_families()[static_cast<size_t>(i % kFamilyCount)]);
        }
        Matrix outputs = random_rows(rng, m, dim);
        RetrievalResult base = retrieve(similarity_matrix(outputs, lib), lib.ids);
        check.expect(static_cast<int>(base.retrieved.size()) <= m, "|R| exceeded M");

        EmbeddingLibrary scaled = lib;
        for (int i = 0; i < k; ++i) {
            double c = rng.uniform(0.01, 50.0);
            for (int d = 0; d < dim; ++d) scaled.vectors.at(i, d) *= c;
        }
        RetrievalResult rescaled = retrieve(similarity_matrix(outputs, scaled), scaled.ids);
        check.expect(rescaled.retrieved == base.retrieved,
                     "positive library rescaling changed R");
        if (!check.ok) break;
    }

    // perfect-oracle embeddings: library vectors used as outputs -> F1 = 1
    {
        Rng orng(607);
        const int k = 20, m = 4;
        EmbeddingLibrary lib;
        lib.vectors = random_rows(orng, k, dim);
        std::map<std::string, std::string> id_to_family;
        for (int i = 0; i < k; ++i) {
            lib.ids.push_back("inst_" + std::to_string(i));
            lib.families.push_back(all_families()[static_cast<size_t>(i % kFamilyCount)]);
            id_to_family[lib.ids.back()] = family_name(lib.families.back());
        }
        std::vector<IdSet> truths, predictions;
        for (int q = 0; q < 200; ++q) {
            int n = orng.uniform_int(2, m);
            std::vector<int> chosen = orng.sample_without_replacement(k, n);
            IdSet truth;
            Matrix outputs(m, dim);
            for (int j = 0; j < m; ++j) {
                int inst = chosen[static_cast<size_t>(j < n ? j : 0)];
                if (j < n) truth.insert(lib.ids[static_cast<size_t>(inst)]);
                for (int d = 0; d < dim; ++d) outputs.at(j, d) = lib.vectors.at(inst, d);
            }
            truths.push_back(truth);
            predictions.push_back(retrieve(similarity_matrix(outputs, lib), lib.ids).retrieved);
        }
        F1Report f1 = multilabel_f1(predictions, truths);
        check.expect(std::abs(f1.macro - 1.0) <= 1e-12 && std::abs(f1.weighted - 1.0) <= 1e-12,
                     "perfect-oracle F1 is not 1.0");
    }
    return check;
}

// ---------- criterion 7 ----------
Check criterion_metric_units() {
    Check check;
    double e = eer_from_scores({0.9, 0.8, 0.7}, {0.75, 0.2, 0.1});
    check.expect(std::abs(e - 1.0 / 3.0) <= 1e-9, "EER hand case");

    std::vector<IdSet> truths = {{"A", "B"}, {"A"}};
    std::vector<IdSet> preds = {{"A"}, {"A", "B"}};
    F1Report f1 = multilabel_f1(preds, truths);
    check.expect(std::abs(f1.macro - 0.5) <= 1e-9, "F1 macro hand case");
    check.expect(std::abs(f1.weighted - 2.0 / 3.0) <= 1e-9, "F1 weighted hand case");

    double ap = average_precision({0.9, 0.8, 0.4, 0.3}, {true, false, true, false});
    check.expect(std::abs(ap - 5.0 / 6.0) <= 1e-9, "AP hand case");
    return check;
}

// ---------- criterion 8 ----------
Check criterion_dsp() {
    Check check;
    MelConfig config;  // pinned defaults: 1024 fft, 512 hop, 64 mel bins
    Rng rng(808);

    AudioClip clip = AudioClip::silence(kClipSamples);
    for (double& s : clip.samples) s = rng.uniform(-1.0, 1.0);
    Matrix mag = stft(clip, config);
    for (int frame = 0; frame < mag.rows; ++frame) {
        double time_energy = 0.0;
        for (int i = 0; i < config.fft_size; ++i) {
            double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / config.fft_size);
            double x = clip.samples[static_cast<size_t>(frame * config.hop + i)] * w;
            time_energy += x * x;
        }
        double freq_energy = mag.at(frame, 0) * mag.at(frame, 0) +
                             mag.at(frame, mag.cols - 1) * mag.at(frame, mag.cols - 1);
        for (int k = 1; k < mag.cols - 1; ++k) freq_energy += 2.0 * mag.at(frame, k) * mag.at(frame, k);
        double rel = std::abs(freq_energy - config.fft_size * time_energy) /
                     (config.fft_size * time_energy);
        check.expect(rel <= 1e-6, "Parseval violated at frame " + std::to_string(frame));
    }

    // pure tone at a filter center is that frame's argmax mel bin
    Matrix fb = mel_filterbank(config);
    for (int target : {10, 25, 40, 55}) {
        int peak_k = 0;
        for (int k = 1; k < fb.cols; ++k)
            if (fb.at(target, k) > fb.at(target, peak_k)) peak_k = k;
        double hz = peak_k * static_cast<double>(kSampleRate) / config.fft_size;
        AudioClip tone = AudioClip::silence(kClipSamples);
        for (int i = 0; i < kClipSamples; ++i)
            tone.samples[static_cast<size_t>(i)] =
                0.5 * std::sin(2.0 * M_PI * hz * i / kSampleRate);
        MelSpectrogram mel = log_mel(tone, config);
        for (int frame = 0; frame < mel.values.rows; ++frame) {
            int best = 0;
            for (int m = 1; m < mel.values.cols; ++m)
                if (mel.values.at(frame, m) > mel.values.at(frame, best)) best = m;
            check.expect(best == target, "tone argmax wrong at bin " + std::to_string(target));
            if (!check.ok) break;
        }
    }

    MelSpectrogram silence = log_mel(AudioClip::silence(kClipSamples), config);
    for (double v : silence.values.values)
        check.expect(v == std::log(config.log_floor), "silence not at the exact log floor");
    return check;
}

// ---------- criterion 9 ----------
Check criterion_parser() {
    Check check;
    Rng rng(909);
    const double tick_s = 0.5 / 480.0;

    // round trip over random well-formed tracks
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<TrackScore> tracks;
        int n_tracks = rng.uniform_int(1, 4);
        for (int t = 0; t < n_tracks; ++t) {
            TrackScore score;
            score.source_program = rng.uniform_int(0, 127);
            score.family = general_midi_family(score.source_program);
            int n = rng.uniform_int(1, 16);
            std::vector<int> pitches = rng.sample_without_replacement(80, n);
            double t0 = 0.0;
            for (int i = 0; i < n; ++i) {
                NoteEvent e;
                e.pitch = 20 + pitches[static_cast<size_t>(i)];
                e.velocity = rng.uniform_int(1, 127);
                t0 += rng.uniform(0.01, 0.7);
                e.onset_s = t0;
                e.duration_s = rng.uniform(0.05, 2.0);
                score.events.push_back(e);
            }
            score.sort_events();
            tracks.push_back(std::move(score));
        }
        auto parsed = parse_midi(write_midi(tracks));
        check.expect(parsed.size() == tracks.size(), "track count changed in round trip");
        if (!check.ok) break;
        for (size_t t = 0; t < tracks.size(); ++t) {
            check.expect(parsed[t].events.size() == tracks[t].events.size(),
                         "event count changed in round trip");
            if (!check.ok) break;
            for (size_t i = 0; i < tracks[t].events.size(); ++i) {
                const auto& a = tracks[t].events[i];
                const auto& b = parsed[t].events[i];
                check.expect(b.pitch == a.pitch && b.velocity == a.velocity,
                             "note identity changed");
                check.expect(std::abs(b.onset_s - a.onset_s) < tick_s, "onset drifted >= 1 tick");
                check.expect(std::abs((b.onset_s + b.duration_s) - (a.onset_s + a.duration_s)) <
                                 tick_s,
                             "note end drifted >= 1 tick");
            }
        }
    }

    // 10,000-case fuzz: arbitrary bytes and mutations of valid files
    std::vector<TrackScore> seed_track(1);
    seed_track[0].source_program = 25;
    for (int i = 0; i < 6; ++i) {
        NoteEvent e;
        e.pitch = 60 + i;
        e.onset_s = 0.3 * i;
        e.duration_s = 0.25;
        seed_track[0].events.push_back(e);
    }
    std::vector<uint8_t> valid = write_midi(seed_track);

    int declared_errors = 0, parses = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        std::vector<uint8_t> data;
        int mode = trial % 3;
        if (mode == 0) {
            int len = rng.uniform_int(0, 200);
            for (int i = 0; i < len; ++i)
                data.push_back(static_cast<uint8_t>(rng.uniform_int(0, 255)));
        } else if (mode == 1) {
            data = valid;
            int flips = rng.uniform_int(1, 10);
            for (int i = 0; i < flips; ++i)
                data[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(data.size()) - 1))] =
                    static_cast<uint8_t>(rng.uniform_int(0, 255));
        } else {
            data = valid;
            int cut = rng.uniform_int(0, static_cast<int>(data.size()));
            data.resize(static_cast<size_t>(cut));
        }
        try {
            (void)parse_midi(data);
            ++parses;
        } catch (const Error& e) {
            bool declared = e.code() == Err::MalformedHeader || e.code() == Err::TruncatedChunk ||
                            e.code() == Err::UnsupportedFormat;
            check.expect(declared, "undeclared error code escaped the parser");
            ++declared_errors;
        } catch (...) {
            check.expect(false, "non-Error exception escaped the parser");
        }
        if (!check.ok) break;
    }
    check.expect(declared_errors > 0 && parses > 0, "fuzz corpus did not cover both outcomes");
    return check;
}

struct Criterion {
    int number;
    const char* label;
    Check (*run)();
};

}  // namespace

int main(int argc, char** argv) {
    const Criterion criteria[] = {
        {1, "assignment oracle equivalence (1000 instances)", criterion_assignment_oracle},
        {2, "PIT invariance suite (500 instances)", criterion_pit_invariance},
        {3, "gradient checks vs central finite differences", criterion_gradient_checks},
        {4, "toy single-encoder run: accuracy and verification EER", criterion_toy_single},
        {5, "toy multi-encoder run: F1/mAP vs chance, family ordering", criterion_toy_multi},
        {6, "retrieval invariants (1000 queries)", criterion_retrieval_invariants},
        {7, "metric hand-derived unit values", criterion_metric_units},
        {8, "DSP: Parseval, mel-center argmax, exact silence floor", criterion_dsp},
        {9, "SMF round-trip and 10000-case fuzz", criterion_parser},
    };

    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.number)) continue;
        double start = now_s();
        Check check;
        try {
            check = c.run();
        } catch (const std::exception& e) {
            check.ok = false;
            check.detail = std::string("exception: ") + e.what();
        }
        double elapsed = now_s() - start;
        if (check.ok) {
            std::printf("[PASS] criterion %d: %s (%.1f s)\n", c.number, c.label, elapsed);
        } else {
            std::printf("[FAIL] criterion %d: %s (%.1f s) -- %s\n", c.number, c.label, elapsed,
                        check.detail.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
    return failures;
}
