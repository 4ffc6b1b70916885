#include "instret/encoder.hpp"

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"

using namespace instret;

namespace {

// tiny geometry keeps finite-difference sweeps fast
EncoderConfig tiny_config(int slots = 0) {
    EncoderConfig c;
    c.conv_channels = {3, 4};
    c.fc_width = 10;
    c.embed_dim = 8;
    c.slots = slots;
    c.input_frames = 12;
    c.input_bins = 9;
    return c;
}

Matrix random_mel(const EncoderConfig& c, Rng& rng) {
    Matrix m(c.input_frames, c.input_bins);
    for (double& v : m.values) v = rng.uniform(-4.0, 4.0);
    return m;
}

}  // namespace

TEST_CASE("forward_single: embedding width, softmax identity, bias-only logits") {
    Rng rng(1);
    EncoderConfig c = tiny_config();
    EncoderParams params = init_encoder(c, rng);
    ClassifierHead head = init_head(5, c.embed_dim, rng);
    Matrix mel = random_mel(c, rng);

    SingleForward fwd = forward_single(params, head, mel);
    CHECK(fwd.embedding.size() == static_cast<size_t>(c.embed_dim));
    CHECK(fwd.logits.size() == 5);

    auto p = nn::softmax(fwd.logits);
    double sum = 0.0;
    for (double v : p) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));

    // zero weights everywhere -> logits equal the head bias
    EncoderParams zero = zero_like(params);
    ClassifierHead zero_head;
    zero_head.w = nn::Tensor({5, c.embed_dim});
    zero_head.b = nn::Tensor({5});
    zero_head.b.data = {0.1, -0.2, 0.3, -0.4, 0.5};
    SingleForward zf = forward_single(zero, zero_head, mel);
    for (int i = 0; i < 5; ++i)
        CHECK(zf.logits.data[static_cast<size_t>(i)] ==
              doctest::Approx(zero_head.b.data[static_cast<size_t>(i)]));
}

TEST_CASE("forward_single: D = 1024 under the paper-default preset") {
    EncoderConfig c = EncoderConfig::small_preset();
    CHECK(c.embed_dim == 1024);
    c.input_frames = 20;
    c.input_bins = 16;
    Rng rng(2);
    EncoderParams params = init_encoder(c, rng);
    ClassifierHead head = init_head(3, c.embed_dim, rng);
    Matrix mel(c.input_frames, c.input_bins);
    for (double& v : mel.values) v = rng.uniform(-1.0, 1.0);
    SingleForward fwd = forward_single(params, head, mel);
    CHECK(fwd.embedding.size() == 1024);
}

TEST_CASE("forward_multi: row count, degenerate M=1, shape errors") {
    Rng rng(3);
    EncoderConfig c9 = tiny_config(9);
    EncoderParams p9 = init_encoder(c9, rng);
    Matrix mel = random_mel(c9, rng);
    Matrix out = forward_multi(p9, mel, 9);
    CHECK(out.rows == 9);
    CHECK(out.cols == c9.embed_dim);

    EncoderConfig c1 = tiny_config(1);
    EncoderParams p1 = init_encoder(c1, rng);
    Matrix one = forward_multi(p1, mel, 1);
    CHECK(one.rows == 1);

    CHECK_THROWS_AS((void)forward_multi(p9, mel, 4), Error);       // M mismatch
    CHECK_THROWS_AS((void)forward_multi(p1, Matrix(3, 3), 1), Error);  // bad mel shape

    EncoderConfig single = tiny_config(0);
    EncoderParams ps = init_encoder(single, rng);
    CHECK_THROWS_AS((void)forward_multi(ps, mel, 9), Error);
    ClassifierHead head = init_head(4, c9.embed_dim, rng);
    CHECK_THROWS_AS((void)forward_single(p9, head, mel), Error);
}

TEST_CASE("encoder_backward: full-net gradients match finite differences") {
    Rng rng(7);
    EncoderConfig c = tiny_config();
    EncoderParams params = init_encoder(c, rng);
    Matrix mel = random_mel(c, rng);

    nn::Tensor upstream({c.output_width()});
    for (double& v : upstream.data) v = rng.uniform(-1.0, 1.0);

    Tape tape;
    (void)encoder_raw_output(params, mel, &tape);
    EncoderParams grads = encoder_backward(params, tape, upstream);

    auto loss_with = [&](EncoderParams& p) {
        nn::Tensor out = encoder_raw_output(p, mel, nullptr);
        double acc = 0.0;
        for (size_t i = 0; i < out.size(); ++i) acc += out.data[i] * upstream.data[i];
        return acc;
    };

    const double h = 1e-4;
    auto tensors = params.tensors();
    auto grad_tensors = grads.tensors();
    Rng pick(55);
    int checked = 0;
    for (size_t t = 0; t < tensors.size(); ++t) {
        size_t n = tensors[t]->size();
        for (int trial = 0; trial < 12; ++trial) {
            size_t i = static_cast<size_t>(pick.uniform_int(0, static_cast<int>(n) - 1));
            double saved = tensors[t]->data[i];
            tensors[t]->data[i] = saved + h;
            double up = loss_with(params);
            tensors[t]->data[i] = saved - h;
            double down = loss_with(params);
            tensors[t]->data[i] = saved;
            double numeric = (up - down) / (2 * h);
            CHECK(testutil::rel_err(grad_tensors[t]->data[i], numeric) < 1e-4);
            ++checked;
        }
    }
    CHECK(checked >= 70);
}

TEST_CASE("encoder_backward: stale tape rejected") {
    Rng rng(9);
    EncoderConfig c = tiny_config();
    EncoderParams params = init_encoder(c, rng);
    Matrix mel = random_mel(c, rng);
    Tape tape;
    (void)encoder_raw_output(params, mel, &tape);

    EncoderConfig other = tiny_config();
    other.fc_width = 11;
    EncoderParams different = init_encoder(other, rng);
    nn::Tensor upstream({other.output_width()});
    CHECK_THROWS_AS((void)encoder_backward(different, tape, upstream), Error);
}

TEST_CASE("guard_nonzero only touches exactly-zero vectors") {
    std::vector<double> zeros(4, 0.0);
    guard_nonzero(zeros);
    CHECK(zeros[0] != 0.0);

    std::vector<double> v{0.0, -0.25, 0.0};
    std::vector<double> before = v;
    guard_nonzero(v);
    CHECK(v == before);
}

TEST_CASE("checkpoint: save/load round trip preserves structure and f32 values") {
    testutil::TempDir dir("ckpt");
    Rng rng(12);
    EncoderConfig c = tiny_config();
    EncoderParams params = init_encoder(c, rng);
    ClassifierHead head = init_head(6, c.embed_dim, rng);

    auto path = dir.path() / "single.ckpt";
    save_checkpoint(path, params, &head);
    Checkpoint loaded = load_checkpoint(path);

    CHECK(loaded.params.config.hash() == c.hash());
    REQUIRE(loaded.head.has_value());
    CHECK(loaded.head->classes() == 6);

    auto orig = params.tensors();
    auto back = loaded.params.tensors();
    REQUIRE(orig.size() == back.size());
    for (size_t t = 0; t < orig.size(); ++t) {
        REQUIRE(orig[t]->shape == back[t]->shape);
        for (size_t i = 0; i < orig[t]->size(); ++i)
            CHECK(back[t]->data[i] == doctest::Approx(orig[t]->data[i]).epsilon(1e-6));
    }

    // loading twice gives bit-identical parameters (f32 is already quantized)
    Checkpoint again = load_checkpoint(path);
    auto a = loaded.params.tensors();
    auto b = again.params.tensors();
    for (size_t t = 0; t < a.size(); ++t) CHECK(a[t]->data == b[t]->data);

    // multi checkpoint without head
    EncoderConfig mc = tiny_config(4);
    EncoderParams mparams = init_encoder(mc, rng);
    auto mpath = dir.path() / "multi.ckpt";
    save_checkpoint(mpath, mparams, nullptr);
    Checkpoint mloaded = load_checkpoint(mpath);
    CHECK(!mloaded.head.has_value());
    CHECK(mloaded.params.config.slots == 4);
}

TEST_CASE("encoder_input: standardization is shift/scale normalized") {
    Rng rng(21);
    EncoderConfig c = tiny_config();
    Matrix mel = random_mel(c, rng);
    nn::Tensor x = encoder_input(c, mel);
    double mean = 0.0;
    for (double v : x.data) mean += v;
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    CHECK(std::abs(mean) < 1e-9);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
}
