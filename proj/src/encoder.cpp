#include "instret/encoder.hpp"

#include <cmath>
#include <map>

#include "instret/util.hpp"
#include "json.hpp"

namespace instret {

EncoderConfig EncoderConfig::small_preset() {
    EncoderConfig c;
    c.conv_channels = {8, 16, 32};
    c.fc_width = 128;
    return c;
}

EncoderConfig EncoderConfig::large_preset() {
    EncoderConfig c;
    c.conv_channels = {16, 32, 64, 64};
    c.fc_width = 512;
    return c;
}

EncoderConfig EncoderConfig::preset(const std::string& name) {
    if (name == "small") return small_preset();
    if (name == "large") return large_preset();
    raise(Err::BadConfig, "unknown encoder preset '" + name + "' (small|large)");
}

void EncoderConfig::validate() const {
    require(!conv_channels.empty(), Err::BadConfig, "need at least one conv stage");
    for (int c : conv_channels) require(c >= 1, Err::BadConfig, "conv channels must be positive");
    require(fc_width >= 1, Err::BadConfig, "fc width must be positive");
    require(embed_dim >= 8, Err::BadConfig, "embedding dim must be at least 8");
    require(slots >= 0, Err::BadConfig, "negative slot count");
    require(input_frames >= 1 && input_bins >= 1, Err::BadConfig, "bad input geometry");
    auto [h, w] = conv_output_hw();
    require(h >= 1 && w >= 1, Err::BadConfig, "input too small for the pooling pyramid");
}

std::pair<int, int> EncoderConfig::conv_output_hw() const {
    int h = input_frames, w = input_bins;
    for (size_t i = 0; i < conv_channels.size(); ++i) {
        h /= 2;
        w /= 2;
    }
    return {h, w};
}

uint64_t EncoderConfig::hash() const {
    std::string repr;
    for (int c : conv_channels) repr += std::to_string(c) + ",";
    repr += "|" + std::to_string(fc_width) + "|" + std::to_string(embed_dim) + "|" +
            std::to_string(slots) + "|" + std::to_string(input_frames) + "|" +
            std::to_string(input_bins);
    return fnv1a_str(repr);
}

std::vector<nn::Tensor*> EncoderParams::tensors() {
    std::vector<nn::Tensor*> out;
    visit([&](const std::string&, nn::Tensor& t) { out.push_back(&t); });
    return out;
}

std::vector<const nn::Tensor*> EncoderParams::tensors() const {
    std::vector<const nn::Tensor*> out;
    const_cast<EncoderParams*>(this)->visit(
        [&](const std::string&, nn::Tensor& t) { out.push_back(&t); });
    return out;
}

namespace {

nn::Tensor he_tensor(std::vector<int> shape, int fan_in, Rng& rng) {
    nn::Tensor t(std::move(shape));
    double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : t.data) v = scale * rng.gaussian();
    return t;
}

}  // namespace

EncoderParams init_encoder(const EncoderConfig& config, Rng& rng) {
    config.validate();
    EncoderParams p;
    p.config = config;
    int in_channels = 1;
    for (int out_channels : config.conv_channels) {
        EncoderParams::Stage stage;
        stage.w = he_tensor({out_channels, in_channels, 3, 3}, in_channels * 9, rng);
        stage.b = nn::Tensor({out_channels});
        p.stages.push_back(std::move(stage));
        in_channels = out_channels;
    }
    p.trunk_w = he_tensor({config.fc_width, in_channels}, in_channels, rng);
    p.trunk_b = nn::Tensor({config.fc_width});
    p.out_w = he_tensor({config.output_width(), config.fc_width}, config.fc_width, rng);
    p.out_b = nn::Tensor({config.output_width()});
    return p;
}

ClassifierHead init_head(int classes, int embed_dim, Rng& rng) {
    require(classes >= 2, Err::BadConfig, "need at least two classes");
    ClassifierHead head;
    head.w = he_tensor({classes, embed_dim}, embed_dim, rng);
    head.b = nn::Tensor({classes});
    return head;
}

EncoderParams zero_like(const EncoderParams& params) {
    EncoderParams z;
    z.config = params.config;
    for (const auto& s : params.stages) {
        EncoderParams::Stage stage;
        stage.w = nn::Tensor(s.w.shape);
        stage.b = nn::Tensor(s.b.shape);
        z.stages.push_back(std::move(stage));
    }
    z.trunk_w = nn::Tensor(params.trunk_w.shape);
    z.trunk_b = nn::Tensor(params.trunk_b.shape);
    z.out_w = nn::Tensor(params.out_w.shape);
    z.out_b = nn::Tensor(params.out_b.shape);
    return z;
}

nn::Tensor encoder_input(const EncoderConfig& config, const Matrix& mel) {
    require(mel.rows == config.input_frames && mel.cols == config.input_bins, Err::ShapeMismatch,
            "mel is " + std::to_string(mel.rows) + "x" + std::to_string(mel.cols) +
                " but encoder expects " + std::to_string(config.input_frames) + "x" +
                std::to_string(config.input_bins));
    nn::Tensor x({1, mel.rows, mel.cols});
    double mean = 0.0;
    for (double v : mel.values) mean += v;
    mean /= static_cast<double>(mel.values.size());
    double var = 0.0;
    for (double v : mel.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(mel.values.size());
    double inv_std = 1.0 / std::sqrt(var + 1e-8);
    for (size_t i = 0; i < mel.values.size(); ++i) x.data[i] = (mel.values[i] - mean) * inv_std;
    return x;
}

nn::Tensor encoder_raw_output(const EncoderParams& params, const Matrix& mel, Tape* tape) {
    const EncoderConfig& config = params.config;
    nn::Tensor x = encoder_input(config, mel);
    if (tape) {
        tape->config_hash = config.hash();
        tape->input = x;
        tape->stages.clear();
    }

    for (const auto& stage : params.stages) {
        Tape::StageTape st;
        nn::conv2d_forward(x, stage.w, stage.b, st.conv_out);
        nn::relu_forward(st.conv_out, st.relu_out);
        nn::maxpool2x2_forward(st.relu_out, st.pool_out, st.pool_argmax);
        if (tape) {
            st.conv_in = std::move(x);
            x = st.pool_out;
            tape->stages.push_back(std::move(st));
        } else {
            x = std::move(st.pool_out);
        }
    }

    nn::Tensor pooled, trunk_pre, trunk_act, out_pre;
    nn::meanpool_forward(x, pooled);
    nn::affine_forward(pooled, params.trunk_w, params.trunk_b, trunk_pre);
    nn::relu_forward(trunk_pre, trunk_act);
    nn::affine_forward(trunk_act, params.out_w, params.out_b, out_pre);

    if (tape) {
        tape->pooled = pooled;
        tape->trunk_pre = trunk_pre;
        tape->trunk_act = trunk_act;
        tape->out_pre = out_pre;
    }
    return out_pre;
}

SingleForward forward_single(const EncoderParams& params, const ClassifierHead& head,
                             const Matrix& mel, Tape* tape) {
    require(!params.config.is_multi(), Err::ShapeMismatch,
            "forward_single called on a multi encoder");
    require(head.w.shape.size() == 2 && head.w.dim(1) == params.config.embed_dim,
            Err::ShapeMismatch, "head width differs from embedding dim");
    nn::Tensor out_pre = encoder_raw_output(params, mel, tape);
    nn::Tensor emb;
    nn::relu_forward(out_pre, emb);

    SingleForward result;
    result.embedding.assign(emb.data.begin(), emb.data.end());
    guard_nonzero(result.embedding);
    nn::Tensor emb_t({params.config.embed_dim});
    emb_t.data = result.embedding;
    nn::affine_forward(emb_t, head.w, head.b, result.logits);
    return result;
}

std::vector<double> single_embedding(const EncoderParams& params, const Matrix& mel) {
    require(!params.config.is_multi(), Err::ShapeMismatch,
            "single_embedding called on a multi encoder");
    nn::Tensor out_pre = encoder_raw_output(params, mel, nullptr);
    std::vector<double> emb(out_pre.size());
    for (size_t i = 0; i < out_pre.size(); ++i) emb[i] = out_pre.data[i] > 0.0 ? out_pre.data[i] : 0.0;
    guard_nonzero(emb);
    return emb;
}

Matrix forward_multi(const EncoderParams& params, const Matrix& mel, int slots) {
    require(params.config.is_multi(), Err::ShapeMismatch,
            "forward_multi called on a single encoder");
    require(slots == params.config.slots, Err::ShapeMismatch,
            "requested " + std::to_string(slots) + " slots but encoder has " +
                std::to_string(params.config.slots));
    nn::Tensor out_pre = encoder_raw_output(params, mel, nullptr);

    Matrix out(slots, params.config.embed_dim);
    out.values.assign(out_pre.data.begin(), out_pre.data.end());
    return out;
}

EncoderParams encoder_backward(const EncoderParams& params, const Tape& tape,
                               const nn::Tensor& out_grad) {
    require(tape.config_hash == params.config.hash(), Err::StaleTape,
            "tape was recorded under a different encoder configuration");
    require(tape.stages.size() == params.stages.size(), Err::StaleTape,
            "tape stage count mismatch");
    require(out_grad.shape == tape.out_pre.shape, Err::ShapeMismatch, "upstream gradient shape");

    EncoderParams grads = zero_like(params);

    nn::Tensor g_trunk_act, g_trunk_pre, g_pooled;
    nn::affine_backward(tape.trunk_act, params.out_w, out_grad, g_trunk_act, grads.out_w,
                        grads.out_b);
    nn::relu_backward(tape.trunk_pre, g_trunk_act, g_trunk_pre);
    nn::affine_backward(tape.pooled, params.trunk_w, g_trunk_pre, g_pooled, grads.trunk_w,
                        grads.trunk_b);

    nn::Tensor g = g_pooled;
    nn::Tensor g_spatial;
    nn::meanpool_backward(tape.stages.back().pool_out, g, g_spatial);

    for (size_t s = params.stages.size(); s-- > 0;) {
        const auto& stage = params.stages[s];
        const auto& st = tape.stages[s];
        nn::Tensor g_relu, g_conv, g_in;
        nn::maxpool2x2_backward(st.relu_out, g_spatial, st.pool_argmax, g_relu);
        nn::relu_backward(st.conv_out, g_relu, g_conv);
        nn::conv2d_backward(st.conv_in, stage.w, g_conv, g_in, grads.stages[s].w,
                            grads.stages[s].b);
        g_spatial = std::move(g_in);
    }
    return grads;
}

void guard_nonzero(std::vector<double>& v) {
    for (double x : v)
        if (x != 0.0) return;
    if (!v.empty()) v[0] = 1e-9;
}

// ---- checkpoints ----

namespace {
constexpr char kCheckpointMagic[4] = {'I', 'R', 'C', 'K'};

nlohmann::json config_to_json(const EncoderConfig& c) {
    return {{"conv_channels", c.conv_channels}, {"fc_width", c.fc_width},
            {"embed_dim", c.embed_dim},         {"slots", c.slots},
            {"input_frames", c.input_frames},   {"input_bins", c.input_bins}};
}

EncoderConfig config_from_json(const nlohmann::json& j) {
    EncoderConfig c;
    c.conv_channels = j["conv_channels"].get<std::vector<int>>();
    c.fc_width = j["fc_width"].get<int>();
    c.embed_dim = j["embed_dim"].get<int>();
    c.slots = j["slots"].get<int>();
    c.input_frames = j["input_frames"].get<int>();
    c.input_bins = j["input_bins"].get<int>();
    return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const EncoderParams& params,
                     const ClassifierHead* head) {
    nlohmann::json index;
    index["kind"] = params.config.is_multi() ? "multi" : "single";
    index["config"] = config_to_json(params.config);
    index["config_hash"] = hex64(params.config.hash());

    std::vector<float> payload;
    nlohmann::json tensors = nlohmann::json::array();
    auto append = [&](const std::string& name, const nn::Tensor& t) {
        tensors.push_back({{"name", name}, {"shape", t.shape}, {"offset", payload.size()}});
        for (double v : t.data) payload.push_back(static_cast<float>(v));
    };
    const_cast<EncoderParams&>(params).visit(
        [&](const std::string& name, nn::Tensor& t) { append(name, t); });
    if (head) {
        append("head.w", head->w);
        append("head.b", head->b);
        index["head_classes"] = head->classes();
    }
    index["tensors"] = tensors;
    write_blob(path, kCheckpointMagic, index.dump(), payload);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    auto [json_text, payload] = read_blob(path, kCheckpointMagic);
    nlohmann::json index = nlohmann::json::parse(json_text);

    Checkpoint ckpt;
    ckpt.source_hash = file_hash(path);
    EncoderConfig config = config_from_json(index["config"]);
    config.validate();

    std::map<std::string, std::pair<std::vector<int>, size_t>> entries;
    for (const auto& t : index["tensors"])
        entries[t["name"].get<std::string>()] = {t["shape"].get<std::vector<int>>(),
                                                 t["offset"].get<size_t>()};

    auto load_tensor = [&](const std::string& name) {
        auto it = entries.find(name);
        require(it != entries.end(), Err::IoError, "checkpoint missing tensor " + name);
        nn::Tensor t(it->second.first);
        size_t offset = it->second.second;
        require(offset + t.size() <= payload.size(), Err::IoError,
                "checkpoint payload too short for " + name);
        for (size_t i = 0; i < t.size(); ++i) t.data[i] = payload[offset + i];
        return t;
    };

    ckpt.params.config = config;
    for (size_t s = 0; s < config.conv_channels.size(); ++s) {
        EncoderParams::Stage stage;
        stage.w = load_tensor("stage" + std::to_string(s) + ".w");
        stage.b = load_tensor("stage" + std::to_string(s) + ".b");
        ckpt.params.stages.push_back(std::move(stage));
    }
    ckpt.params.trunk_w = load_tensor("trunk.w");
    ckpt.params.trunk_b = load_tensor("trunk.b");
    ckpt.params.out_w = load_tensor("out.w");
    ckpt.params.out_b = load_tensor("out.b");

    if (index.contains("head_classes")) {
        ClassifierHead head;
        head.w = load_tensor("head.w");
        head.b = load_tensor("head.b");
        ckpt.head = std::move(head);
    }
    return ckpt;
}

}  // namespace instret
