#include "instret/nn.hpp"

#include <algorithm>
#include <cmath>

namespace instret {
namespace nn {

void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y) {
    int cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
    int cout = w.dim(0);
    require(w.shape == std::vector<int>{cout, cin, 3, 3}, Err::ShapeMismatch, "conv weight shape");
    require(b.shape == std::vector<int>{cout}, Err::ShapeMismatch, "conv bias shape");
    y = Tensor({cout, h, wd});

    for (int co = 0; co < cout; ++co) {
        double* yp = &y.data[static_cast<size_t>(co) * h * wd];
        double bias = b.data[static_cast<size_t>(co)];
        for (int i = 0; i < h * wd; ++i) yp[i] = bias;
        for (int ci = 0; ci < cin; ++ci) {
            const double* xp = &x.data[static_cast<size_t>(ci) * h * wd];
            const double* wp = &w.data[(static_cast<size_t>(co) * cin + ci) * 9];
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    double wv = wp[ky * 3 + kx];
                    if (wv == 0.0) continue;
                    int dy = ky - 1, dx = kx - 1;
                    int r0 = std::max(0, -dy), r1 = std::min(h, h - dy);
                    int c0 = std::max(0, -dx), c1 = std::min(wd, wd - dx);
                    for (int r = r0; r < r1; ++r) {
                        double* yrow = yp + static_cast<size_t>(r) * wd;
                        const double* xrow = xp + static_cast<size_t>(r + dy) * wd + dx;
                        for (int c = c0; c < c1; ++c) yrow[c] += wv * xrow[c];
                    }
                }
            }
        }
    }
}

void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor& gx, Tensor& gw,
                     Tensor& gb) {
    int cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
    int cout = w.dim(0);
    require(gy.shape == std::vector<int>{cout, h, wd}, Err::ShapeMismatch, "conv upstream shape");
    gx = Tensor(x.shape);
    gw = Tensor(w.shape);
    gb = Tensor({cout});

    for (int co = 0; co < cout; ++co) {
        const double* gyp = &gy.data[static_cast<size_t>(co) * h * wd];
        double acc = 0.0;
        for (int i = 0; i < h * wd; ++i) acc += gyp[i];
        gb.data[static_cast<size_t>(co)] = acc;

        for (int ci = 0; ci < cin; ++ci) {
            const double* xp = &x.data[static_cast<size_t>(ci) * h * wd];
            double* gxp = &gx.data[static_cast<size_t>(ci) * h * wd];
            const double* wp = &w.data[(static_cast<size_t>(co) * cin + ci) * 9];
            double* gwp = &gw.data[(static_cast<size_t>(co) * cin + ci) * 9];
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    int dy = ky - 1, dx = kx - 1;
                    int r0 = std::max(0, -dy), r1 = std::min(h, h - dy);
                    int c0 = std::max(0, -dx), c1 = std::min(wd, wd - dx);
                    double wv = wp[ky * 3 + kx];
                    double gwv = 0.0;
                    for (int r = r0; r < r1; ++r) {
                        const double* gyrow = gyp + static_cast<size_t>(r) * wd;
                        const double* xrow = xp + static_cast<size_t>(r + dy) * wd + dx;
                        double* gxrow = gxp + static_cast<size_t>(r + dy) * wd + dx;
                        for (int c = c0; c < c1; ++c) {
                            gwv += gyrow[c] * xrow[c];
                            gxrow[c] += wv * gyrow[c];
                        }
                    }
                    gwp[ky * 3 + kx] = gwv;
                }
            }
        }
    }
}

void relu_forward(const Tensor& x, Tensor& y) {
    y = Tensor(x.shape);
    for (size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
}

void relu_backward(const Tensor& x, const Tensor& gy, Tensor& gx) {
    require(x.same_shape(gy), Err::ShapeMismatch, "relu upstream shape");
    gx = Tensor(x.shape);
    for (size_t i = 0; i < x.size(); ++i) gx.data[i] = x.data[i] > 0.0 ? gy.data[i] : 0.0;
}

void maxpool2x2_forward(const Tensor& x, Tensor& y, std::vector<int>& argmax) {
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    int oh = h / 2, ow = w / 2;
    require(oh >= 1 && ow >= 1, Err::ShapeMismatch, "feature map too small to pool");
    y = Tensor({c, oh, ow});
    argmax.assign(y.size(), 0);

    for (int ch = 0; ch < c; ++ch) {
        const double* xp = &x.data[static_cast<size_t>(ch) * h * w];
        for (int r = 0; r < oh; ++r) {
            for (int col = 0; col < ow; ++col) {
                int base = (2 * r) * w + 2 * col;
                int best = base;
                double bv = xp[base];
                const int candidates[3] = {base + 1, base + w, base + w + 1};
                for (int idx : candidates) {
                    if (xp[idx] > bv) {
                        bv = xp[idx];
                        best = idx;
                    }
                }
                size_t out_idx = (static_cast<size_t>(ch) * oh + r) * ow + col;
                y.data[out_idx] = bv;
                argmax[out_idx] = best + ch * h * w;
            }
        }
    }
}

void maxpool2x2_backward(const Tensor& x, const Tensor& gy, const std::vector<int>& argmax,
                         Tensor& gx) {
    require(gy.size() == argmax.size(), Err::StaleTape, "pool indices do not match upstream");
    gx = Tensor(x.shape);
    for (size_t i = 0; i < gy.size(); ++i) gx.data[static_cast<size_t>(argmax[i])] += gy.data[i];
}

void meanpool_forward(const Tensor& x, Tensor& y) {
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    y = Tensor({c});
    double inv = 1.0 / (static_cast<double>(h) * w);
    for (int ch = 0; ch < c; ++ch) {
        const double* xp = &x.data[static_cast<size_t>(ch) * h * w];
        double acc = 0.0;
        for (int i = 0; i < h * w; ++i) acc += xp[i];
        y.data[static_cast<size_t>(ch)] = acc * inv;
    }
}

void meanpool_backward(const Tensor& x, const Tensor& gy, Tensor& gx) {
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    require(gy.shape == std::vector<int>{c}, Err::ShapeMismatch, "meanpool upstream shape");
    gx = Tensor(x.shape);
    double inv = 1.0 / (static_cast<double>(h) * w);
    for (int ch = 0; ch < c; ++ch) {
        double g = gy.data[static_cast<size_t>(ch)] * inv;
        double* gxp = &gx.data[static_cast<size_t>(ch) * h * w];
        for (int i = 0; i < h * w; ++i) gxp[i] = g;
    }
}

void affine_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y) {
    int in = x.dim(0);
    int out = w.dim(0);
    require(w.shape == std::vector<int>{out, in}, Err::ShapeMismatch, "affine weight shape");
    require(b.shape == std::vector<int>{out}, Err::ShapeMismatch, "affine bias shape");
    y = Tensor({out});
    for (int o = 0; o < out; ++o) {
        const double* wp = &w.data[static_cast<size_t>(o) * in];
        double acc = b.data[static_cast<size_t>(o)];
        for (int i = 0; i < in; ++i) acc += wp[i] * x.data[static_cast<size_t>(i)];
        y.data[static_cast<size_t>(o)] = acc;
    }
}

void affine_backward(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor& gx, Tensor& gw,
                     Tensor& gb) {
    int in = x.dim(0);
    int out = w.dim(0);
    require(gy.shape == std::vector<int>{out}, Err::ShapeMismatch, "affine upstream shape");
    gx = Tensor({in});
    gw = Tensor(w.shape);
    gb = gy;
    for (int o = 0; o < out; ++o) {
        double g = gy.data[static_cast<size_t>(o)];
        const double* wp = &w.data[static_cast<size_t>(o) * in];
        double* gwp = &gw.data[static_cast<size_t>(o) * in];
        for (int i = 0; i < in; ++i) {
            gwp[i] = g * x.data[static_cast<size_t>(i)];
            gx.data[static_cast<size_t>(i)] += g * wp[i];
        }
    }
}

std::vector<double> softmax(const Tensor& logits) {
    double mx = *std::max_element(logits.data.begin(), logits.data.end());
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits.data[i] - mx);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

CrossEntropyResult cross_entropy_loss(const Tensor& logits, int label) {
    int classes = logits.dim(0);
    require(label >= 0 && label < classes, Err::LabelOutOfRange,
            "label " + std::to_string(label) + " outside [0," + std::to_string(classes) + ")");
    std::vector<double> p = softmax(logits);
    CrossEntropyResult result;
    result.loss = -std::log(std::max(p[static_cast<size_t>(label)], 1e-300));
    result.grad = Tensor({classes});
    for (int i = 0; i < classes; ++i) result.grad.data[static_cast<size_t>(i)] = p[static_cast<size_t>(i)];
    result.grad.data[static_cast<size_t>(label)] -= 1.0;
    return result;
}

void adam_step(std::vector<Tensor*> params, const std::vector<const Tensor*>& grads,
               AdamState& state) {
    require(params.size() == grads.size(), Err::ShapeMismatch,
            "parameter/gradient list length mismatch");
    if (state.m.empty()) {
        for (const Tensor* p : params) {
            state.m.emplace_back(p->shape);
            state.v.emplace_back(p->shape);
        }
    }
    require(state.m.size() == params.size(), Err::ShapeMismatch, "optimizer state length mismatch");

    state.step += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    for (size_t t = 0; t < params.size(); ++t) {
        Tensor& p = *params[t];
        const Tensor& g = *grads[t];
        require(p.same_shape(g) && p.same_shape(state.m[t]), Err::ShapeMismatch,
                "parameter/gradient shape mismatch");
        Tensor& m = state.m[t];
        Tensor& v = state.v[t];
        for (size_t i = 0; i < p.size(); ++i) {
            m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * g.data[i];
            v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * g.data[i] * g.data[i];
            double mhat = m.data[i] / bc1;
            double vhat = v.data[i] / bc2;
            p.data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

}  // namespace nn
}  // namespace instret
