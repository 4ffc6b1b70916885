#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "instret/error.hpp"
#include "instret/rng.hpp"

namespace instret {
namespace nn {

// Dense row-major tensor of doubles. Training runs in 64-bit so analytic
// gradients can be checked against central finite differences.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        size_t n = 1;
        for (int d : shape) n *= static_cast<size_t>(d);
        data.assign(n, 0.0);
    }

    size_t size() const { return data.size(); }
    int dim(size_t i) const { return shape[static_cast<size_t>(i)]; }
    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    double& operator[](size_t i) { return data[i]; }
    double operator[](size_t i) const { return data[i]; }
};

inline void check_shape(const Tensor& t, const std::vector<int>& shape, const char* what) {
    require(t.shape == shape, Err::ShapeMismatch, std::string("unexpected shape for ") + what);
}

// ---- layer primitives ----
// Activations are [channels, height, width]; weights are [out, in, 3, 3].
// All convolutions are 3x3, stride 1, zero same-padding.

void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y);
void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor& gx, Tensor& gw,
                     Tensor& gb);

void relu_forward(const Tensor& x, Tensor& y);
void relu_backward(const Tensor& x, const Tensor& gy, Tensor& gx);

// 2x2 max-pool, stride 2, remainder rows/columns dropped
void maxpool2x2_forward(const Tensor& x, Tensor& y, std::vector<int>& argmax);
void maxpool2x2_backward(const Tensor& x, const Tensor& gy, const std::vector<int>& argmax,
                         Tensor& gx);

// global mean over height x width -> [channels]
void meanpool_forward(const Tensor& x, Tensor& y);
void meanpool_backward(const Tensor& x, const Tensor& gy, Tensor& gx);

// y = W x + b with W [out, in]
void affine_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y);
void affine_backward(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor& gx, Tensor& gw,
                     Tensor& gb);

struct CrossEntropyResult {
    double loss;
    Tensor grad;  // d loss / d logits = softmax - one_hot
};

CrossEntropyResult cross_entropy_loss(const Tensor& logits, int label);

std::vector<double> softmax(const Tensor& logits);

// ---- optimizer ----

struct AdamState {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int64_t step = 0;
    std::vector<Tensor> m;  // first moments, parallel to the parameter list
    std::vector<Tensor> v;  // second moments
};

// One bias-corrected Adam update over an ordered parameter list.
void adam_step(std::vector<Tensor*> params, const std::vector<const Tensor*>& grads,
               AdamState& state);

}  // namespace nn
}  // namespace instret
