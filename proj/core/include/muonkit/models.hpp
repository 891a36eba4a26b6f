#pragma once

// A one-hidden-layer MLP with layer normalization and hand-written gradients:
//
//   z      = x·W1 + b1
//   h      = layer_norm(z)·gain + beta
//   logits = relu(h)·W2 + b2
//   loss   = mean softmax cross-entropy
//
// The matrix-only variant drops b1, gain, beta, b2 and the normalization.

#include <cstdint>
#include <span>
#include <vector>

#include "muonkit/param.hpp"

namespace muonkit {

inline constexpr double kLayerNormEps = 1e-5;

struct MlpDims {
    std::size_t in_dim = 0;
    std::size_t hidden = 0;
    std::size_t n_classes = 0;
    bool matrix_only = false;
};

struct Batch {
    Matrix inputs;             // batch x in_dim
    std::vector<int> labels;   // each in [0, n_classes)

    std::size_t size() const noexcept { return labels.size(); }
};

class MlpModel {
public:
    /// Takes parameters in canonical order: W1, b1, gain, beta, W2, b2
    /// (W1, W2 for the matrix-only variant). Throws ShapeError on mismatch.
    MlpModel(MlpDims dims, std::vector<ParamTensor> params);

    const MlpDims& dims() const noexcept { return dims_; }

    std::span<ParamTensor> params() noexcept { return params_; }
    std::span<const ParamTensor> params() const noexcept { return params_; }

    const Matrix& w1() const { return std::get<Matrix>(params_[0].value); }
    const Matrix& w2() const { return std::get<Matrix>(params_[dims_.matrix_only ? 1 : 4].value); }
    /// Vector accessors throw for the matrix-only variant.
    const Vector& b1() const { return vec(1); }
    const Vector& gain() const { return vec(2); }
    const Vector& beta() const { return vec(3); }
    const Vector& b2() const { return vec(5); }

    friend bool operator==(const MlpModel& a, const MlpModel& b);

private:
    const Vector& vec(std::size_t index) const;

    MlpDims dims_;
    std::vector<ParamTensor> params_;
};

/// W ~ N(0, 1/fan_in) from splitmix64(seed), W1 first then W2 (row-major);
/// gain = 1, biases and beta = 0.
MlpModel init_model(std::uint64_t seed, const MlpDims& dims);

struct ForwardCache {
    Matrix z_hat;                // normalized pre-activations (z itself when matrix_only)
    std::vector<double> inv_std; // per row
    Matrix h;
    Matrix act;                  // relu(h)
    Matrix probs;                // softmax(logits)
};

struct ForwardResult {
    double loss = 0.0;
    ForwardCache cache;
};

ForwardResult forward(const MlpModel& model, const Batch& batch);

inline double loss(const MlpModel& model, const Batch& batch) { return forward(model, batch).loss; }

struct LossAndGrads {
    double loss = 0.0;
    std::vector<Tensor> grads;    // aligned with model.params()
};

LossAndGrads loss_and_grads(const MlpModel& model, const Batch& batch);

/// Fraction of rows whose argmax logit is the label.
double accuracy(const MlpModel& model, const Batch& batch);

}    // namespace muonkit
