#pragma once

#include <random>

#include "coupled_labels/datamodel.hpp"

namespace coupled_labels {

/// Small differentiable feature -> logit model. `linear` uses only w2/b2;
/// `mlp1` adds one ReLU hidden layer with inverted dropout at train time.
struct PredictorParams {
    PredictorKind variant = PredictorKind::Linear;
    Matrix w1;  ///< D x H (mlp1 only)
    Matrix b1;  ///< 1 x H (mlp1 only)
    Matrix w2;  ///< D x L or H x L
    Matrix b2;  ///< 1 x L
    double dropout_p = 0.4;

    [[nodiscard]] std::size_t input_dim() const;
    [[nodiscard]] std::size_t num_labels() const { return static_cast<std::size_t>(w2.cols()); }
    void validate() const;
};

/// Weights uniform in +-1/sqrt(fan_in), biases zero.
PredictorParams init_predictor(const PredictorConfig& cfg, std::size_t input_dim,
                               std::size_t num_labels, std::mt19937_64& rng);

enum class Mode { Train, Eval };

struct PredictForward {
    Matrix z;
    Matrix x;
    Matrix hidden_pre;  ///< x * w1 + b1
    Matrix hidden;      ///< after ReLU and dropout
    Matrix keep_scale;  ///< 0 or 1/(1-p) per hidden unit; empty in eval mode
};

/// `rng` is only drawn from in train mode with a hidden layer.
PredictForward predict_forward(const Matrix& x, const PredictorParams& params, Mode mode,
                               std::mt19937_64* rng = nullptr);

struct PredictorGrads {
    Matrix w1, b1, w2, b2;
    Matrix x;
};

PredictorGrads predict_backward(const Matrix& grad_z, const PredictForward& cache,
                                const PredictorParams& params);

}  // namespace coupled_labels
