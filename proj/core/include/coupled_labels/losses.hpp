#pragma once

#include <vector>

#include "coupled_labels/datamodel.hpp"

namespace coupled_labels {

/// Floor applied to every log argument.
inline constexpr double kLogFloor = 1e-12;

struct LossOutput {
    double value = 0.0;
    Matrix grad_logits;
    bool is_finite = true;
};

/// Numerically stable logistic function.
double sigmoid(double z);
Matrix sigmoid(const Matrix& z);

/// Asymmetric loss, mean-reduced over all N x L entries. Negatives use the
/// shifted probability max(p - clip, 0). The input is a plain Matrix so that
/// non-finite logits yield is_finite = false rather than an exception.
LossOutput asl_loss(const Matrix& logits, const LabelMatrix& targets, const AslParams& params);

/// Binary cross-entropy with per-label positive weights, mean-reduced.
LossOutput weighted_bce_loss(const Matrix& logits, const LabelMatrix& targets,
                             const std::vector<double>& pos_weight);

/// w_l = clamp(N_neg / max(N_pos, 1), 1, 10).
std::vector<double> compute_pos_weights(const LabelMatrix& labels);

struct PenaltyOutput {
    double value = 0.0;
    Matrix grad;
};

/// lambda * sum of |A_ij| over off-diagonal entries, with subgradient
/// sign(0) = 0.
PenaltyOutput l1_penalty(const Matrix& couplings, double lambda);

}  // namespace coupled_labels
