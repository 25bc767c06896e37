#include "coupled_labels/losses.hpp"

#include <algorithm>
#include <cmath>

namespace coupled_labels {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& z) { return z.unaryExpr([](double v) { return sigmoid(v); }); }

namespace {

void check_shapes(const Matrix& logits, const LabelMatrix& targets, const char* who) {
    if (static_cast<std::size_t>(logits.rows()) != targets.rows() ||
        static_cast<std::size_t>(logits.cols()) != targets.cols())
        throw ValidationError(std::string(who) + ": logits and targets differ in shape");
    if (logits.size() == 0) throw ValidationError(std::string(who) + ": empty batch");
}

// log(max(x, floor)) and its derivative in x.
struct FlooredLog {
    double value;
    double deriv;
};

FlooredLog floored_log(double x) {
    if (x > kLogFloor) return {std::log(x), 1.0 / x};
    return {std::log(kLogFloor), 0.0};
}

void finish(LossOutput& out, const Matrix& logits, double sum) {
    const double count = static_cast<double>(logits.size());
    out.value = sum / count;
    out.grad_logits /= count;
    out.is_finite = logits.allFinite() && std::isfinite(out.value) && out.grad_logits.allFinite();
}

}  // namespace

LossOutput asl_loss(const Matrix& logits, const LabelMatrix& targets, const AslParams& params) {
    check_shapes(logits, targets, "asl_loss");
    const double gp = params.gamma_pos;
    const double gn = params.gamma_neg;
    const double clip = params.clip;

    LossOutput out;
    out.grad_logits.resize(logits.rows(), logits.cols());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            const double z = logits(i, j);
            const double p = sigmoid(z);
            const double q = sigmoid(-z);  // 1 - p without cancellation
            const double dp = p * q;
            double loss = 0.0;
            double grad = 0.0;
            if (targets.values()(i, j) != 0.0) {
                // -(1-p)^gp log p
                const auto lg = floored_log(p);
                const double focus = std::pow(q, gp);
                const double dfocus_dp = gp == 0.0 ? 0.0 : -gp * std::pow(q, gp - 1.0);
                loss = -focus * lg.value;
                grad = -(dfocus_dp * lg.value + focus * lg.deriv) * dp;
            } else {
                // -(p_m)^gn log(1 - p_m), p_m = max(p - clip, 0)
                const bool shifted_out = clip > 0.0 && p <= clip;
                const double pm = shifted_out ? 0.0 : (clip > 0.0 ? p - clip : p);
                const double one_minus = shifted_out ? 1.0 : (clip > 0.0 ? q + clip : q);
                if (pm > 0.0 || gn == 0.0) {
                    const auto lg = floored_log(one_minus);
                    const double focus = std::pow(pm, gn);
                    const double dfocus = gn == 0.0 ? 0.0 : gn * std::pow(pm, gn - 1.0);
                    loss = -focus * lg.value;
                    // d log(1 - p_m) / d p_m = -lg.deriv
                    const double dloss_dpm = -(dfocus * lg.value - focus * lg.deriv);
                    const double dpm_dz = shifted_out ? 0.0 : dp;
                    grad = dloss_dpm * dpm_dz;
                }
            }
            sum += loss;
            out.grad_logits(i, j) = grad;
        }
    }
    finish(out, logits, sum);
    return out;
}

LossOutput weighted_bce_loss(const Matrix& logits, const LabelMatrix& targets,
                             const std::vector<double>& pos_weight) {
    check_shapes(logits, targets, "weighted_bce_loss");
    if (static_cast<Eigen::Index>(pos_weight.size()) != logits.cols())
        throw ValidationError("weighted_bce_loss: pos_weight length differs from label count");

    LossOutput out;
    out.grad_logits.resize(logits.rows(), logits.cols());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            const double z = logits(i, j);
            const double p = sigmoid(z);
            const double q = sigmoid(-z);
            const double dp = p * q;
            double loss = 0.0;
            double grad = 0.0;
            if (targets.values()(i, j) != 0.0) {
                const double w = pos_weight[static_cast<std::size_t>(j)];
                const auto lg = floored_log(p);
                loss = -w * lg.value;
                grad = -w * lg.deriv * dp;
            } else {
                const auto lg = floored_log(q);
                loss = -lg.value;
                grad = lg.deriv * dp;
            }
            sum += loss;
            out.grad_logits(i, j) = grad;
        }
    }
    finish(out, logits, sum);
    return out;
}

std::vector<double> compute_pos_weights(const LabelMatrix& labels) {
    if (labels.rows() < 1) throw ValidationError("compute_pos_weights: no examples");
    const auto pos = labels.positive_counts();
    std::vector<double> w(labels.cols());
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double n_pos = static_cast<double>(pos[j]);
        const double n_neg = static_cast<double>(labels.rows() - pos[j]);
        w[j] = std::clamp(n_neg / std::max(n_pos, 1.0), 1.0, 10.0);
    }
    return w;
}

PenaltyOutput l1_penalty(const Matrix& couplings, double lambda) {
    if (couplings.rows() != couplings.cols())
        throw ValidationError("l1_penalty: coupling matrix must be square");
    PenaltyOutput out;
    out.grad = Matrix::Zero(couplings.rows(), couplings.cols());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < couplings.rows(); ++i)
        for (Eigen::Index j = 0; j < couplings.cols(); ++j) {
            if (i == j) continue;
            const double a = couplings(i, j);
            sum += std::abs(a);
            out.grad(i, j) = a > 0.0 ? lambda : (a < 0.0 ? -lambda : 0.0);
        }
    out.value = lambda * sum;
    return out;
}

}  // namespace coupled_labels
