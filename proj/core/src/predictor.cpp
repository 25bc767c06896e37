#include "coupled_labels/predictor.hpp"

#include <cmath>

namespace coupled_labels {

std::size_t PredictorParams::input_dim() const {
    return static_cast<std::size_t>(variant == PredictorKind::Linear ? w2.rows() : w1.rows());
}

void PredictorParams::validate() const {
    const auto l = w2.cols();
    if (b2.rows() != 1 || b2.cols() != l) throw ValidationError("predictor: b2 must be 1 x L");
    if (variant == PredictorKind::Mlp1) {
        const auto h = w1.cols();
        if (b1.rows() != 1 || b1.cols() != h) throw ValidationError("predictor: b1 must be 1 x H");
        if (w2.rows() != h) throw ValidationError("predictor: w2 rows must equal hidden width");
    }
    if (!(dropout_p >= 0.0 && dropout_p < 1.0))
        throw ValidationError("predictor: dropout_p must lie in [0, 1)");
    if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite())
        throw ValidationError("predictor: non-finite parameters");
}

namespace {

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

}  // namespace

PredictorParams init_predictor(const PredictorConfig& cfg, std::size_t input_dim,
                               std::size_t num_labels, std::mt19937_64& rng) {
    const auto d = static_cast<Eigen::Index>(input_dim);
    const auto l = static_cast<Eigen::Index>(num_labels);
    PredictorParams p;
    p.variant = cfg.variant;
    p.dropout_p = cfg.dropout_p;
    if (cfg.variant == PredictorKind::Mlp1) {
        const auto h = static_cast<Eigen::Index>(cfg.hidden_width);
        p.w1 = uniform_matrix(d, h, 1.0 / std::sqrt(static_cast<double>(d)), rng);
        p.b1 = Matrix::Zero(1, h);
        p.w2 = uniform_matrix(h, l, 1.0 / std::sqrt(static_cast<double>(h)), rng);
    } else {
        p.w1 = Matrix(0, 0);
        p.b1 = Matrix(0, 0);
        p.w2 = uniform_matrix(d, l, 1.0 / std::sqrt(static_cast<double>(d)), rng);
    }
    p.b2 = Matrix::Zero(1, l);
    return p;
}

PredictForward predict_forward(const Matrix& x, const PredictorParams& params, Mode mode,
                               std::mt19937_64* rng) {
    if (static_cast<std::size_t>(x.cols()) != params.input_dim())
        throw ValidationError("predict_forward: input has " + std::to_string(x.cols()) +
                              " features, predictor expects " +
                              std::to_string(params.input_dim()));
    PredictForward out;
    out.x = x;
    if (params.variant == PredictorKind::Linear) {
        out.z = x * params.w2;
        out.z.rowwise() += params.b2.row(0);
        return out;
    }

    out.hidden_pre = x * params.w1;
    out.hidden_pre.rowwise() += params.b1.row(0);
    out.hidden = out.hidden_pre.cwiseMax(0.0);
    if (mode == Mode::Train && params.dropout_p > 0.0) {
        if (!rng) throw ValidationError("predict_forward: train mode dropout needs an rng");
        std::bernoulli_distribution keep(1.0 - params.dropout_p);
        const double scale = 1.0 / (1.0 - params.dropout_p);
        out.keep_scale.resize(out.hidden.rows(), out.hidden.cols());
        for (Eigen::Index i = 0; i < out.hidden.rows(); ++i)
            for (Eigen::Index j = 0; j < out.hidden.cols(); ++j)
                out.keep_scale(i, j) = keep(*rng) ? scale : 0.0;
        out.hidden = out.hidden.cwiseProduct(out.keep_scale);
    }
    out.z = out.hidden * params.w2;
    out.z.rowwise() += params.b2.row(0);
    return out;
}

PredictorGrads predict_backward(const Matrix& grad_z, const PredictForward& cache,
                                const PredictorParams& params) {
    if (grad_z.rows() != cache.z.rows() || grad_z.cols() != cache.z.cols())
        throw ValidationError("predict_backward: gradient shape does not match forward pass");
    PredictorGrads g;
    g.b2 = grad_z.colwise().sum();
    if (params.variant == PredictorKind::Linear) {
        g.w2 = cache.x.transpose() * grad_z;
        g.x = grad_z * params.w2.transpose();
        g.w1 = Matrix(0, 0);
        g.b1 = Matrix(0, 0);
        return g;
    }
    g.w2 = cache.hidden.transpose() * grad_z;
    Matrix grad_hidden = grad_z * params.w2.transpose();
    if (cache.keep_scale.size() != 0) grad_hidden = grad_hidden.cwiseProduct(cache.keep_scale);
    for (Eigen::Index i = 0; i < grad_hidden.rows(); ++i)
        for (Eigen::Index j = 0; j < grad_hidden.cols(); ++j)
            if (cache.hidden_pre(i, j) <= 0.0) grad_hidden(i, j) = 0.0;
    g.w1 = cache.x.transpose() * grad_hidden;
    g.b1 = grad_hidden.colwise().sum();
    g.x = grad_hidden * params.w1.transpose();
    return g;
}

}  // namespace coupled_labels
