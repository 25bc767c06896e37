#include "coupled_labels/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "coupled_labels/csv.hpp"
#include "coupled_labels/losses.hpp"

namespace coupled_labels {

Schedule::Schedule(std::size_t warmup, std::size_t total) : warmup_steps(warmup), total_steps(total) {
    if (!(warmup > 0 && warmup < total))
        throw ValidationError("schedule: need 0 < warmup_steps < total_steps (got " +
                              std::to_string(warmup) + ", " + std::to_string(total) + ")");
}

Schedule Schedule::for_epochs(std::size_t steps_per_epoch, std::size_t epochs) {
    const std::size_t total = steps_per_epoch * epochs;
    if (total < 2)
        throw ValidationError("schedule: epochs x steps per epoch must be at least 2");
    return Schedule(std::clamp<std::size_t>(steps_per_epoch, 1, total - 1), total);
}

double lr_at(const Schedule& sched, std::size_t t, double base_lr) {
    if (t < sched.warmup_steps)
        return base_lr * static_cast<double>(t + 1) / static_cast<double>(sched.warmup_steps);
    const double span = static_cast<double>(sched.total_steps - sched.warmup_steps);
    const double progress =
        std::min(1.0, static_cast<double>(t - sched.warmup_steps) / span);
    return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double global_norm(std::span<const Matrix> grads) {
    double sq = 0.0;
    for (const auto& g : grads) sq += g.squaredNorm();
    return std::sqrt(sq);
}

ClipResult clip_global_norm(std::span<Matrix> grads, double max_norm) {
    if (!(max_norm > 0.0)) throw ValidationError("clip_global_norm: max_norm must be > 0");
    ClipResult r;
    r.norm = global_norm(grads);
    r.finite = std::isfinite(r.norm);
    if (r.finite && r.norm > max_norm) {
        const double scale = max_norm / r.norm;
        for (auto& g : grads) g *= scale;
    }
    return r;
}

OptimState make_optim_state(std::span<const ParamRef> params, double weight_decay) {
    OptimState s;
    s.weight_decay = weight_decay;
    for (const auto& p : params) {
        s.m.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
        s.v.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
    }
    return s;
}

void adamw_step(std::span<const ParamRef> params, std::span<const Matrix> grads,
                OptimState& state, double lr) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ValidationError("adamw_step: parameter, gradient and moment counts differ");
    ++state.t;
    const double t = static_cast<double>(state.t);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Matrix& p = *params[k].value;
        const Matrix& g = grads[k];
        if (g.rows() != p.rows() || g.cols() != p.cols())
            throw ValidationError("adamw_step: gradient shape mismatch for " + params[k].name);
        auto& m = state.m[k];
        auto& v = state.v[k];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
        const double wd = params[k].decay ? state.weight_decay : 0.0;
        for (Eigen::Index i = 0; i < p.rows(); ++i)
            for (Eigen::Index j = 0; j < p.cols(); ++j) {
                const double m_hat = m(i, j) / bc1;
                const double v_hat = v(i, j) / bc2;
                p(i, j) -= lr * (m_hat / (std::sqrt(v_hat) + state.eps) + wd * p(i, j));
            }
    }
}

EmaState make_ema_state(std::span<const ParamRef> params, double decay) {
    if (!(decay > 0.0 && decay < 1.0)) throw ValidationError("ema: decay must lie in (0, 1)");
    EmaState e;
    e.decay = decay;
    for (const auto& p : params) e.shadow.push_back(*p.value);
    return e;
}

void ema_update(EmaState& ema, std::span<const ParamRef> params) {
    if (params.size() != ema.shadow.size())
        throw ValidationError("ema_update: parameter count differs from shadow");
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& s = ema.shadow[k];
        const Matrix& p = *params[k].value;
        if (s.rows() != p.rows() || s.cols() != p.cols())
            throw ValidationError("ema_update: shape mismatch for " + params[k].name);
        s = ema.decay * s + (1.0 - ema.decay) * p;
    }
}

ObjectiveResult evaluate_objective(const Matrix& x, const LabelMatrix& y,
                                   const PredictorParams& predictor,
                                   const CouplingMatrix* coupling, const ExperimentConfig& cfg,
                                   const std::vector<double>& pos_weight, Mode mode,
                                   std::mt19937_64* rng) {
    ObjectiveResult out;
    const auto fwd = predict_forward(x, predictor, mode, rng);

    RefineForward refined;
    const Matrix* logits = &fwd.z;
    if (coupling) {
        refined = refine_forward(fwd.z, *coupling);
        logits = &refined.z_prime;
    }

    const LossOutput sup = cfg.loss_kind == LossKind::ASL
                               ? asl_loss(*logits, y, cfg.asl)
                               : weighted_bce_loss(*logits, y, pos_weight);
    out.loss = sup.value;

    Matrix grad_z;
    if (coupling) {
        auto back = refine_backward(sup.grad_logits, refined, *coupling);
        const auto pen = l1_penalty(coupling->a, cfg.lambda_l1);
        out.loss += pen.value;
        out.grad_a = std::move(back.grad_a);
        out.grad_a += pen.grad;
        grad_z = std::move(back.grad_z);
    } else {
        grad_z = sup.grad_logits;
    }
    out.predictor = predict_backward(grad_z, fwd, predictor);
    out.finite = sup.is_finite && std::isfinite(out.loss);
    return out;
}

std::vector<ParamRef> TrainState::parameters() {
    std::vector<ParamRef> refs;
    if (predictor.variant == PredictorKind::Mlp1) {
        refs.push_back({"w1", &predictor.w1, true});
        refs.push_back({"b1", &predictor.b1, false});
    }
    refs.push_back({"w2", &predictor.w2, true});
    refs.push_back({"b2", &predictor.b2, false});
    if (refinement_enabled && coupling_trainable) refs.push_back({"A", &coupling.a, true});
    return refs;
}

PredictorParams TrainState::ema_predictor() const {
    PredictorParams p = predictor;
    std::size_t k = 0;
    if (p.variant == PredictorKind::Mlp1) {
        p.w1 = ema.shadow[k++];
        p.b1 = ema.shadow[k++];
    }
    p.w2 = ema.shadow[k++];
    p.b2 = ema.shadow[k++];
    return p;
}

CouplingMatrix TrainState::ema_coupling() const {
    CouplingMatrix c = coupling;
    if (refinement_enabled && coupling_trainable) {
        c.a = ema.shadow.back();
        enforce_zero_diag(c);
    }
    return c;
}

TrainState make_train_state(const ExperimentConfig& cfg, std::size_t input_dim,
                            std::size_t num_labels, const Schedule& schedule, std::uint64_t seed,
                            std::vector<double> pos_weight, bool coupling_trainable) {
    TrainState s;
    s.rng.seed(seed);
    s.predictor = init_predictor(cfg.predictor, input_dim, num_labels, s.rng);
    s.coupling = CouplingMatrix::zeros(num_labels, cfg.alpha);
    s.refinement_enabled = cfg.refinement_enabled;
    s.coupling_trainable = coupling_trainable;
    s.pos_weight = std::move(pos_weight);
    s.schedule = schedule;
    const auto params = s.parameters();
    s.optim = make_optim_state(params, cfg.weight_decay);
    s.ema = make_ema_state(params, cfg.ema_decay);
    return s;
}

StepLog train_step(const Matrix& x, const LabelMatrix& y, TrainState& state,
                   const ExperimentConfig& cfg) {
    StepLog log;
    log.step = state.step;
    log.lr = lr_at(state.schedule, state.step, cfg.lr);

    const CouplingMatrix* coupling = state.refinement_enabled ? &state.coupling : nullptr;
    auto obj = evaluate_objective(x, y, state.predictor, coupling, cfg, state.pos_weight,
                                  Mode::Train, &state.rng);
    log.loss = obj.loss;

    const auto params = state.parameters();
    std::vector<Matrix> grads;
    grads.reserve(params.size());
    if (state.predictor.variant == PredictorKind::Mlp1) {
        grads.push_back(std::move(obj.predictor.w1));
        grads.push_back(std::move(obj.predictor.b1));
    }
    grads.push_back(std::move(obj.predictor.w2));
    grads.push_back(std::move(obj.predictor.b2));
    if (state.refinement_enabled && state.coupling_trainable) grads.push_back(std::move(obj.grad_a));

    bool finite = obj.finite;
    for (const auto& g : grads) finite = finite && g.allFinite();
    if (!finite) {
        log.grad_norm = std::nan("");
        log.skipped = true;
        ++state.skipped;
        ++state.step;
        return log;
    }

    const auto clip = clip_global_norm(grads, cfg.grad_clip_norm);
    log.grad_norm = clip.norm;
    adamw_step(params, grads, state.optim, log.lr);
    enforce_zero_diag(state.coupling);
    ema_update(state.ema, params);
    ++state.step;
    return log;
}

std::string step_logs_to_csv(std::span<const StepLog> logs) {
    std::string out = "step,lr,loss,grad_norm,skipped\n";
    for (const auto& l : logs) {
        out += std::to_string(l.step) + "," + csv::format_double(l.lr) + "," +
               csv::format_double(l.loss) + "," + csv::format_double(l.grad_norm) + "," +
               (l.skipped ? "1" : "0") + "\n";
    }
    return out;
}

}  // namespace coupled_labels
