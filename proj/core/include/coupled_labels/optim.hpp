#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "coupled_labels/coupling.hpp"
#include "coupled_labels/datamodel.hpp"
#include "coupled_labels/predictor.hpp"

namespace coupled_labels {

/// Non-owning view of one trainable tensor.
struct ParamRef {
    std::string name;
    Matrix* value = nullptr;
    bool decay = true;  ///< weight decay applies (false for biases)
};

/// Per-step cosine decay after a linear warm-up.
struct Schedule {
    std::size_t warmup_steps = 1;
    std::size_t total_steps = 2;

    Schedule() = default;
    /// Requires 0 < warmup_steps < total_steps.
    Schedule(std::size_t warmup, std::size_t total);
    /// Warm-up spans the first epoch, clamped so at least one cosine step remains.
    static Schedule for_epochs(std::size_t steps_per_epoch, std::size_t epochs);
};

/// t < warmup: base * (t + 1) / warmup; afterwards base * (1 + cos(pi * progress)) / 2
/// with progress = (t - warmup) / (total - warmup).
double lr_at(const Schedule& sched, std::size_t t, double base_lr);

double global_norm(std::span<const Matrix> grads);

struct ClipResult {
    double norm = 0.0;  ///< before scaling
    bool finite = true;
};

/// Scales every gradient by max_norm / g when the global L2 norm g exceeds
/// max_norm. A non-finite norm leaves the gradients untouched and reports
/// finite = false.
ClipResult clip_global_norm(std::span<Matrix> grads, double max_norm);

struct OptimState {
    std::size_t t = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

OptimState make_optim_state(std::span<const ParamRef> params, double weight_decay);

/// Decoupled weight decay Adam:
/// p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + wd * p), wd only where decay is set.
void adamw_step(std::span<const ParamRef> params, std::span<const Matrix> grads,
                OptimState& state, double lr);

struct EmaState {
    std::vector<Matrix> shadow;
    double decay = 0.999;
};

EmaState make_ema_state(std::span<const ParamRef> params, double decay);
/// shadow <- d * shadow + (1 - d) * param.
void ema_update(EmaState& ema, std::span<const ParamRef> params);

/// Loss value and gradients for one batch through predictor -> optional
/// refinement -> supervised loss + L1 coupling penalty.
struct ObjectiveResult {
    double loss = 0.0;
    bool finite = true;
    PredictorGrads predictor;
    Matrix grad_a;  ///< empty when no coupling is supplied
};

ObjectiveResult evaluate_objective(const Matrix& x, const LabelMatrix& y,
                                   const PredictorParams& predictor,
                                   const CouplingMatrix* coupling, const ExperimentConfig& cfg,
                                   const std::vector<double>& pos_weight, Mode mode,
                                   std::mt19937_64* rng);

struct StepLog {
    std::size_t step = 0;
    double lr = 0.0;
    double loss = 0.0;
    double grad_norm = 0.0;
    bool skipped = false;
};

/// Everything one training run owns.
struct TrainState {
    PredictorParams predictor;
    CouplingMatrix coupling;
    bool refinement_enabled = true;
    bool coupling_trainable = true;
    std::vector<double> pos_weight;
    Schedule schedule;
    OptimState optim;
    EmaState ema;
    std::size_t step = 0;
    std::size_t skipped = 0;
    std::mt19937_64 rng;

    /// Live trainable tensors in a fixed order: w1, b1 (mlp1), w2, b2, then
    /// A when refinement is enabled and the coupling is trainable.
    std::vector<ParamRef> parameters();
    /// EMA weights as a predictor/coupling pair, same layout as the live model.
    [[nodiscard]] PredictorParams ema_predictor() const;
    [[nodiscard]] CouplingMatrix ema_coupling() const;
};

TrainState make_train_state(const ExperimentConfig& cfg, std::size_t input_dim,
                            std::size_t num_labels, const Schedule& schedule, std::uint64_t seed,
                            std::vector<double> pos_weight, bool coupling_trainable = true);

/// Forward, backward, skip on non-finite loss or gradients, clip, AdamW with
/// the scheduled rate, zero-diagonal projection, EMA update. The schedule
/// clock advances on skipped steps as well.
StepLog train_step(const Matrix& x, const LabelMatrix& y, TrainState& state,
                   const ExperimentConfig& cfg);

std::string step_logs_to_csv(std::span<const StepLog> logs);

}  // namespace coupled_labels
