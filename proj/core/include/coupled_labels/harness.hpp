#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coupled_labels/coupling.hpp"
#include "coupled_labels/datamodel.hpp"
#include "coupled_labels/metrics.hpp"
#include "coupled_labels/optim.hpp"
#include "coupled_labels/predictor.hpp"
#include "coupled_labels/stratify.hpp"

namespace coupled_labels {

/// A trained model ready for inference. No coupling means the refinement
/// layer is absent and logits go straight to the sigmoid.
struct Model {
    PredictorParams predictor;
    std::optional<CouplingMatrix> coupling;
};

/// Sigmoid of the (refined) logits in eval mode, computed in chunks of
/// `batch_rows` rows.
ProbMatrix predict_probs(const Model& model, const Matrix& x, std::size_t batch_rows = 0);

using ViewTransform = std::function<Matrix(const Matrix&)>;

struct PredictionView {
    std::string name;
    ViewTransform transform;
};

PredictionView identity_view();

/// Mirror for features that are a flattened row-major height x width x
/// channels image: reverses the column order inside every image row.
PredictionView horizontal_flip_view(std::size_t height, std::size_t width, std::size_t channels);

/// Named input transforms available to prediction. Starts with "identity".
class ViewRegistry {
public:
    ViewRegistry();
    void add(PredictionView view);
    [[nodiscard]] const PredictionView& get(const std::string& name) const;
    [[nodiscard]] std::vector<std::string> names() const;

private:
    std::vector<PredictionView> views_;
};

/// Probabilities averaged over views. The first view must be "identity".
ProbMatrix predict_with_views(const Model& model, const Matrix& inputs,
                              std::span<const PredictionView> views, std::size_t batch_rows = 0);

struct EpochRecord {
    std::size_t epoch = 0;
    double val_macro_auc = 0.0;
    double mean_train_loss = 0.0;
    std::size_t skipped_steps = 0;
};

struct FoldResult {
    std::size_t fold = 0;
    double best_val_macro_auc = 0.0;
    std::size_t best_epoch = 0;
    bool stopped_early = false;
    Model checkpoint;  ///< EMA weights at the best epoch
    AucReport val_report;
    ProbMatrix val_probs;
    std::vector<std::size_t> val_indices;
    std::vector<EpochRecord> epochs;
    std::vector<StepLog> log;
};

struct RunOptions {
    std::vector<PredictionView> views{identity_view()};
    /// 0: COUPLED_LABELS_THREADS if set, otherwise the hardware concurrency.
    std::size_t threads = 0;
    /// Keeps A at zero (excluded from optimisation) while the refinement
    /// layer stays in the graph.
    bool freeze_coupling = false;
};

/// Fold worker count honouring COUPLED_LABELS_THREADS.
std::size_t resolve_threads(std::size_t requested, std::size_t folds);

/// Trains on `train` and selects the best epoch by validation macro-AUC
/// (EMA weights). Stops after `patience` epochs without improvement.
FoldResult run_fold(const Dataset& train, const Dataset& val, const ExperimentConfig& cfg,
                    std::uint64_t seed, std::size_t fold_index = 0,
                    const RunOptions& options = {});

struct Diagnostics {
    /// "test" when a test set was supplied, otherwise "out_of_fold"; the
    /// agreement and spread statistics then use every fold model on the
    /// whole training pool.
    std::string source;
    AgreementReport agreement;
    std::vector<double> per_label_std;
    Matrix correlation;
    std::vector<std::vector<std::size_t>> histograms;
};

struct RunReport {
    ExperimentConfig config;
    std::vector<std::string> label_names;
    FoldAssignment assignment;
    std::vector<FoldResult> folds;
    ProbMatrix oof_probs;
    AucReport oof_report;
    std::vector<ProbMatrix> fold_eval_probs;  ///< each fold model on the evaluation set
    std::optional<ProbMatrix> test_probs;    ///< fold-ensemble mean on the test set
    std::optional<AucReport> test_report;
    Matrix mean_coupling;
    Diagnostics diagnostics;

    /// Headline number: ensemble test macro-AUC when a test set exists,
    /// out-of-fold macro-AUC otherwise.
    [[nodiscard]] double headline_macro_auc() const;
};

/// Elementwise arithmetic mean.
ProbMatrix ensemble_mean(std::span<const ProbMatrix> fold_probs);

/// MIS split, one run_fold per fold (in parallel), fold-ensemble prediction
/// and diagnostics.
RunReport run_experiment(const Dataset& data, const Dataset* test, const ExperimentConfig& cfg,
                         const RunOptions& options = {});

struct CouplingSignSummary {
    std::size_t positive = 0;
    std::size_t negative = 0;
    std::size_t near_zero = 0;  ///< |A_ij| < threshold
    double threshold = 0.05;
    /// Largest entries by value: (source, target, value).
    std::vector<std::tuple<std::size_t, std::size_t, double>> strongest;
};

CouplingSignSummary summarize_coupling(const Matrix& a, double threshold = 0.05,
                                       std::size_t top = 5);

struct AblationReport {
    RunReport with_refinement;
    RunReport without_refinement;
};

AblationReport run_ablation(const Dataset& data, const Dataset* test, const ExperimentConfig& cfg,
                            const RunOptions& options = {});

}  // namespace coupled_labels
