#pragma once

#include <optional>
#include <span>
#include <vector>

#include "coupled_labels/datamodel.hpp"

namespace coupled_labels {

/// Mann-Whitney AUC with midranks for ties. Returns nullopt when the targets
/// contain a single class.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const double> targets);

struct AucReport {
    std::vector<std::optional<double>> per_label_auc;
    double macro_auc = 0.0;
    std::vector<std::size_t> skipped_labels;
};

/// Per-label AUC averaged over labels that have both classes. Throws
/// ValidationError when every label is single-class.
AucReport macro_auc(const ProbMatrix& probs, const LabelMatrix& labels);

/// L x L Pearson correlation between probability columns. Entries touching a
/// zero-variance column are NaN (absent).
Matrix pearson_label_correlation(const ProbMatrix& probs);

struct AgreementReport {
    std::size_t num_folds = 0;
    /// majority_histogram[c] = number of cells where exactly c folds agree
    /// with the majority decision (index ranges 0..K, lower half unused).
    std::vector<std::size_t> majority_histogram;
    std::size_t unanimous_cells = 0;
    std::size_t split_cells = 0;
    /// K x K fraction of cells on which folds a and b make the same decision.
    Matrix pairwise_agreement;
};

AgreementReport fold_agreement(std::span<const ProbMatrix> fold_probs, double threshold = 0.5);

/// Population standard deviation across folds per cell, averaged over
/// examples, one value per label.
std::vector<double> per_label_fold_std(std::span<const ProbMatrix> fold_probs);

/// Row-major L x bins counts; bin index floor(p * bins), with p = 1 in the
/// last bin.
std::vector<std::vector<std::size_t>> probability_histograms(const ProbMatrix& probs,
                                                             std::size_t bins = 20);

}  // namespace coupled_labels
