#pragma once

// Independent reference computations used by the unit and acceptance
// suites. Nothing here calls into the library's numerical routines.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "coupled_labels/datamodel.hpp"

namespace oracles {

using coupled_labels::Matrix;

/// Fraction of (positive, negative) pairs ranked correctly, ties worth 1/2.
/// Returns -1 when either class is empty.
double pair_count_auc(const std::vector<double>& scores, const std::vector<double>& targets);

/// Central difference of f with respect to every entry of `at`.
Matrix central_difference(const std::function<double(const Matrix&)>& f, const Matrix& at,
                          double h = 1e-6);

/// max |a - b| / max(1, |a|, |b|) elementwise (relative with an absolute
/// floor for tiny entries).
double max_rel_error(const Matrix& analytic, const Matrix& numeric, double floor = 1e-8);

/// Loop-based Pearson correlation of columns (NaN for zero variance).
Matrix naive_pearson(const Matrix& probs);

/// Per (cell) population std over folds, then mean over rows.
std::vector<double> naive_fold_std(const std::vector<Matrix>& folds);

/// For every cell counts folds voting with the majority at threshold 0.5.
struct NaiveAgreement {
    std::vector<std::size_t> histogram;
    Matrix pairwise;
};
NaiveAgreement naive_agreement(const std::vector<Matrix>& folds, double threshold = 0.5);

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo,
                     double hi);
Matrix random_binary(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double p = 0.5);

/// Central difference of a long-double objective; the step divides the
/// actual perturbed span so the oracle's own error stays near 1e-13.
Matrix central_difference_ld(const std::function<long double(const Matrix&)>& f, const Matrix& at,
                             double h = 1e-6);

/// Long-double reference losses, mean over entries, log floor 1e-12.
long double ref_asl(const Matrix& logits, const Matrix& targets, double gamma_pos, double gamma_neg,
                    double clip);
long double ref_weighted_bce(const Matrix& logits, const Matrix& targets,
                             const std::vector<double>& pos_weight);

/// Full objective in long double: optional ReLU hidden layer (empty w1
/// means linear), one refinement step with a masked diagonal, ASL, plus
/// lambda times the off-diagonal L1 norm of A.
struct RefModel {
    Matrix w1, b1, w2, b2;
    Matrix a;  ///< empty: no refinement
    double alpha = 0.3;
};
long double ref_objective(const Matrix& x, const Matrix& y, const RefModel& m, double gamma_pos,
                          double gamma_neg, double clip, double lambda);

/// sum of w * z' with z' = z + alpha * sigmoid(z) * A, diagonal skipped.
long double ref_refine_dot(const Matrix& z, const Matrix& a, double alpha, const Matrix& w);

/// Plain per-entry binary cross-entropy, mean over entries, log floor 1e-12.
double plain_bce(const Matrix& logits, const Matrix& targets);

}  // namespace oracles
