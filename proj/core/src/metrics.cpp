#include "coupled_labels/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coupled_labels {

std::optional<double> roc_auc(std::span<const double> scores, std::span<const double> targets) {
    if (scores.size() != targets.size())
        throw ValidationError("roc_auc: scores and targets differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        // ranks are 1-based; the tie group spans ranks i+1 .. j+1
        const double midrank = 0.5 * static_cast<double>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) {
            if (targets[order[k]] != 0.0) {
                rank_sum_pos += midrank;
                ++n_pos;
            }
        }
        i = j + 1;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;
    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

AucReport macro_auc(const ProbMatrix& probs, const LabelMatrix& labels) {
    if (probs.rows() != labels.rows() || probs.cols() != labels.cols())
        throw ValidationError("macro_auc: probabilities and labels differ in shape");
    AucReport rep;
    double sum = 0.0;
    std::size_t present = 0;
    std::vector<double> scores(probs.rows());
    std::vector<double> targets(probs.rows());
    for (std::size_t j = 0; j < probs.cols(); ++j) {
        for (std::size_t i = 0; i < probs.rows(); ++i) {
            scores[i] = probs(i, j);
            targets[i] = labels.positive(i, j) ? 1.0 : 0.0;
        }
        auto auc = roc_auc(scores, targets);
        rep.per_label_auc.push_back(auc);
        if (auc) {
            sum += *auc;
            ++present;
        } else {
            rep.skipped_labels.push_back(j);
        }
    }
    if (present == 0) throw ValidationError("macro_auc: every label has a single class");
    rep.macro_auc = sum / static_cast<double>(present);
    return rep;
}

Matrix pearson_label_correlation(const ProbMatrix& probs) {
    const auto& p = probs.values();
    const Eigen::Index n = p.rows();
    const Eigen::Index l = p.cols();
    Matrix out(l, l);
    if (n == 0) {
        out.setConstant(std::nan(""));
        return out;
    }
    const RowVector mean = p.colwise().mean();
    Matrix centered = p.rowwise() - mean;
    const Matrix cov = centered.transpose() * centered;
    for (Eigen::Index a = 0; a < l; ++a)
        for (Eigen::Index b = 0; b < l; ++b) {
            const double denom = std::sqrt(cov(a, a) * cov(b, b));
            if (!(denom > 0.0)) {
                out(a, b) = std::nan("");
                continue;
            }
            out(a, b) = a == b ? 1.0 : std::clamp(cov(a, b) / denom, -1.0, 1.0);
        }
    return out;
}

namespace {

void check_fold_shapes(std::span<const ProbMatrix> fold_probs, const char* who) {
    if (fold_probs.empty()) throw ValidationError(std::string(who) + ": no fold predictions");
    for (const auto& f : fold_probs)
        if (f.rows() != fold_probs.front().rows() || f.cols() != fold_probs.front().cols())
            throw ValidationError(std::string(who) + ": fold predictions differ in shape");
}

}  // namespace

AgreementReport fold_agreement(std::span<const ProbMatrix> fold_probs, double threshold) {
    check_fold_shapes(fold_probs, "fold_agreement");
    const std::size_t k = fold_probs.size();
    const std::size_t n = fold_probs.front().rows();
    const std::size_t l = fold_probs.front().cols();

    AgreementReport rep;
    rep.num_folds = k;
    rep.majority_histogram.assign(k + 1, 0);
    Matrix same = Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    std::vector<bool> decision(k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < l; ++j) {
            std::size_t positives = 0;
            for (std::size_t f = 0; f < k; ++f) {
                decision[f] = fold_probs[f](i, j) >= threshold;
                positives += decision[f] ? 1 : 0;
            }
            const std::size_t majority = std::max(positives, k - positives);
            ++rep.majority_histogram[majority];
            if (majority == k) ++rep.unanimous_cells;
            else ++rep.split_cells;
            for (std::size_t a = 0; a < k; ++a)
                for (std::size_t b = 0; b < k; ++b)
                    if (decision[a] == decision[b])
                        same(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += 1.0;
        }
    const double cells = static_cast<double>(n * l);
    rep.pairwise_agreement = cells > 0 ? Matrix(same / cells) : same;
    return rep;
}

std::vector<double> per_label_fold_std(std::span<const ProbMatrix> fold_probs) {
    check_fold_shapes(fold_probs, "per_label_fold_std");
    const std::size_t k = fold_probs.size();
    const std::size_t n = fold_probs.front().rows();
    const std::size_t l = fold_probs.front().cols();
    std::vector<double> out(l, 0.0);
    if (n == 0) return out;
    for (std::size_t j = 0; j < l; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            // shifted by fold 0 so identical folds give exactly zero
            const double ref = fold_probs[0](i, j);
            double mean = 0.0;
            for (std::size_t f = 0; f < k; ++f) mean += fold_probs[f](i, j) - ref;
            mean /= static_cast<double>(k);
            double var = 0.0;
            for (std::size_t f = 0; f < k; ++f) {
                const double d = (fold_probs[f](i, j) - ref) - mean;
                var += d * d;
            }
            acc += std::sqrt(var / static_cast<double>(k));
        }
        out[j] = acc / static_cast<double>(n);
    }
    return out;
}

std::vector<std::vector<std::size_t>> probability_histograms(const ProbMatrix& probs,
                                                             std::size_t bins) {
    if (bins < 1) throw ValidationError("probability_histograms: bins must be >= 1");
    std::vector<std::vector<std::size_t>> out(probs.cols(), std::vector<std::size_t>(bins, 0));
    for (std::size_t j = 0; j < probs.cols(); ++j)
        for (std::size_t i = 0; i < probs.rows(); ++i) {
            const double p = probs(i, j);
            auto bin = static_cast<std::size_t>(std::floor(p * static_cast<double>(bins)));
            ++out[j][std::min(bin, bins - 1)];
        }
    return out;
}

}  // namespace coupled_labels
