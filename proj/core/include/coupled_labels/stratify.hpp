#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coupled_labels/datamodel.hpp"

namespace coupled_labels {

/// Partition of N examples into K folds.
class FoldAssignment {
public:
    FoldAssignment() = default;
    FoldAssignment(std::size_t k, std::vector<std::size_t> fold_of);

    [[nodiscard]] std::size_t k() const { return k_; }
    [[nodiscard]] std::size_t size() const { return fold_of_.size(); }
    [[nodiscard]] std::size_t fold_of(std::size_t example) const { return fold_of_[example]; }
    [[nodiscard]] const std::vector<std::size_t>& folds() const { return fold_of_; }
    [[nodiscard]] std::vector<std::size_t> fold_sizes() const;
    /// Example indices held out in `fold`, ascending.
    [[nodiscard]] std::vector<std::size_t> members(std::size_t fold) const;
    /// Complement of members(fold), ascending.
    [[nodiscard]] std::vector<std::size_t> complement(std::size_t fold) const;

    friend bool operator==(const FoldAssignment&, const FoldAssignment&) = default;

private:
    std::size_t k_ = 0;
    std::vector<std::size_t> fold_of_;
};

/// What the iterative stratifier saw when it reached a label: how many of
/// that label's positives each fold already held (assigned while handling
/// rarer labels), and how many were still free.
struct MisLabelTrace {
    std::size_t label = 0;
    std::vector<std::size_t> preassigned;
    std::size_t free_positives = 0;
};

struct MisTrace {
    std::vector<MisLabelTrace> order;
};

/// Multilabel iterative stratification. Rarest remaining label first (ties:
/// lowest index); each of its unassigned positives goes to the fold with the
/// largest remaining quota for that label, then the largest remaining example
/// quota, then a seeded uniform choice. Label-free examples go last by
/// example quota.
FoldAssignment mis_split(const LabelMatrix& labels, std::size_t k, std::uint64_t seed,
                         MisTrace* trace = nullptr);

/// Groups examples by exact label combination and deals each shuffled
/// bucket round-robin across folds.
FoldAssignment bucketed_kfold(const LabelMatrix& labels, std::size_t k, std::uint64_t seed);

/// Uniform random K-fold of near-equal sizes; the baseline MIS is judged against.
FoldAssignment random_kfold(std::size_t n, std::size_t k, std::uint64_t seed);

/// True when the greedy water-fill can place every fold's count for this
/// label within one of its quota: no fold is already over quota by more
/// than one, and enough free positives remain to lift every fold to within
/// one of its quota.
bool mis_balance_attainable(const MisLabelTrace& entry, std::size_t total_positives,
                            std::size_t k);

struct SplitQuality {
    std::size_t k = 0;
    std::size_t num_labels = 0;
    std::vector<std::size_t> fold_sizes;
    /// Row-major K x L: positives of label l in fold f.
    std::vector<std::size_t> positives;
    /// Row-major K x L: |fold prevalence - global prevalence|.
    std::vector<double> deviation;
    double max_deviation = 0.0;

    [[nodiscard]] double deviation_at(std::size_t fold, std::size_t label) const {
        return deviation[fold * num_labels + label];
    }
    [[nodiscard]] std::size_t positives_at(std::size_t fold, std::size_t label) const {
        return positives[fold * num_labels + label];
    }
};

SplitQuality split_quality(const LabelMatrix& labels, const FoldAssignment& assignment);

/// CSV with header "example_index,fold".
std::string folds_to_csv(const FoldAssignment& assignment);
FoldAssignment folds_from_csv(const std::string& text, std::size_t k);
void save_folds(const FoldAssignment& assignment, const std::filesystem::path& path);

}  // namespace coupled_labels
