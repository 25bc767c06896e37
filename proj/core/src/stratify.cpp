#include "coupled_labels/stratify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "coupled_labels/csv.hpp"

namespace coupled_labels {

FoldAssignment::FoldAssignment(std::size_t k, std::vector<std::size_t> fold_of)
    : k_(k), fold_of_(std::move(fold_of)) {
    if (k_ < 1) throw ValidationError("fold assignment: K must be >= 1");
    for (std::size_t i = 0; i < fold_of_.size(); ++i)
        if (fold_of_[i] >= k_)
            throw ValidationError("fold assignment: example " + std::to_string(i) +
                                  " has fold " + std::to_string(fold_of_[i]) + " >= K");
}

std::vector<std::size_t> FoldAssignment::fold_sizes() const {
    std::vector<std::size_t> sizes(k_, 0);
    for (auto f : fold_of_) ++sizes[f];
    return sizes;
}

std::vector<std::size_t> FoldAssignment::members(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of_.size(); ++i)
        if (fold_of_[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldAssignment::complement(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of_.size(); ++i)
        if (fold_of_[i] != fold) out.push_back(i);
    return out;
}

namespace {

void check_split_args(std::size_t n, std::size_t k) {
    if (k < 2) throw ValidationError("split: K must be >= 2");
    if (k > n)
        throw ValidationError("split: K=" + std::to_string(k) + " exceeds example count " +
                              std::to_string(n));
}

// Index of the maximum of `key` among `candidates`; returns all ties.
template <typename Key>
std::vector<std::size_t> argmax_all(const std::vector<std::size_t>& candidates, Key key) {
    std::vector<std::size_t> best;
    double best_value = -std::numeric_limits<double>::infinity();
    for (auto c : candidates) {
        const double v = key(c);
        if (v > best_value) {
            best_value = v;
            best.assign(1, c);
        } else if (v == best_value) {
            best.push_back(c);
        }
    }
    return best;
}

}  // namespace

FoldAssignment mis_split(const LabelMatrix& labels, std::size_t k, std::uint64_t seed,
                         MisTrace* trace) {
    const std::size_t n = labels.rows();
    const std::size_t l = labels.cols();
    check_split_args(n, k);
    std::mt19937_64 rng(seed);

    const auto counts = labels.positive_counts();
    std::vector<double> example_quota(k, static_cast<double>(n) / static_cast<double>(k));
    // label_quota[f * l + j]
    std::vector<double> label_quota(k * l);
    for (std::size_t f = 0; f < k; ++f)
        for (std::size_t j = 0; j < l; ++j)
            label_quota[f * l + j] = static_cast<double>(counts[j]) / static_cast<double>(k);

    constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);
    std::vector<std::size_t> fold_of(n, kUnassigned);
    std::vector<std::size_t> remaining = counts;
    std::vector<std::size_t> placed(k * l, 0);

    std::vector<std::size_t> all_folds(k);
    std::iota(all_folds.begin(), all_folds.end(), 0);

    auto assign = [&](std::size_t example, std::size_t fold) {
        fold_of[example] = fold;
        example_quota[fold] -= 1.0;
        for (std::size_t j = 0; j < l; ++j) {
            if (!labels.positive(example, j)) continue;
            label_quota[fold * l + j] -= 1.0;
            ++placed[fold * l + j];
            --remaining[j];
        }
    };
    auto pick = [&](std::vector<std::size_t> tied) {
        if (tied.size() == 1) return tied.front();
        std::uniform_int_distribution<std::size_t> dist(0, tied.size() - 1);
        return tied[dist(rng)];
    };

    while (true) {
        std::size_t label = l;
        for (std::size_t j = 0; j < l; ++j)
            if (remaining[j] > 0 && (label == l || remaining[j] < remaining[label])) label = j;
        if (label == l) break;

        if (trace) {
            MisLabelTrace entry;
            entry.label = label;
            entry.free_positives = remaining[label];
            for (std::size_t f = 0; f < k; ++f) entry.preassigned.push_back(placed[f * l + label]);
            trace->order.push_back(std::move(entry));
        }

        for (std::size_t i = 0; i < n; ++i) {
            if (fold_of[i] != kUnassigned || !labels.positive(i, label)) continue;
            auto tied = argmax_all(all_folds, [&](std::size_t f) { return label_quota[f * l + label]; });
            if (tied.size() > 1)
                tied = argmax_all(tied, [&](std::size_t f) { return example_quota[f]; });
            assign(i, pick(std::move(tied)));
        }
    }
    if (trace) {
        // labels whose positives were all placed by rarer ones, or that have none
        std::vector<bool> seen(l, false);
        for (const auto& e : trace->order) seen[e.label] = true;
        for (std::size_t j = 0; j < l; ++j) {
            if (seen[j]) continue;
            MisLabelTrace entry;
            entry.label = j;
            for (std::size_t f = 0; f < k; ++f) entry.preassigned.push_back(placed[f * l + j]);
            trace->order.push_back(std::move(entry));
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (fold_of[i] != kUnassigned) continue;
        assign(i, pick(argmax_all(all_folds, [&](std::size_t f) { return example_quota[f]; })));
    }
    return FoldAssignment(k, std::move(fold_of));
}

bool mis_balance_attainable(const MisLabelTrace& entry, std::size_t total_positives,
                            std::size_t k) {
    const double target = static_cast<double>(total_positives) / static_cast<double>(k);
    std::size_t lifts_needed = 0;
    for (auto pre : entry.preassigned) {
        const double quota_left = target - static_cast<double>(pre);
        if (quota_left < -1.0) return false;
        if (quota_left > 1.0) lifts_needed += static_cast<std::size_t>(std::ceil(quota_left - 1.0));
    }
    return lifts_needed <= entry.free_positives;
}

FoldAssignment bucketed_kfold(const LabelMatrix& labels, std::size_t k, std::uint64_t seed) {
    const std::size_t n = labels.rows();
    check_split_args(n, k);
    std::mt19937_64 rng(seed);

    std::map<std::string, std::vector<std::size_t>> buckets;
    for (std::size_t i = 0; i < n; ++i) {
        std::string key(labels.cols(), '0');
        for (std::size_t j = 0; j < labels.cols(); ++j)
            if (labels.positive(i, j)) key[j] = '1';
        buckets[key].push_back(i);
    }

    // The deal position carries across buckets so that singleton buckets
    // still spread evenly; buckets are visited in shuffled order.
    std::vector<std::vector<std::size_t>*> order;
    for (auto& [key, members] : buckets) order.push_back(&members);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::size_t> fold_of(n, 0);
    std::size_t next = 0;
    for (auto* members : order) {
        std::shuffle(members->begin(), members->end(), rng);
        for (auto i : *members) {
            fold_of[i] = next;
            next = (next + 1) % k;
        }
    }
    return FoldAssignment(k, std::move(fold_of));
}

FoldAssignment random_kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
    check_split_args(n, k);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> fold_of(n, 0);
    for (std::size_t pos = 0; pos < n; ++pos) fold_of[perm[pos]] = pos % k;
    return FoldAssignment(k, std::move(fold_of));
}

SplitQuality split_quality(const LabelMatrix& labels, const FoldAssignment& assignment) {
    if (labels.rows() != assignment.size())
        throw ValidationError("split_quality: label rows and assignment size differ");
    SplitQuality q;
    q.k = assignment.k();
    q.num_labels = labels.cols();
    q.fold_sizes = assignment.fold_sizes();
    q.positives.assign(q.k * q.num_labels, 0);
    for (std::size_t i = 0; i < labels.rows(); ++i)
        for (std::size_t j = 0; j < q.num_labels; ++j)
            if (labels.positive(i, j)) ++q.positives[assignment.fold_of(i) * q.num_labels + j];

    const auto totals = labels.positive_counts();
    const double n = static_cast<double>(labels.rows());
    q.deviation.assign(q.k * q.num_labels, 0.0);
    for (std::size_t f = 0; f < q.k; ++f)
        for (std::size_t j = 0; j < q.num_labels; ++j) {
            const double global = static_cast<double>(totals[j]) / n;
            const double local = q.fold_sizes[f] == 0
                                     ? 0.0
                                     : static_cast<double>(q.positives_at(f, j)) /
                                           static_cast<double>(q.fold_sizes[f]);
            const double dev = std::abs(local - global);
            q.deviation[f * q.num_labels + j] = dev;
            q.max_deviation = std::max(q.max_deviation, dev);
        }
    return q;
}

std::string folds_to_csv(const FoldAssignment& assignment) {
    std::string out = "example_index,fold\n";
    for (std::size_t i = 0; i < assignment.size(); ++i)
        out += std::to_string(i) + "," + std::to_string(assignment.fold_of(i)) + "\n";
    return out;
}

FoldAssignment folds_from_csv(const std::string& text, std::size_t k) {
    const auto lines = csv::split_lines(text);
    if (lines.empty() || lines.front() != "example_index,fold")
        throw ValidationError("folds csv: expected header 'example_index,fold'");
    std::vector<std::size_t> fold_of;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = csv::split_line(lines[r]);
        if (fields.size() != 2)
            throw ValidationError("folds csv: row " + std::to_string(r - 1) + " needs 2 columns");
        std::size_t idx = 0;
        std::size_t fold = 0;
        try {
            idx = std::stoul(fields[0]);
            fold = std::stoul(fields[1]);
        } catch (const std::exception&) {
            throw ValidationError("folds csv: row " + std::to_string(r - 1) + " is not integral");
        }
        if (idx != r - 1)
            throw ValidationError("folds csv: row " + std::to_string(r - 1) +
                                  " has out-of-order example index");
        fold_of.push_back(fold);
    }
    return FoldAssignment(k, std::move(fold_of));
}

void save_folds(const FoldAssignment& assignment, const std::filesystem::path& path) {
    write_text_file(path, folds_to_csv(assignment));
}

}  // namespace coupled_labels
