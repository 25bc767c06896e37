#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace coupled_labels {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

/// Bad input: malformed files, invariant violations, inconsistent shapes.
/// The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// N x L matrix whose entries are exactly 0 or 1.
class LabelMatrix {
public:
    LabelMatrix() = default;
    explicit LabelMatrix(Matrix values);

    [[nodiscard]] std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
    [[nodiscard]] std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }
    [[nodiscard]] bool positive(std::size_t row, std::size_t col) const {
        return values_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) != 0.0;
    }
    [[nodiscard]] const Matrix& values() const { return values_; }
    [[nodiscard]] LabelMatrix select_rows(std::span<const std::size_t> rows) const;
    /// Number of positives per label.
    [[nodiscard]] std::vector<std::size_t> positive_counts() const;

private:
    Matrix values_;
};

/// N x L matrix of probabilities in [0, 1].
class ProbMatrix {
public:
    ProbMatrix() = default;
    explicit ProbMatrix(Matrix values);

    [[nodiscard]] std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
    [[nodiscard]] std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }
    [[nodiscard]] double operator()(std::size_t row, std::size_t col) const {
        return values_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    }
    [[nodiscard]] const Matrix& values() const { return values_; }

private:
    Matrix values_;
};

/// N x L matrix of finite logits. Intermediate values inside a training step
/// are plain Matrix so that non-finite results can be detected and skipped.
class LogitMatrix {
public:
    LogitMatrix() = default;
    explicit LogitMatrix(Matrix values);

    [[nodiscard]] std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
    [[nodiscard]] std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }
    [[nodiscard]] const Matrix& values() const { return values_; }

private:
    Matrix values_;
};

struct Dataset {
    Matrix features;
    LabelMatrix labels;
    std::vector<std::string> feature_names;
    std::vector<std::string> label_names;

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
    [[nodiscard]] std::size_t num_features() const { return static_cast<std::size_t>(features.cols()); }
    [[nodiscard]] std::size_t num_labels() const { return labels.cols(); }

    /// Throws ValidationError unless N >= 1, D >= 1, L >= 2 and the row
    /// counts and name lists agree.
    void validate() const;
    [[nodiscard]] Dataset subset(std::span<const std::size_t> rows) const;
};

std::vector<std::string> default_feature_names(std::size_t d);
std::vector<std::string> default_label_names(std::size_t l);

/// Reads the dataset CSV: a header of D feature columns followed by L
/// columns prefixed "label:", then one row per example.
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset_csv(const std::string& text);
/// Writes doubles in shortest round-trip form so a reload is bit-exact.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
std::string dataset_to_csv(const Dataset& dataset);

enum class LossKind { ASL, WeightedBCE };
enum class PredictorKind { Linear, Mlp1 };

struct AslParams {
    double gamma_pos = 0.0;
    double gamma_neg = 4.0;
    double clip = 0.05;

    friend bool operator==(const AslParams&, const AslParams&) = default;
};

struct PredictorConfig {
    PredictorKind variant = PredictorKind::Linear;
    std::size_t hidden_width = 32;
    double dropout_p = 0.4;

    friend bool operator==(const PredictorConfig&, const PredictorConfig&) = default;
};

struct ExperimentConfig {
    std::size_t K = 3;
    double alpha = 0.3;
    double lambda_l1 = 1e-3;
    LossKind loss_kind = LossKind::ASL;
    AslParams asl;
    double lr = 2e-4;
    double weight_decay = 1e-4;
    std::size_t batch_size = 24;
    std::size_t eval_batch_multiplier = 2;
    std::size_t epochs = 3;
    std::size_t patience = 3;
    double ema_decay = 0.999;
    double grad_clip_norm = 1.0;
    std::uint64_t seed = 0;
    bool refinement_enabled = true;
    PredictorConfig predictor;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Returns cfg unchanged when every invariant holds; otherwise throws a
/// ValidationError naming the offending field.
ExperimentConfig validate_config(const ExperimentConfig& cfg);

/// Absent fields take their defaults; unknown fields are rejected.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a over the canonical JSON form.
std::uint64_t config_hash(const ExperimentConfig& cfg);

std::string to_string(LossKind kind);
std::string to_string(PredictorKind kind);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace coupled_labels
