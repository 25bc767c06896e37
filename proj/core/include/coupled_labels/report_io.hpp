#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "coupled_labels/harness.hpp"

namespace coupled_labels {

/// Deterministic JSON: no timestamps, shortest round-trip doubles, NaN as null.
std::string report_to_json(const RunReport& report);

/// report.json, config.json, folds.csv, coupling_mean.csv, per-fold
/// coupling and training-log CSVs, diagnostics CSVs and checkpoints/.
void write_run_directory(const RunReport& report, const std::filesystem::path& dir);

std::string checkpoint_to_json(const Model& model, const ExperimentConfig& cfg);
/// Returns the model; `config_hash` receives the stored hash when non-null.
Model checkpoint_from_json(const std::string& text, std::uint64_t* config_hash = nullptr);

std::string comparison_to_json(const AblationReport& ablation);
std::string comparison_table(const AblationReport& ablation);
/// with_refinement/ and without_refinement/ run directories plus
/// comparison.json and comparison.csv.
void write_ablation_directory(const AblationReport& ablation, const std::filesystem::path& dir);

/// Fold, out-of-fold and test macro-AUC rows (six decimals) read back from
/// a run directory's report.json.
std::string macro_auc_table(const std::filesystem::path& run_dir);

/// Plot-ready CSVs under run_dir/plots/: fold agreement, per-label fold
/// spread, label correlation, coupling heatmap and probability histograms.
void write_plot_data(const std::filesystem::path& run_dir);

}  // namespace coupled_labels
