#include "coupled_labels/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "coupled_labels/csv.hpp"

namespace coupled_labels {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            if (std::isfinite(v)) row.push_back(v);
            else row.push_back(nullptr);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from(const json& rows, const char* what) {
    if (!rows.is_array()) throw ValidationError(std::string(what) + ": expected an array of rows");
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = r == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        const auto& row = rows.at(static_cast<std::size_t>(i));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c)
            throw ValidationError(std::string(what) + ": ragged matrix");
        for (Eigen::Index j = 0; j < c; ++j) {
            const auto& v = row.at(static_cast<std::size_t>(j));
            m(i, j) = v.is_null() ? std::nan("") : v.get<double>();
        }
    }
    return m;
}

json auc_json(const AucReport& rep) {
    json per = json::array();
    for (const auto& a : rep.per_label_auc) {
        if (a) per.push_back(*a);
        else per.push_back(nullptr);
    }
    return {{"macro_auc", rep.macro_auc}, {"per_label_auc", per},
            {"skipped_labels", rep.skipped_labels}};
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fixed6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

json summary_json(const CouplingSignSummary& s, const std::vector<std::string>& names) {
    json strongest = json::array();
    for (const auto& [i, j, v] : s.strongest)
        strongest.push_back({{"source", names.at(i)}, {"target", names.at(j)}, {"value", v}});
    return {{"positive", s.positive},
            {"negative", s.negative},
            {"near_zero", s.near_zero},
            {"threshold", s.threshold},
            {"strongest", strongest}};
}

json report_json(const RunReport& report) {
    json j = json::object();
    j["config"] = json::parse(config_to_json(report.config));
    j["config_hash"] = hex64(config_hash(report.config));
    j["label_names"] = report.label_names;
    j["fold_sizes"] = report.assignment.fold_sizes();

    json folds = json::array();
    for (const auto& fr : report.folds) {
        json epochs = json::array();
        for (const auto& e : fr.epochs)
            epochs.push_back({{"epoch", e.epoch},
                              {"val_macro_auc", e.val_macro_auc},
                              {"mean_train_loss", e.mean_train_loss},
                              {"skipped_steps", e.skipped_steps}});
        std::size_t skipped = 0;
        for (const auto& s : fr.log) skipped += s.skipped ? 1 : 0;
        json f = {{"fold", fr.fold},
                  {"best_epoch", fr.best_epoch},
                  {"best_val_macro_auc", fr.best_val_macro_auc},
                  {"stopped_early", fr.stopped_early},
                  {"steps", fr.log.size()},
                  {"skipped_steps", skipped},
                  {"epochs", epochs},
                  {"validation", auc_json(fr.val_report)}};
        if (fr.checkpoint.coupling) f["coupling"] = matrix_json(fr.checkpoint.coupling->a);
        folds.push_back(std::move(f));
    }
    j["folds"] = folds;
    j["out_of_fold"] = auc_json(report.oof_report);
    j["test"] = report.test_report ? auc_json(*report.test_report) : json(nullptr);
    j["headline_macro_auc"] = report.headline_macro_auc();
    j["mean_coupling"] = matrix_json(report.mean_coupling);
    j["coupling_summary"] = summary_json(summarize_coupling(report.mean_coupling), report.label_names);

    const auto& d = report.diagnostics;
    json hist = json::array();
    for (const auto& h : d.histograms) hist.push_back(h);
    j["diagnostics"] = {
        {"source", d.source},
        {"std_convention", "population"},
        {"agreement_threshold", 0.5},
        {"fold_agreement",
         {{"majority_histogram", d.agreement.majority_histogram},
          {"unanimous_cells", d.agreement.unanimous_cells},
          {"split_cells", d.agreement.split_cells},
          {"pairwise", matrix_json(d.agreement.pairwise_agreement)}}},
        {"per_label_fold_std", d.per_label_std},
        {"label_correlation", matrix_json(d.correlation)},
        {"histograms", {{"bins", d.histograms.empty() ? 0 : d.histograms.front().size()},
                        {"counts", hist}}}};
    return j;
}

json read_json_file(const fs::path& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": invalid JSON: " + e.what());
    }
}

std::vector<std::string> fold_names(std::size_t k) {
    std::vector<std::string> names;
    for (std::size_t f = 0; f < k; ++f) names.push_back("fold" + std::to_string(f));
    return names;
}

}  // namespace

std::string report_to_json(const RunReport& report) { return report_json(report).dump(2) + "\n"; }

std::string checkpoint_to_json(const Model& model, const ExperimentConfig& cfg) {
    const auto& p = model.predictor;
    json j = {{"config_hash", hex64(config_hash(cfg))},
              {"variant", to_string(p.variant)},
              {"dropout_p", p.dropout_p},
              {"w2", matrix_json(p.w2)},
              {"b2", matrix_json(p.b2)}};
    if (p.variant == PredictorKind::Mlp1) {
        j["w1"] = matrix_json(p.w1);
        j["b1"] = matrix_json(p.b1);
    }
    if (model.coupling) {
        j["alpha"] = model.coupling->alpha;
        j["A"] = matrix_json(model.coupling->a);
    }
    return j.dump(2) + "\n";
}

Model checkpoint_from_json(const std::string& text, std::uint64_t* hash) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("checkpoint: invalid JSON: ") + e.what());
    }
    Model m;
    const auto variant = j.at("variant").get<std::string>();
    if (variant == "linear") m.predictor.variant = PredictorKind::Linear;
    else if (variant == "mlp1") m.predictor.variant = PredictorKind::Mlp1;
    else throw ValidationError("checkpoint: unknown variant '" + variant + "'");
    m.predictor.dropout_p = j.at("dropout_p").get<double>();
    m.predictor.w2 = matrix_from(j.at("w2"), "checkpoint w2");
    m.predictor.b2 = matrix_from(j.at("b2"), "checkpoint b2");
    if (m.predictor.variant == PredictorKind::Mlp1) {
        m.predictor.w1 = matrix_from(j.at("w1"), "checkpoint w1");
        m.predictor.b1 = matrix_from(j.at("b1"), "checkpoint b1");
    }
    m.predictor.validate();
    if (j.contains("A")) {
        CouplingMatrix c;
        c.alpha = j.at("alpha").get<double>();
        c.a = matrix_from(j.at("A"), "checkpoint A");
        m.coupling = std::move(c);
    }
    if (hash) *hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    return m;
}

void write_run_directory(const RunReport& report, const fs::path& dir) {
    fs::create_directories(dir / "checkpoints");
    write_text_file(dir / "report.json", report_to_json(report));
    write_text_file(dir / "config.json", config_to_json(report.config) + "\n");
    write_text_file(dir / "folds.csv", folds_to_csv(report.assignment));
    write_text_file(dir / "coupling_mean.csv", coupling_to_csv(report.mean_coupling, report.label_names));
    for (const auto& fr : report.folds) {
        const auto tag = "fold" + std::to_string(fr.fold);
        write_text_file(dir / (tag + "_train_log.csv"), step_logs_to_csv(fr.log));
        write_text_file(dir / "checkpoints" / (tag + ".json"), checkpoint_to_json(fr.checkpoint, report.config));
        if (fr.checkpoint.coupling)
            write_text_file(dir / (tag + "_coupling.csv"),
                            coupling_to_csv(fr.checkpoint.coupling->a, report.label_names));
    }
    write_text_file(dir / "oof_predictions.csv",
                    csv::matrix_to_csv(report.oof_probs.values(), report.label_names));
    if (report.test_probs)
        write_text_file(dir / "test_predictions.csv",
                        csv::matrix_to_csv(report.test_probs->values(), report.label_names));

    const auto& d = report.diagnostics;
    write_text_file(dir / "label_correlation.csv",
                    csv::matrix_to_csv(d.correlation, report.label_names, report.label_names, "label"));
    std::string spread = "label,mean_fold_std\n";
    for (std::size_t j = 0; j < d.per_label_std.size(); ++j)
        spread += report.label_names[j] + "," + csv::format_double(d.per_label_std[j]) + "\n";
    write_text_file(dir / "per_label_fold_std.csv", spread);
    const auto names = fold_names(d.agreement.num_folds);
    write_text_file(dir / "fold_agreement.csv",
                    csv::matrix_to_csv(d.agreement.pairwise_agreement, names, names, "fold"));
}

std::string comparison_to_json(const AblationReport& ab) {
    const auto& on = ab.with_refinement;
    const auto& off = ab.without_refinement;
    json j = {{"metric", on.test_report ? "test_ensemble_macro_auc" : "out_of_fold_macro_auc"},
              {"with_refinement", on.headline_macro_auc()},
              {"without_refinement", off.headline_macro_auc()},
              {"delta", on.headline_macro_auc() - off.headline_macro_auc()},
              {"coupling_summary", summary_json(summarize_coupling(on.mean_coupling), on.label_names)}};
    return j.dump(2) + "\n";
}

std::string comparison_table(const AblationReport& ab) {
    const auto& on = ab.with_refinement;
    const auto& off = ab.without_refinement;
    std::ostringstream out;
    out << "variant,macro_auc\n";
    out << "with_refinement," << fixed6(on.headline_macro_auc()) << "\n";
    out << "without_refinement," << fixed6(off.headline_macro_auc()) << "\n";
    const auto s = summarize_coupling(on.mean_coupling);
    out << "\ncoupling signs (|A| >= " << s.threshold << "): " << s.positive << " positive, "
        << s.negative << " negative, " << s.near_zero << " near zero\n";
    out << "strongest couplings:\n";
    for (const auto& [i, j, v] : s.strongest)
        out << "  " << on.label_names.at(i) << " -> " << on.label_names.at(j) << "  " << fixed6(v)
            << "\n";
    return out.str();
}

void write_ablation_directory(const AblationReport& ab, const fs::path& dir) {
    write_run_directory(ab.with_refinement, dir / "with_refinement");
    write_run_directory(ab.without_refinement, dir / "without_refinement");
    write_text_file(dir / "comparison.json", comparison_to_json(ab));
    std::string table = "variant,macro_auc\n";
    table += "with_refinement," + csv::format_double(ab.with_refinement.headline_macro_auc()) + "\n";
    table += "without_refinement," + csv::format_double(ab.without_refinement.headline_macro_auc()) + "\n";
    write_text_file(dir / "comparison.csv", table);
}

std::string macro_auc_table(const fs::path& run_dir) {
    const auto j = read_json_file(run_dir / "report.json");
    std::ostringstream out;
    out << "split,macro_auc\n";
    for (const auto& f : j.at("folds"))
        out << "fold" << f.at("fold").get<std::size_t>() << "_val,"
            << fixed6(f.at("best_val_macro_auc").get<double>()) << "\n";
    out << "out_of_fold," << fixed6(j.at("out_of_fold").at("macro_auc").get<double>()) << "\n";
    if (!j.at("test").is_null())
        out << "test_ensemble," << fixed6(j.at("test").at("macro_auc").get<double>()) << "\n";
    return out.str();
}

void write_plot_data(const fs::path& run_dir) {
    const auto j = read_json_file(run_dir / "report.json");
    const auto names = j.at("label_names").get<std::vector<std::string>>();
    const auto& d = j.at("diagnostics");
    const fs::path out = run_dir / "plots";
    fs::create_directories(out);

    const auto& agree = d.at("fold_agreement");
    std::string agreement = "folds_agreeing_with_majority,cells\n";
    const auto hist = agree.at("majority_histogram").get<std::vector<std::size_t>>();
    const std::size_t k = hist.empty() ? 0 : hist.size() - 1;
    for (std::size_t c = (k + 1) / 2; c < hist.size(); ++c)
        agreement += std::to_string(c) + "," + std::to_string(hist[c]) + "\n";
    write_text_file(out / "fold_agreement.csv", agreement);
    const auto fnames = fold_names(k);
    write_text_file(out / "fold_pairwise_agreement.csv",
                    csv::matrix_to_csv(matrix_from(agree.at("pairwise"), "pairwise"), fnames, fnames, "fold"));

    const auto spread = d.at("per_label_fold_std").get<std::vector<double>>();
    std::string spread_csv = "label,mean_fold_std\n";
    for (std::size_t i = 0; i < spread.size(); ++i)
        spread_csv += names.at(i) + "," + csv::format_double(spread[i]) + "\n";
    write_text_file(out / "per_label_fold_std.csv", spread_csv);

    write_text_file(out / "label_correlation.csv",
                    csv::matrix_to_csv(matrix_from(d.at("label_correlation"), "label_correlation"),
                                       names, names, "label"));
    write_text_file(out / "coupling_heatmap.csv",
                    coupling_to_csv(matrix_from(j.at("mean_coupling"), "mean_coupling"), names));

    const auto& h = d.at("histograms");
    const auto bins = h.at("bins").get<std::size_t>();
    std::string hist_csv = "label,bin,bin_low,bin_high,count\n";
    std::size_t label = 0;
    for (const auto& counts : h.at("counts")) {
        for (std::size_t b = 0; b < bins; ++b) {
            const double lo = static_cast<double>(b) / static_cast<double>(bins);
            const double hi = static_cast<double>(b + 1) / static_cast<double>(bins);
            hist_csv += names.at(label) + "," + std::to_string(b) + "," + csv::format_double(lo) +
                        "," + csv::format_double(hi) + "," +
                        std::to_string(counts.at(b).get<std::size_t>()) + "\n";
        }
        ++label;
    }
    write_text_file(out / "probability_histograms.csv", hist_csv);
}

}  // namespace coupled_labels
