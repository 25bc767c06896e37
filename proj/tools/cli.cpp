#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "coupled_labels/datamodel.hpp"
#include "coupled_labels/harness.hpp"
#include "coupled_labels/report_io.hpp"
#include "coupled_labels/stratify.hpp"
#include "coupled_labels/synthgen.hpp"

namespace coupled_labels::cli {

namespace fs = std::filesystem;

namespace {

struct GenArgs {
    std::string spec;
    std::string out;
};

struct SplitArgs {
    std::string data;
    std::size_t k = 3;
    std::uint64_t seed = 0;
    std::string method = "mis";
    std::string out;
};

struct TrainArgs {
    std::string data;
    std::string config;
    std::string test;
    std::string out;
};

ExperimentConfig read_config(const std::string& path) {
    return path.empty() ? validate_config(ExperimentConfig{}) : load_config(path);
}

int run_gen(const GenArgs& a, std::ostream& out) {
    auto spec = load_gen_spec(a.spec);
    const auto data = generate(spec);
    save_dataset(data, a.out);
    // Snapshot with the resolved weights so later draws can share the model.
    spec.base_weights = resolve_base_weights(spec);
    write_text_file(a.out + ".spec.json", gen_spec_to_json(spec) + "\n");
    out << "wrote " << data.size() << " examples (" << data.num_features() << " features, "
        << data.num_labels() << " labels) to " << a.out << "\n";
    return kExitOk;
}

int run_split(const SplitArgs& a, std::ostream& out) {
    const auto data = load_dataset(a.data);
    const auto assignment = a.method == "mis" ? mis_split(data.labels, a.k, a.seed)
                                              : bucketed_kfold(data.labels, a.k, a.seed);
    save_folds(assignment, a.out);
    const auto q = split_quality(data.labels, assignment);
    write_text_file(a.out + ".config.json",
                    std::string("{\n  \"data\": \"") + a.data + "\",\n  \"k\": " +
                        std::to_string(a.k) + ",\n  \"seed\": " + std::to_string(a.seed) +
                        ",\n  \"method\": \"" + a.method + "\"\n}\n");
    out << "fold sizes:";
    for (auto s : q.fold_sizes) out << " " << s;
    out << "\nmax prevalence deviation: " << q.max_deviation << "\n";
    return kExitOk;
}

std::optional<Dataset> read_test(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return load_dataset(path);
}

int run_train(const TrainArgs& a, std::ostream& out) {
    const auto cfg = read_config(a.config);
    const auto data = load_dataset(a.data);
    const auto test = read_test(a.test);
    const auto report = run_experiment(data, test ? &*test : nullptr, cfg);
    write_run_directory(report, a.out);
    out << macro_auc_table(a.out);
    return kExitOk;
}

int run_ablate(const TrainArgs& a, std::ostream& out) {
    const auto cfg = read_config(a.config);
    const auto data = load_dataset(a.data);
    const auto test = read_test(a.test);
    const auto ablation = run_ablation(data, test ? &*test : nullptr, cfg);
    fs::create_directories(a.out);
    write_text_file(fs::path(a.out) / "config.json", config_to_json(cfg) + "\n");
    write_ablation_directory(ablation, a.out);
    out << comparison_table(ablation);
    return kExitOk;
}

int run_report(const std::string& dir, std::ostream& out) {
    const fs::path run(dir);
    if (fs::exists(run / "report.json")) {
        out << macro_auc_table(run);
        write_plot_data(run);
        out << "plot data written to " << (run / "plots").string() << "\n";
        return kExitOk;
    }
    if (fs::exists(run / "comparison.json")) {
        for (const char* sub : {"with_refinement", "without_refinement"}) {
            out << "[" << sub << "]\n" << macro_auc_table(run / sub);
            write_plot_data(run / sub);
        }
        out << "plot data written under " << run.string() << "\n";
        return kExitOk;
    }
    throw ValidationError("report: " + dir + " holds neither report.json nor comparison.json");
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multilabel training with learned sparse label couplings", "coupled-labels"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset with planted couplings");
    gen_cmd->add_option("--spec", gen.spec, "Generator spec JSON")->required()->check(CLI::ExistingFile);
    gen_cmd->add_option("--out", gen.out, "Output dataset CSV")->required();

    SplitArgs split;
    auto* split_cmd = app.add_subcommand("split", "Assign examples to cross-validation folds");
    split_cmd->add_option("--data", split.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    split_cmd->add_option("--k", split.k, "Fold count")->check(CLI::Range(2, 1 << 30));
    split_cmd->add_option("--seed", split.seed, "Random seed");
    split_cmd->add_option("--method", split.method, "mis or bucketed")
        ->check(CLI::IsMember({"mis", "bucketed"}));
    split_cmd->add_option("--out", split.out, "Output folds CSV")->required();

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Cross-validated training and fold ensembling");
    TrainArgs ablate;
    auto* ablate_cmd = app.add_subcommand("ablate", "Train with and without the refinement layer");
    for (auto [cmd, a] : {std::pair{train_cmd, &train}, std::pair{ablate_cmd, &ablate}}) {
        cmd->add_option("--data", a->data, "Training pool CSV")->required()->check(CLI::ExistingFile);
        cmd->add_option("--config", a->config, "Experiment config JSON")->check(CLI::ExistingFile);
        cmd->add_option("--test", a->test, "Optional held-out test CSV")->check(CLI::ExistingFile);
        cmd->add_option("--out", a->out, "Run directory")->required();
    }

    std::string run_dir;
    auto* report_cmd = app.add_subcommand("report", "Print macro-AUC table and write plot data");
    report_cmd->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

    std::vector<std::string> reversed(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(reversed.begin(), reversed.end());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*gen_cmd) return run_gen(gen, out);
        if (*split_cmd) return run_split(split, out);
        if (*train_cmd) return run_train(train, out);
        if (*ablate_cmd) return run_ablate(ablate, out);
        if (*report_cmd) return run_report(run_dir, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "runtime failure: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitValidation;
}

}  // namespace coupled_labels::cli
