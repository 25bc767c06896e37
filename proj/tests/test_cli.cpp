#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "coupled_labels/datamodel.hpp"
#include "coupled_labels/report_io.hpp"
#include "coupled_labels/stratify.hpp"
#include "coupled_labels/synthgen.hpp"

using namespace coupled_labels;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "coupled-labels");
    std::ostringstream out, err;
    const int code = cli::cli_main(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::path(COUPLED_LABELS_TEST_TMP) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string small_spec(std::uint64_t seed, std::size_t n) {
    return R"({"N": )" + std::to_string(n) + R"(, "D": 6, "L": 4, "seed": )" + std::to_string(seed) +
           R"(, "planted_edges": [{"source": 0, "target": 1, "strength": 2.0}]})";
}

}  // namespace

TEST_CASE("gen then split twice gives identical folds") {
    const auto dir = scratch("split");
    write_text_file(dir / "spec.json", small_spec(1, 200));
    auto r = invoke({"gen", "--spec", (dir / "spec.json").string(), "--out", (dir / "data.csv").string()});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "data.csv.spec.json"));
    const auto data = load_dataset(dir / "data.csv");
    CHECK(data.size() == 200);
    const auto snapshot = load_gen_spec(dir / "data.csv.spec.json");
    CHECK(snapshot.base_weights.has_value());

    for (const char* method : {"mis", "bucketed"}) {
        for (const char* name : {"a.csv", "b.csv"}) {
            r = invoke({"split", "--data", (dir / "data.csv").string(), "--k", "3", "--seed", "7",
                     "--method", method, "--out", (dir / name).string()});
            REQUIRE(r.code == 0);
        }
        const auto a = read_text_file(dir / "a.csv");
        CHECK(a == read_text_file(dir / "b.csv"));
        CHECK(folds_from_csv(a, 3).size() == 200);
        CHECK(fs::exists(dir / "a.csv.config.json"));
    }
}

TEST_CASE("validation failures exit 1 and name the problem") {
    auto r = invoke({"split", "--k", "3", "--out", "x.csv"});
    CHECK(r.code == 1);
    CHECK((r.out + r.err).find("--data") != std::string::npos);

    r = invoke({"train", "--bogus"});
    CHECK(r.code == 1);
    r = invoke({});
    CHECK(r.code == 1);

    const auto dir = scratch("bad");
    write_text_file(dir / "bad.csv", "a,label:x,label:y\n1,2,0\n");
    r = invoke({"split", "--data", (dir / "bad.csv").string(), "--out", (dir / "f.csv").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("row 0") != std::string::npos);

    write_text_file(dir / "cfg.json", R"({"ema_decay": 1.5})");
    write_text_file(dir / "ok.csv", "a,label:x,label:y\n1,1,0\n2,0,1\n3,1,1\n");
    r = invoke({"train", "--data", (dir / "ok.csv").string(), "--config", (dir / "cfg.json").string(),
             "--out", (dir / "run").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("ema_decay") != std::string::npos);

    CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("train, report and ablate produce re-readable artifacts") {
    const auto dir = scratch("train");
    write_text_file(dir / "spec.json", small_spec(2, 300));
    REQUIRE(invoke({"gen", "--spec", (dir / "spec.json").string(), "--out", (dir / "data.csv").string()}).code == 0);
    write_text_file(dir / "cfg.json", R"({"epochs": 2, "lr": 0.005, "seed": 3})");

    auto r = invoke({"train", "--data", (dir / "data.csv").string(), "--config", (dir / "cfg.json").string(),
                  "--out", (dir / "run").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("macro") != std::string::npos);
    const auto run = dir / "run";
    for (const char* f : {"report.json", "config.json", "folds.csv", "coupling_mean.csv",
                          "fold0_train_log.csv", "checkpoints/fold0.json"})
        CHECK(fs::exists(run / f));
    CHECK(load_config(run / "config.json").epochs == 2);
    CHECK(folds_from_csv(read_text_file(run / "folds.csv"), 3).size() == 300);
    const auto a = coupling_from_csv(read_text_file(run / "coupling_mean.csv"));
    CHECK(a.rows() == 4);
    CHECK(checkpoint_from_json(read_text_file(run / "checkpoints/fold1.json")).predictor.w2.rows() == 6);

    r = invoke({"report", "--run", run.string()});
    REQUIRE(r.code == 0);
    for (const char* f : {"fold_agreement.csv", "per_label_fold_std.csv", "label_correlation.csv",
                          "coupling_heatmap.csv", "probability_histograms.csv"})
        CHECK(fs::exists(run / "plots" / f));
    CHECK(coupling_from_csv(read_text_file(run / "plots/coupling_heatmap.csv")).rows() == 4);

    r = invoke({"ablate", "--data", (dir / "data.csv").string(), "--config", (dir / "cfg.json").string(),
             "--out", (dir / "ablate").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("with_refinement") != std::string::npos);
    CHECK(r.out.find("without_refinement") != std::string::npos);
    CHECK(fs::exists(dir / "ablate/comparison.json"));
    CHECK(fs::exists(dir / "ablate/config.json"));
    CHECK(invoke({"report", "--run", (dir / "ablate").string()}).code == 0);
}
