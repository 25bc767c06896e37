#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <set>

#include "coupled_labels/harness.hpp"
#include "coupled_labels/report_io.hpp"
#include "coupled_labels/synthgen.hpp"
#include "oracles.hpp"

using namespace coupled_labels;

namespace {

Dataset planted(std::uint64_t seed, std::size_t n) {
    auto s = default_gen_spec(seed);
    s.n = n;
    s.l = 6;
    s.d = 8;
    return generate(s);
}

ExperimentConfig quick() {
    ExperimentConfig cfg;
    cfg.lr = 5e-3;
    cfg.epochs = 3;
    cfg.seed = 4;
    return cfg;
}

Model random_model(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Model m;
    m.predictor = init_predictor(PredictorConfig{}, 4, 3, rng);
    CouplingMatrix cm{oracles::random_matrix(rng, 3, 3, -1, 1), 0.3};
    cm.a.diagonal().setZero();
    m.coupling = cm;
    return m;
}

}  // namespace

TEST_CASE("identity views reproduce plain prediction") {
    const auto m = random_model(1);
    std::mt19937_64 rng(2);
    const auto x = oracles::random_matrix(rng, 9, 4, -2, 2);
    const auto plain = predict_probs(m, x);
    const std::vector<PredictionView> one{identity_view()};
    const std::vector<PredictionView> two{identity_view(), identity_view()};
    CHECK(predict_with_views(m, x, one).values() == plain.values());
    CHECK((predict_with_views(m, x, two).values() - plain.values()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(predict_probs(m, x, 2).values() == plain.values());

    const PredictionView scaled{"scaled", [](const Matrix& in) { return Matrix(in * 0.5); }};
    const std::vector<PredictionView> mixed{identity_view(), scaled};
    const Matrix want = 0.5 * (plain.values() + predict_probs(m, x * 0.5).values());
    CHECK((predict_with_views(m, x, mixed).values() - want).cwiseAbs().maxCoeff() < 1e-15);

    const std::vector<PredictionView> wrong_first{scaled};
    CHECK_THROWS_AS(predict_with_views(m, x, wrong_first), ValidationError);
}

TEST_CASE("flip view mirrors image rows and registry lookups") {
    Matrix x(1, 12);
    for (Eigen::Index c = 0; c < 12; ++c) x(0, c) = static_cast<double>(c);
    // 2 x 3 image, 2 channels: pixel (r, c) channel k at (r*3 + c)*2 + k
    const auto flipped = horizontal_flip_view(2, 3, 2).transform(x);
    Matrix want(1, 12);
    want << 4, 5, 2, 3, 0, 1, 10, 11, 8, 9, 6, 7;
    CHECK(flipped == want);
    CHECK(horizontal_flip_view(2, 3, 2).transform(flipped) == x);
    ViewRegistry reg;
    CHECK(reg.names() == std::vector<std::string>{"identity"});
    reg.add(horizontal_flip_view(2, 3, 2));
    CHECK(reg.names().size() == 2);
    CHECK_THROWS(static_cast<void>(reg.get("rotate")));
}

TEST_CASE("ensemble mean is the arithmetic mean") {
    std::mt19937_64 rng(3);
    std::vector<ProbMatrix> folds;
    for (int i = 0; i < 3; ++i) folds.emplace_back(oracles::random_matrix(rng, 7, 4, 0, 1));
    const auto mean = ensemble_mean(folds);
    for (Eigen::Index i = 0; i < 7; ++i)
        for (Eigen::Index j = 0; j < 4; ++j) {
            const double want = (folds[0].values()(i, j) + folds[1].values()(i, j) + folds[2].values()(i, j)) / 3.0;
            CHECK(std::abs(mean.values()(i, j) - want) <= 1e-15);
        }
}

TEST_CASE("fold runs are reproducible and select the best epoch") {
    const auto data = planted(1, 400);
    const auto assign = mis_split(data.labels, 3, 1);
    const auto train = data.subset(assign.complement(0));
    const auto val = data.subset(assign.members(0));
    auto cfg = quick();
    const auto a = run_fold(train, val, cfg, 10);
    const auto b = run_fold(train, val, cfg, 10);
    CHECK(a.best_val_macro_auc == b.best_val_macro_auc);
    CHECK(a.val_probs.values() == b.val_probs.values());
    CHECK(a.checkpoint.coupling->a == b.checkpoint.coupling->a);
    REQUIRE(a.epochs.size() == 3);
    double best = -1.0;
    for (const auto& e : a.epochs) best = std::max(best, e.val_macro_auc);
    CHECK(a.best_val_macro_auc == best);
    CHECK_FALSE(a.stopped_early);  // patience 3 cannot fire within 3 epochs
    bool monotone = true;
    for (std::size_t e = 1; e < a.epochs.size(); ++e)
        monotone = monotone && a.epochs[e].val_macro_auc > a.epochs[e - 1].val_macro_auc;
    if (monotone) CHECK(a.best_epoch == a.epochs.size() - 1);
    CHECK(a.log.size() == 3 * ((train.size() + cfg.batch_size - 1) / cfg.batch_size));
}

TEST_CASE("early stopping triggers once validation stalls") {
    const auto data = planted(2, 300);
    const auto assign = mis_split(data.labels, 3, 2);
    auto cfg = quick();
    cfg.lr = 1e-12;  // weights stay put so validation never improves
    cfg.epochs = 10;
    cfg.patience = 2;
    const auto r = run_fold(data.subset(assign.complement(1)), data.subset(assign.members(1)), cfg, 3);
    CHECK(r.stopped_early);
    CHECK(r.epochs.size() < 10);
}

TEST_CASE("single-class validation fold names the fold") {
    const auto data = planted(3, 60);
    Dataset val = data.subset(std::vector<std::size_t>{0, 1, 2});
    val.labels = LabelMatrix(Matrix::Zero(3, 6));
    try {
        run_fold(data, val, quick(), 0, 2);
        FAIL("expected an error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("fold 2") != std::string::npos);
    }
}

TEST_CASE("two folds on ten examples") {
    Matrix x(10, 2), y(10, 2);
    for (Eigen::Index i = 0; i < 10; ++i) {
        x(i, 0) = static_cast<double>(i) / 10.0;
        x(i, 1) = std::sin(static_cast<double>(i));
        y(i, 0) = i % 2;
        y(i, 1) = (i / 2) % 2;
    }
    Dataset ds{x, LabelMatrix(y), default_feature_names(2), default_label_names(2)};
    auto cfg = quick();
    cfg.K = 2;
    const auto rep = run_experiment(ds, nullptr, cfg);
    CHECK(rep.folds.size() == 2);
    CHECK(rep.oof_probs.rows() == 10);
    CHECK(rep.diagnostics.source == "out_of_fold");
}

TEST_CASE("experiment invariants and byte-identical reports") {
    const auto data = planted(5, 360);
    auto test_spec = default_gen_spec(5);
    test_spec.n = 120;
    test_spec.l = 6;
    test_spec.d = 8;
    auto pool_spec = test_spec;
    pool_spec.n = 360;
    test_spec.base_weights = resolve_base_weights(pool_spec);
    test_spec.seed = 99;
    const auto test = generate(test_spec);
    const auto cfg = quick();

    const auto a = run_experiment(data, &test, cfg);
    const auto b = run_experiment(data, &test, cfg);
    CHECK(report_to_json(a) == report_to_json(b));

    REQUIRE(a.test_probs.has_value());
    const auto mean = ensemble_mean(a.fold_eval_probs);
    CHECK((mean.values() - a.test_probs->values()).cwiseAbs().maxCoeff() <= 1e-15);
    for (std::size_t f = 0; f < a.folds.size(); ++f) {
        const auto& fr = a.folds[f];
        const auto train_idx = a.assignment.complement(f);
        std::set<std::size_t> tr(train_idx.begin(), train_idx.end());
        for (auto v : fr.val_indices) CHECK(tr.count(v) == 0);
    }
    CHECK(a.diagnostics.source == "test");
    CHECK(a.mean_coupling.diagonal().isZero(0.0));

    auto serial = cfg;
    setenv("COUPLED_LABELS_THREADS", "1", 1);
    const auto c = run_experiment(data, &test, serial);
    unsetenv("COUPLED_LABELS_THREADS");
    CHECK(report_to_json(c) == report_to_json(a));
}

TEST_CASE("disabled refinement equals a frozen zero coupling") {
    const auto data = planted(6, 300);
    auto off = quick();
    off.refinement_enabled = false;
    auto on = quick();
    on.lambda_l1 = 0.0;
    RunOptions frozen;
    frozen.freeze_coupling = true;
    const auto a = run_experiment(data, nullptr, off);
    const auto b = run_experiment(data, nullptr, on, frozen);
    CHECK(a.oof_probs.values() == b.oof_probs.values());
    for (std::size_t f = 0; f < a.folds.size(); ++f)
        CHECK(a.folds[f].best_val_macro_auc == b.folds[f].best_val_macro_auc);
}

TEST_CASE("thread resolution") {
    CHECK(resolve_threads(8, 3) == 3);
    CHECK(resolve_threads(2, 3) == 2);
    setenv("COUPLED_LABELS_THREADS", "1", 1);
    CHECK(resolve_threads(0, 3) == 1);
    unsetenv("COUPLED_LABELS_THREADS");
    CHECK(resolve_threads(0, 3) >= 1);
}

TEST_CASE("coupling summary and checkpoint round-trip") {
    Matrix a = Matrix::Zero(3, 3);
    a(0, 1) = 0.4;
    a(1, 2) = -0.2;
    a(2, 0) = 0.01;
    const auto s = summarize_coupling(a, 0.05, 2);
    CHECK(s.positive == 1);
    CHECK(s.negative == 1);
    CHECK(s.near_zero == 4);
    REQUIRE(s.strongest.size() == 2);
    CHECK(std::get<0>(s.strongest[0]) == 0);
    CHECK(std::get<1>(s.strongest[0]) == 1);

    const auto m = random_model(7);
    std::uint64_t hash = 0;
    const auto back = checkpoint_from_json(checkpoint_to_json(m, ExperimentConfig{}), &hash);
    CHECK(hash == config_hash(ExperimentConfig{}));
    CHECK(back.predictor.w2 == m.predictor.w2);
    CHECK(back.coupling->a == m.coupling->a);
}
