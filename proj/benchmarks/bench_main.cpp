#include <benchmark/benchmark.h>

#include <random>

#include "coupled_labels/coupling.hpp"
#include "coupled_labels/metrics.hpp"
#include "coupled_labels/optim.hpp"
#include "coupled_labels/stratify.hpp"
#include "coupled_labels/synthgen.hpp"

using namespace coupled_labels;

static void BM_RocAuc(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> scores(n), targets(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = std::round(u(rng) * 100.0) / 100.0;
        targets[i] = u(rng) < 0.3 ? 1.0 : 0.0;
    }
    for (auto _ : state) benchmark::DoNotOptimize(roc_auc(scores, targets));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RocAuc)->RangeMultiplier(4)->Range(256, 65536)->Complexity();

static void BM_MisSplit(benchmark::State& state) {
    auto spec = default_gen_spec(3);
    spec.n = static_cast<std::size_t>(state.range(0));
    const auto data = generate(spec);
    for (auto _ : state) benchmark::DoNotOptimize(mis_split(data.labels, 3, 11));
}
BENCHMARK(BM_MisSplit)->Arg(1000)->Arg(6000);

static void BM_RefineForwardBackward(benchmark::State& state) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    const Eigen::Index n = 24, l = 14;
    Matrix z(n, l), grad(n, l);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < l; ++j) {
            z(i, j) = g(rng);
            grad(i, j) = g(rng);
        }
    auto cm = CouplingMatrix::zeros(l, 0.3);
    for (Eigen::Index i = 0; i < l; ++i)
        for (Eigen::Index j = 0; j < l; ++j) cm.a(i, j) = i == j ? 0.0 : 0.1 * g(rng);
    for (auto _ : state) {
        auto fwd = refine_forward(z, cm);
        benchmark::DoNotOptimize(refine_backward(grad, fwd, cm));
    }
}
BENCHMARK(BM_RefineForwardBackward);

static void BM_TrainStep(benchmark::State& state) {
    auto spec = default_gen_spec(1);
    spec.n = 24;
    const auto data = generate(spec);
    ExperimentConfig cfg;
    auto train = make_train_state(cfg, data.num_features(), data.num_labels(),
                                  Schedule(1000, 1000000), 3, std::vector<double>(data.num_labels(), 1.0));
    for (auto _ : state) benchmark::DoNotOptimize(train_step(data.features, data.labels, train, cfg));
}
BENCHMARK(BM_TrainStep);

BENCHMARK_MAIN();
