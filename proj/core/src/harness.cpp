#include "coupled_labels/harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "coupled_labels/losses.hpp"

namespace coupled_labels {

ProbMatrix predict_probs(const Model& model, const Matrix& x, std::size_t batch_rows) {
    const Eigen::Index n = x.rows();
    const Eigen::Index chunk =
        batch_rows == 0 ? std::max<Eigen::Index>(n, 1) : static_cast<Eigen::Index>(batch_rows);
    Matrix out(n, static_cast<Eigen::Index>(model.predictor.num_labels()));
    for (Eigen::Index start = 0; start < n; start += chunk) {
        const Eigen::Index rows = std::min(chunk, n - start);
        const auto fwd = predict_forward(x.middleRows(start, rows), model.predictor, Mode::Eval);
        if (model.coupling)
            out.middleRows(start, rows) = sigmoid(refine_forward(fwd.z, *model.coupling).z_prime);
        else
            out.middleRows(start, rows) = sigmoid(fwd.z);
    }
    return ProbMatrix(std::move(out));
}

PredictionView identity_view() {
    return {"identity", [](const Matrix& x) { return x; }};
}

PredictionView horizontal_flip_view(std::size_t height, std::size_t width, std::size_t channels) {
    return {"hflip", [height, width, channels](const Matrix& x) {
                if (static_cast<std::size_t>(x.cols()) != height * width * channels)
                    throw ValidationError("hflip: feature count is not height x width x channels");
                Matrix out(x.rows(), x.cols());
                for (std::size_t r = 0; r < height; ++r)
                    for (std::size_t c = 0; c < width; ++c)
                        for (std::size_t ch = 0; ch < channels; ++ch) {
                            const auto src = static_cast<Eigen::Index>((r * width + c) * channels + ch);
                            const auto dst = static_cast<Eigen::Index>(
                                (r * width + (width - 1 - c)) * channels + ch);
                            out.col(dst) = x.col(src);
                        }
                return out;
            }};
}

ViewRegistry::ViewRegistry() { views_.push_back(identity_view()); }

void ViewRegistry::add(PredictionView view) {
    for (auto& v : views_)
        if (v.name == view.name) {
            v = std::move(view);
            return;
        }
    views_.push_back(std::move(view));
}

const PredictionView& ViewRegistry::get(const std::string& name) const {
    for (const auto& v : views_)
        if (v.name == name) return v;
    throw ValidationError("unknown prediction view '" + name + "'");
}

std::vector<std::string> ViewRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& v : views_) out.push_back(v.name);
    return out;
}

ProbMatrix predict_with_views(const Model& model, const Matrix& inputs,
                              std::span<const PredictionView> views, std::size_t batch_rows) {
    if (views.empty()) throw ValidationError("predict_with_views: no views given");
    if (views.front().name != "identity")
        throw ValidationError("predict_with_views: the first view must be identity");
    if (views.size() == 1) return predict_probs(model, inputs, batch_rows);
    Matrix sum = Matrix::Zero(inputs.rows(), static_cast<Eigen::Index>(model.predictor.num_labels()));
    for (const auto& v : views) sum += predict_probs(model, v.transform(inputs), batch_rows).values();
    sum /= static_cast<double>(views.size());
    return ProbMatrix(sum.cwiseMax(0.0).cwiseMin(1.0));
}

std::size_t resolve_threads(std::size_t requested, std::size_t folds) {
    std::size_t n = requested;
    if (n == 0) {
        if (const char* env = std::getenv("COUPLED_LABELS_THREADS"); env && *env) {
            char* end = nullptr;
            const auto v = std::strtoul(env, &end, 10);
            if (end && *end == '\0' && v > 0) n = v;
        }
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(folds, 1));
}

FoldResult run_fold(const Dataset& train, const Dataset& val, const ExperimentConfig& cfg_in,
                    std::uint64_t seed, std::size_t fold_index, const RunOptions& options) {
    const auto cfg = validate_config(cfg_in);
    train.validate();
    val.validate();
    if (train.num_features() != val.num_features() || train.num_labels() != val.num_labels())
        throw ValidationError("run_fold: train and validation shapes differ");

    const std::size_t n = train.size();
    const std::size_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const auto schedule = Schedule::for_epochs(steps_per_epoch, cfg.epochs);
    auto state = make_train_state(cfg, train.num_features(), train.num_labels(), schedule, seed,
                                  compute_pos_weights(train.labels), !options.freeze_coupling);
    std::mt19937_64 shuffle_rng(seed ^ 0xc2b2ae3d27d4eb4full);
    const std::size_t eval_rows = cfg.batch_size * cfg.eval_batch_multiplier;

    FoldResult result;
    result.fold = fold_index;
    result.best_val_macro_auc = -std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> batch_rows;
    std::size_t since_best = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        std::size_t skipped = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            batch_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                              order.begin() + static_cast<std::ptrdiff_t>(stop));
            Matrix x(static_cast<Eigen::Index>(batch_rows.size()), train.features.cols());
            for (std::size_t r = 0; r < batch_rows.size(); ++r)
                x.row(static_cast<Eigen::Index>(r)) =
                    train.features.row(static_cast<Eigen::Index>(batch_rows[r]));
            const auto y = train.labels.select_rows(batch_rows);
            const auto log = train_step(x, y, state, cfg);
            if (log.skipped) ++skipped;
            else {
                loss_sum += log.loss;
                ++loss_count;
            }
            result.log.push_back(log);
        }

        Model model{state.ema_predictor(), std::nullopt};
        if (cfg.refinement_enabled) model.coupling = state.ema_coupling();
        auto probs = predict_with_views(model, val.features, options.views, eval_rows);
        AucReport rep;
        try {
            rep = macro_auc(probs, val.labels);
        } catch (const ValidationError&) {
            throw ValidationError("fold " + std::to_string(fold_index) +
                                  ": every validation label has a single class");
        }

        result.epochs.push_back({epoch, rep.macro_auc,
                                 loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0,
                                 skipped});
        if (rep.macro_auc > result.best_val_macro_auc) {
            result.best_val_macro_auc = rep.macro_auc;
            result.best_epoch = epoch;
            result.checkpoint = std::move(model);
            result.val_report = std::move(rep);
            result.val_probs = std::move(probs);
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            result.stopped_early = epoch + 1 < cfg.epochs;
            break;
        }
    }
    return result;
}

double RunReport::headline_macro_auc() const {
    return test_report ? test_report->macro_auc : oof_report.macro_auc;
}

ProbMatrix ensemble_mean(std::span<const ProbMatrix> fold_probs) {
    if (fold_probs.empty()) throw ValidationError("ensemble_mean: no fold predictions");
    Matrix sum = fold_probs.front().values();
    for (std::size_t f = 1; f < fold_probs.size(); ++f) {
        if (fold_probs[f].rows() != fold_probs.front().rows() ||
            fold_probs[f].cols() != fold_probs.front().cols())
            throw ValidationError("ensemble_mean: fold predictions differ in shape");
        sum += fold_probs[f].values();
    }
    sum /= static_cast<double>(fold_probs.size());
    return ProbMatrix(sum.cwiseMax(0.0).cwiseMin(1.0));
}

RunReport run_experiment(const Dataset& data, const Dataset* test, const ExperimentConfig& cfg_in,
                         const RunOptions& options) {
    const auto cfg = validate_config(cfg_in);
    data.validate();
    if (test) {
        test->validate();
        if (test->num_features() != data.num_features() || test->num_labels() != data.num_labels())
            throw ValidationError("test set shape differs from the training pool");
    }

    RunReport report;
    report.config = cfg;
    report.label_names = data.label_names;
    report.assignment = mis_split(data.labels, cfg.K, cfg.seed);

    const std::size_t k = cfg.K;
    report.folds.resize(k);
    std::vector<std::exception_ptr> errors(k);
    auto work = [&](std::size_t f) {
        try {
            const auto tr = report.assignment.complement(f);
            const auto va = report.assignment.members(f);
            report.folds[f] =
                run_fold(data.subset(tr), data.subset(va), cfg, cfg.seed + f, f, options);
            report.folds[f].val_indices = va;
        } catch (...) {
            errors[f] = std::current_exception();
        }
    };
    const std::size_t workers = resolve_threads(options.threads, k);
    if (workers <= 1) {
        for (std::size_t f = 0; f < k; ++f) work(f);
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex mu;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                while (true) {
                    std::size_t f;
                    {
                        std::lock_guard lock(mu);
                        if (next >= k) return;
                        f = next++;
                    }
                    work(f);
                }
            });
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    const auto l = static_cast<Eigen::Index>(data.num_labels());
    Matrix oof = Matrix::Zero(static_cast<Eigen::Index>(data.size()), l);
    for (const auto& fr : report.folds)
        for (std::size_t r = 0; r < fr.val_indices.size(); ++r)
            oof.row(static_cast<Eigen::Index>(fr.val_indices[r])) =
                fr.val_probs.values().row(static_cast<Eigen::Index>(r));
    report.oof_probs = ProbMatrix(std::move(oof));
    report.oof_report = macro_auc(report.oof_probs, data.labels);

    const Matrix& eval_x = test ? test->features : data.features;
    const std::size_t eval_rows = cfg.batch_size * cfg.eval_batch_multiplier;
    for (const auto& fr : report.folds)
        report.fold_eval_probs.push_back(
            predict_with_views(fr.checkpoint, eval_x, options.views, eval_rows));
    if (test) {
        report.test_probs = ensemble_mean(report.fold_eval_probs);
        report.test_report = macro_auc(*report.test_probs, test->labels);
    }

    report.mean_coupling = Matrix::Zero(l, l);
    for (const auto& fr : report.folds)
        if (fr.checkpoint.coupling) report.mean_coupling += fr.checkpoint.coupling->a;
    report.mean_coupling /= static_cast<double>(k);
    enforce_zero_diag(report.mean_coupling);

    auto& diag = report.diagnostics;
    diag.source = test ? "test" : "out_of_fold";
    const ProbMatrix& summary_probs = test ? *report.test_probs : report.oof_probs;
    diag.agreement = fold_agreement(report.fold_eval_probs);
    diag.per_label_std = per_label_fold_std(report.fold_eval_probs);
    diag.correlation = pearson_label_correlation(summary_probs);
    diag.histograms = probability_histograms(summary_probs, 20);
    return report;
}

CouplingSignSummary summarize_coupling(const Matrix& a, double threshold, std::size_t top) {
    CouplingSignSummary s;
    s.threshold = threshold;
    std::vector<std::tuple<std::size_t, std::size_t, double>> entries;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (i == j) continue;
            const double v = a(i, j);
            if (std::abs(v) < threshold) ++s.near_zero;
            else if (v > 0.0) ++s.positive;
            else ++s.negative;
            entries.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j), v);
        }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& x, const auto& y) { return std::get<2>(x) > std::get<2>(y); });
    entries.resize(std::min(top, entries.size()));
    s.strongest = std::move(entries);
    return s;
}

AblationReport run_ablation(const Dataset& data, const Dataset* test, const ExperimentConfig& cfg,
                            const RunOptions& options) {
    auto on = cfg;
    on.refinement_enabled = true;
    auto off = cfg;
    off.refinement_enabled = false;
    return {run_experiment(data, test, on, options), run_experiment(data, test, off, options)};
}

}  // namespace coupled_labels
