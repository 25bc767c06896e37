#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracles {

double pair_count_auc(const std::vector<double>& scores, const std::vector<double>& targets) {
    double credit = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (targets[i] == 0.0) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (targets[j] != 0.0) continue;
            pairs += 1.0;
            if (scores[i] > scores[j]) credit += 1.0;
            else if (scores[i] == scores[j]) credit += 0.5;
        }
    }
    return pairs == 0.0 ? -1.0 : credit / pairs;
}

Matrix central_difference(const std::function<double(const Matrix&)>& f, const Matrix& at,
                          double h) {
    Matrix grad(at.rows(), at.cols());
    Matrix probe = at;
    for (Eigen::Index i = 0; i < at.rows(); ++i)
        for (Eigen::Index j = 0; j < at.cols(); ++j) {
            const double orig = probe(i, j);
            probe(i, j) = orig + h;
            const double up = f(probe);
            probe(i, j) = orig - h;
            const double down = f(probe);
            probe(i, j) = orig;
            grad(i, j) = (up - down) / (2.0 * h);
        }
    return grad;
}

double max_rel_error(const Matrix& analytic, const Matrix& numeric, double floor) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < analytic.rows(); ++i)
        for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
            const double a = analytic(i, j);
            const double n = numeric(i, j);
            const double scale = std::max({std::abs(a), std::abs(n), floor});
            worst = std::max(worst, std::abs(a - n) / scale);
        }
    return worst;
}

Matrix naive_pearson(const Matrix& p) {
    const auto n = p.rows();
    const auto l = p.cols();
    Matrix out(l, l);
    for (Eigen::Index a = 0; a < l; ++a)
        for (Eigen::Index b = 0; b < l; ++b) {
            double ma = 0.0, mb = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                ma += p(i, a);
                mb += p(i, b);
            }
            ma /= static_cast<double>(n);
            mb /= static_cast<double>(n);
            double sab = 0.0, saa = 0.0, sbb = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                sab += (p(i, a) - ma) * (p(i, b) - mb);
                saa += (p(i, a) - ma) * (p(i, a) - ma);
                sbb += (p(i, b) - mb) * (p(i, b) - mb);
            }
            out(a, b) = (saa > 0 && sbb > 0) ? sab / std::sqrt(saa * sbb) : std::nan("");
        }
    return out;
}

std::vector<double> naive_fold_std(const std::vector<Matrix>& folds) {
    const auto n = folds.front().rows();
    const auto l = folds.front().cols();
    const double k = static_cast<double>(folds.size());
    std::vector<double> out(static_cast<std::size_t>(l), 0.0);
    for (Eigen::Index j = 0; j < l; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double mean = 0.0;
            for (const auto& f : folds) mean += f(i, j);
            mean /= k;
            double ss = 0.0;
            for (const auto& f : folds) ss += (f(i, j) - mean) * (f(i, j) - mean);
            out[static_cast<std::size_t>(j)] += std::sqrt(ss / k);
        }
        out[static_cast<std::size_t>(j)] /= static_cast<double>(n);
    }
    return out;
}

NaiveAgreement naive_agreement(const std::vector<Matrix>& folds, double threshold) {
    const std::size_t k = folds.size();
    NaiveAgreement out;
    out.histogram.assign(k + 1, 0);
    out.pairwise = Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    const auto n = folds.front().rows();
    const auto l = folds.front().cols();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < l; ++j) {
            std::size_t votes[2] = {0, 0};
            for (const auto& f : folds) ++votes[f(i, j) >= threshold ? 1 : 0];
            const std::size_t agree = votes[0] > votes[1] ? votes[0] : votes[1];
            ++out.histogram[agree];
            for (std::size_t a = 0; a < k; ++a)
                for (std::size_t b = 0; b < k; ++b)
                    if ((folds[a](i, j) >= threshold) == (folds[b](i, j) >= threshold))
                        out.pairwise(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += 1.0;
        }
    out.pairwise /= static_cast<double>(n * l);
    return out;
}

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo,
                     double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = d(rng);
    return m;
}

Matrix random_binary(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double p) {
    std::bernoulli_distribution d(p);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = d(rng) ? 1.0 : 0.0;
    return m;
}

Matrix central_difference_ld(const std::function<long double(const Matrix&)>& f, const Matrix& at,
                             double h) {
    Matrix grad(at.rows(), at.cols());
    Matrix probe = at;
    for (Eigen::Index i = 0; i < at.rows(); ++i)
        for (Eigen::Index j = 0; j < at.cols(); ++j) {
            const double orig = probe(i, j);
            const double hi = orig + h;
            const double lo = orig - h;
            probe(i, j) = hi;
            const long double up = f(probe);
            probe(i, j) = lo;
            const long double down = f(probe);
            probe(i, j) = orig;
            grad(i, j) = static_cast<double>((up - down) / (static_cast<long double>(hi) - lo));
        }
    return grad;
}

namespace {

using LD = long double;

LD sig(LD z) { return 1.0L / (1.0L + std::exp(-z)); }
LD flog(LD v) { return std::log(std::max(v, 1e-12L)); }

LD asl_entry(LD z, double y, LD gp, LD gn, LD clip) {
    const LD p = sig(z);
    if (y != 0.0) return -std::pow(1.0L - p, gp) * flog(p);
    const LD pm = std::max(p - clip, 0.0L);
    return -std::pow(pm, gn) * flog(1.0L - pm);
}

}  // namespace

long double ref_asl(const Matrix& logits, const Matrix& targets, double gamma_pos, double gamma_neg,
                    double clip) {
    LD sum = 0.0L;
    for (Eigen::Index i = 0; i < logits.rows(); ++i)
        for (Eigen::Index j = 0; j < logits.cols(); ++j)
            sum += asl_entry(logits(i, j), targets(i, j), gamma_pos, gamma_neg, clip);
    return sum / static_cast<LD>(logits.size());
}

long double ref_weighted_bce(const Matrix& logits, const Matrix& targets,
                             const std::vector<double>& pos_weight) {
    LD sum = 0.0L;
    for (Eigen::Index i = 0; i < logits.rows(); ++i)
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            const LD p = sig(logits(i, j));
            const LD y = targets(i, j);
            sum -= static_cast<LD>(pos_weight[static_cast<std::size_t>(j)]) * y * flog(p) +
                   (1.0L - y) * flog(1.0L - p);
        }
    return sum / static_cast<LD>(logits.size());
}

long double ref_objective(const Matrix& x, const Matrix& y, const RefModel& m, double gamma_pos,
                          double gamma_neg, double clip, double lambda) {
    const Eigen::Index n = x.rows();
    const Eigen::Index l = m.w2.cols();
    const bool hidden = m.w1.size() > 0;
    LD sum = 0.0L;
    std::vector<LD> h, z(static_cast<std::size_t>(l)), zr(static_cast<std::size_t>(l));
    for (Eigen::Index i = 0; i < n; ++i) {
        if (hidden) {
            h.assign(static_cast<std::size_t>(m.w1.cols()), 0.0L);
            for (Eigen::Index k = 0; k < m.w1.cols(); ++k) {
                LD acc = m.b1(0, k);
                for (Eigen::Index d = 0; d < x.cols(); ++d) acc += static_cast<LD>(x(i, d)) * m.w1(d, k);
                h[static_cast<std::size_t>(k)] = acc > 0.0L ? acc : 0.0L;
            }
        } else {
            h.assign(x.row(i).data(), x.row(i).data() + x.cols());
        }
        for (Eigen::Index j = 0; j < l; ++j) {
            LD acc = m.b2(0, j);
            for (std::size_t k = 0; k < h.size(); ++k) acc += h[k] * m.w2(static_cast<Eigen::Index>(k), j);
            z[static_cast<std::size_t>(j)] = acc;
        }
        for (Eigen::Index j = 0; j < l; ++j) {
            LD acc = z[static_cast<std::size_t>(j)];
            if (m.a.size() > 0)
                for (Eigen::Index s = 0; s < l; ++s)
                    if (s != j) acc += static_cast<LD>(m.alpha) * sig(z[static_cast<std::size_t>(s)]) * m.a(s, j);
            zr[static_cast<std::size_t>(j)] = acc;
        }
        for (Eigen::Index j = 0; j < l; ++j)
            sum += asl_entry(zr[static_cast<std::size_t>(j)], y(i, j), gamma_pos, gamma_neg, clip);
    }
    LD value = sum / static_cast<LD>(n * l);
    if (m.a.size() > 0) {
        LD pen = 0.0L;
        for (Eigen::Index s = 0; s < l; ++s)
            for (Eigen::Index j = 0; j < l; ++j)
                if (s != j) pen += std::abs(static_cast<LD>(m.a(s, j)));
        value += static_cast<LD>(lambda) * pen;
    }
    return value;
}

long double ref_refine_dot(const Matrix& z, const Matrix& a, double alpha, const Matrix& w) {
    LD sum = 0.0L;
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            LD acc = z(i, j);
            for (Eigen::Index s = 0; s < z.cols(); ++s)
                if (s != j) acc += static_cast<LD>(alpha) * sig(static_cast<LD>(z(i, s))) * a(s, j);
            sum += acc * w(i, j);
        }
    return sum;
}

double plain_bce(const Matrix& logits, const Matrix& targets) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i)
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            const double p = 1.0 / (1.0 + std::exp(-logits(i, j)));
            const double y = targets(i, j);
            sum -= y * std::log(std::max(p, 1e-12)) + (1.0 - y) * std::log(std::max(1.0 - p, 1e-12));
        }
    return sum / static_cast<double>(logits.size());
}

}  // namespace oracles
