#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "meshsteg/classifiers.hpp"
#include "meshsteg/error.hpp"
#include "meshsteg/parallel.hpp"
#include "meshsteg/rng.hpp"

namespace meshsteg {

double rbf_kernel(const VectorXd& a, const VectorXd& b, double gamma) { return std::exp(-gamma * (a - b).squaredNorm()); }

double SvmModel::score_standardized(const VectorXd& z) const {
    double s = -offset;
    for (Eigen::Index i = 0; i < support_vectors.rows(); ++i) {
        s += coefficients(i) * std::exp(-gamma * (support_vectors.row(i).transpose() - z).squaredNorm());
    }
    return s;
}

double SvmModel::score(const VectorXd& x) const { return score_standardized(standardizer.apply(x)); }

double svm_score(const SvmModel& model, const VectorXd& x) { return model.score(x); }

// Sequential minimal optimisation with second-order working-set selection.
// Minimises 1/2 a'Qa - e'a subject to 0 <= a <= C, y'a = 0, Q_ij = y_i y_j K_ij.
SvmSolution svm_solve(const MatrixXd& gram, const std::vector<int>& signs, double C, const SvmOptions& options) {
    const auto n = static_cast<Eigen::Index>(signs.size());
    if (gram.rows() != n || gram.cols() != n) throw Error(ErrorCode::DimensionMismatch, "Gram matrix size mismatch");
    if (!(C > 0.0)) throw Error(ErrorCode::InvalidArgument, "C must be positive");
    bool pos = false;
    bool neg = false;
    for (int s : signs) {
        if (s == 1) pos = true;
        else if (s == -1) neg = true;
        else throw Error(ErrorCode::InvalidArgument, "SVM labels must be -1 or +1");
    }
    if (!pos || !neg) throw Error(ErrorCode::SingleClass, "SVM training needs both classes");

    constexpr double kTau = 1e-12;
    VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = signs[static_cast<std::size_t>(i)];
    VectorXd alpha = VectorXd::Zero(n);
    VectorXd grad = VectorXd::Constant(n, -1.0);
    const auto upper = [&](Eigen::Index t) { return alpha(t) >= C; };
    const auto lower = [&](Eigen::Index t) { return alpha(t) <= 0.0; };
    const auto q = [&](Eigen::Index a, Eigen::Index b) { return y(a) * y(b) * gram(a, b); };

    SvmSolution sol;
    sol.converged = false;
    long iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        double gmax = -std::numeric_limits<double>::infinity();
        Eigen::Index i = -1;
        for (Eigen::Index t = 0; t < n; ++t) {
            if (y(t) > 0 ? !upper(t) : !lower(t)) {
                const double v = -y(t) * grad(t);
                if (v >= gmax) {
                    gmax = v;
                    i = t;
                }
            }
        }
        double gmax2 = -std::numeric_limits<double>::infinity();
        Eigen::Index j = -1;
        double best = std::numeric_limits<double>::infinity();
        if (i >= 0) {
            for (Eigen::Index t = 0; t < n; ++t) {
                if (y(t) > 0 ? lower(t) : upper(t)) continue;
                const double v = y(t) * grad(t);
                gmax2 = std::max(gmax2, v);
                const double diff = gmax + v;
                if (diff > 0.0) {
                    double quad = gram(i, i) + gram(t, t) - 2.0 * y(i) * y(t) * gram(i, t);
                    if (quad <= 0.0) quad = kTau;
                    const double obj = -(diff * diff) / quad;
                    if (obj <= best) {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        if (i < 0 || j < 0 || gmax + gmax2 < options.tolerance) {
            sol.converged = true;
            break;
        }

        const double ai_old = alpha(i);
        const double aj_old = alpha(j);
        if (y(i) != y(j)) {
            double quad = gram(i, i) + gram(j, j) + 2.0 * q(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad(i) - grad(j)) / quad;
            const double diff = alpha(i) - alpha(j);
            alpha(i) += delta;
            alpha(j) += delta;
            if (diff > 0.0) {
                if (alpha(j) < 0.0) {
                    alpha(j) = 0.0;
                    alpha(i) = diff;
                }
            } else if (alpha(i) < 0.0) {
                alpha(i) = 0.0;
                alpha(j) = -diff;
            }
            if (diff > 0.0) {
                if (alpha(i) > C) {
                    alpha(i) = C;
                    alpha(j) = C - diff;
                }
            } else if (alpha(j) > C) {
                alpha(j) = C;
                alpha(i) = C + diff;
            }
        } else {
            double quad = gram(i, i) + gram(j, j) - 2.0 * q(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad(i) - grad(j)) / quad;
            const double sum = alpha(i) + alpha(j);
            alpha(i) -= delta;
            alpha(j) += delta;
            if (sum > C) {
                if (alpha(i) > C) {
                    alpha(i) = C;
                    alpha(j) = sum - C;
                }
            } else if (alpha(j) < 0.0) {
                alpha(j) = 0.0;
                alpha(i) = sum;
            }
            if (sum > C) {
                if (alpha(j) > C) {
                    alpha(j) = C;
                    alpha(i) = sum - C;
                }
            } else if (alpha(i) < 0.0) {
                alpha(i) = 0.0;
                alpha(j) = sum;
            }
        }
        const double di = alpha(i) - ai_old;
        const double dj = alpha(j) - aj_old;
        for (Eigen::Index t = 0; t < n; ++t) grad(t) += q(t, i) * di + q(t, j) * dj;
    }
    sol.iterations = iter;

    // Offset from free support vectors, or the midpoint of the feasible range.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    int free_count = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const double yg = y(t) * grad(t);
        if (upper(t)) {
            if (y(t) < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (lower(t)) {
            if (y(t) > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++free_count;
            sum_free += yg;
        }
    }
    sol.offset = free_count > 0 ? sum_free / free_count : 0.5 * (ub + lb);
    sol.alpha = alpha;
    // grad = Q a - e, so a'Qa = a'(grad + e)
    sol.objective = alpha.sum() - 0.5 * alpha.dot(grad + VectorXd::Ones(n));
    return sol;
}

SvmModel svm_train(const Dataset& train, double C, double gamma, const SvmOptions& options, SvmSolution* solution) {
    if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be positive");
    SvmModel model;
    model.standardizer = options.standardize ? Standardizer::fit(train.x) : Standardizer::identity(train.dim());
    const MatrixXd z = model.standardizer.apply(train.x);
    const Eigen::Index n = z.rows();
    MatrixXd gram(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        gram(a, a) = 1.0;
        for (Eigen::Index b = a + 1; b < n; ++b) {
            gram(a, b) = gram(b, a) = std::exp(-gamma * (z.row(a) - z.row(b)).squaredNorm());
        }
    }
    std::vector<int> signs;
    signs.reserve(train.size());
    for (int label : train.y) signs.push_back(label == 1 ? 1 : -1);
    SvmSolution sol = svm_solve(gram, signs, C, options);

    std::vector<Eigen::Index> sv;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (sol.alpha(i) > 0.0) sv.push_back(i);
    }
    model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), z.cols());
    model.coefficients.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t k = 0; k < sv.size(); ++k) {
        const auto r = static_cast<Eigen::Index>(k);
        model.support_vectors.row(r) = z.row(sv[k]);
        model.coefficients(r) = sol.alpha(sv[k]) * signs[static_cast<std::size_t>(sv[k])];
    }
    model.offset = sol.offset;
    model.gamma = gamma;
    model.C = C;
    model.converged = sol.converged;
    model.iterations = sol.iterations;
    if (solution) *solution = std::move(sol);
    return model;
}

// ---------------------------------------------------------------------------
// Grid search

std::vector<int> stratified_folds(const std::vector<int>& labels, int folds, std::uint64_t seed) {
    if (folds < 2) throw Error(ErrorCode::InvalidArgument, "need at least two folds");
    std::vector<int> assignment(labels.size(), 0);
    Rng rng(seed);
    for (int label = 0; label < 2; ++label) {
        std::vector<int> idx;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == label) idx.push_back(static_cast<int>(i));
        }
        rng.shuffle(idx);
        for (std::size_t k = 0; k < idx.size(); ++k) assignment[static_cast<std::size_t>(idx[k])] = static_cast<int>(k % static_cast<std::size_t>(folds));
    }
    return assignment;
}

namespace {

struct FoldData {
    MatrixXd train_sqdist;  // pairwise squared distances among training rows
    MatrixXd test_sqdist;   // test rows x training rows
    std::vector<int> train_signs;
    std::vector<int> test_labels;
};

MatrixXd pairwise_sqdist(const MatrixXd& a, const MatrixXd& b) {
    const VectorXd na = a.rowwise().squaredNorm();
    const VectorXd nb = b.rowwise().squaredNorm();
    MatrixXd d = (-2.0 * a * b.transpose()).colwise() + na;
    d.rowwise() += nb.transpose();
    return d.cwiseMax(0.0);
}

double fold_error(const FoldData& f, double C, double gamma, const SvmOptions& options) {
    const MatrixXd gram = (-gamma * f.train_sqdist.array()).exp().matrix();
    const SvmSolution sol = svm_solve(gram, f.train_signs, C, options);
    const MatrixXd cross = (-gamma * f.test_sqdist.array()).exp().matrix();
    VectorXd coef(sol.alpha.size());
    for (Eigen::Index i = 0; i < coef.size(); ++i) coef(i) = sol.alpha(i) * f.train_signs[static_cast<std::size_t>(i)];
    const VectorXd scores = (cross * coef).array() - sol.offset;
    std::size_t wrong = 0;
    for (Eigen::Index t = 0; t < scores.size(); ++t) {
        const int predicted = scores(t) > 0.0 ? 1 : 0;
        if (predicted != f.test_labels[static_cast<std::size_t>(t)]) ++wrong;
    }
    return static_cast<double>(wrong);
}

}  // namespace

GridSearchResult svm_grid_search(const Dataset& train, const GridSearchOptions& options) {
    if (train.count(0) < static_cast<std::size_t>(options.folds) || train.count(1) < static_cast<std::size_t>(options.folds)) {
        throw Error(ErrorCode::SingleClass, "grid search needs at least one sample per class per fold");
    }
    const Standardizer standardizer = options.svm.standardize ? Standardizer::fit(train.x) : Standardizer::identity(train.dim());
    const MatrixXd z = standardizer.apply(train.x);
    const std::vector<int> fold_of = stratified_folds(train.y, options.folds, options.seed);

    std::vector<FoldData> folds(static_cast<std::size_t>(options.folds));
    for (int f = 0; f < options.folds; ++f) {
        std::vector<Eigen::Index> tr;
        std::vector<Eigen::Index> te;
        for (std::size_t i = 0; i < train.size(); ++i) (fold_of[i] == f ? te : tr).push_back(static_cast<Eigen::Index>(i));
        MatrixXd ztr(static_cast<Eigen::Index>(tr.size()), z.cols());
        MatrixXd zte(static_cast<Eigen::Index>(te.size()), z.cols());
        FoldData& fd = folds[static_cast<std::size_t>(f)];
        for (std::size_t k = 0; k < tr.size(); ++k) {
            ztr.row(static_cast<Eigen::Index>(k)) = z.row(tr[k]);
            fd.train_signs.push_back(train.y[static_cast<std::size_t>(tr[k])] == 1 ? 1 : -1);
        }
        for (std::size_t k = 0; k < te.size(); ++k) {
            zte.row(static_cast<Eigen::Index>(k)) = z.row(te[k]);
            fd.test_labels.push_back(train.y[static_cast<std::size_t>(te[k])]);
        }
        fd.train_sqdist = pairwise_sqdist(ztr, ztr);
        fd.test_sqdist = pairwise_sqdist(zte, ztr);
    }

    std::map<std::pair<int, int>, double> cache;
    GridSearchResult result;
    int c_lo = options.c_min, c_hi = options.c_max, g_lo = options.gamma_min, g_hi = options.gamma_max;
    const auto total = static_cast<double>(train.size());

    for (int round = 0;; ++round) {
        std::vector<std::pair<int, int>> pending;
        for (int ci = c_lo; ci <= c_hi; ++ci) {
            for (int gj = g_lo; gj <= g_hi; ++gj) {
                if (!cache.count({ci, gj})) pending.emplace_back(ci, gj);
            }
        }
        std::vector<double> errors(pending.size(), 0.0);
        parallel_for(pending.size(), options.jobs, [&](std::size_t k) {
            const double C = std::pow(10.0, pending[k].first);
            const double gamma = std::ldexp(1.0, pending[k].second);
            double wrong = 0.0;
            for (const FoldData& fd : folds) wrong += fold_error(fd, C, gamma, options.svm);
            errors[k] = wrong / total;
        });
        for (std::size_t k = 0; k < pending.size(); ++k) {
            cache[pending[k]] = errors[k];
            result.evaluated.push_back({pending[k].first, pending[k].second, errors[k]});
        }

        // Minimal error; ties prefer smaller C, then smaller gamma (map order).
        std::pair<int, int> best{0, 0};
        double best_err = std::numeric_limits<double>::infinity();
        for (const auto& [point, err] : cache) {
            if (point.first < c_lo || point.first > c_hi || point.second < g_lo || point.second > g_hi) continue;
            if (err < best_err) {
                best_err = err;
                best = point;
            }
        }
        result.C = std::pow(10.0, best.first);
        result.gamma = std::ldexp(1.0, best.second);
        result.cv_error = best_err;

        if (round >= options.max_expansions) break;
        bool expanded = false;
        if (best.first == c_hi) { ++c_hi; expanded = true; }
        else if (best.first == c_lo) { --c_lo; expanded = true; }
        if (best.second == g_hi) { ++g_hi; expanded = true; }
        else if (best.second == g_lo) { --g_lo; expanded = true; }
        if (!expanded) break;
        ++result.expansions;
    }
    return result;
}

}  // namespace meshsteg
