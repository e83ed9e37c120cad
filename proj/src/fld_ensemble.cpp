#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "meshsteg/classifiers.hpp"
#include "meshsteg/error.hpp"
#include "meshsteg/rng.hpp"

namespace meshsteg {

bool FldLearner::vote(const VectorXd& z) const {
    double s = bias;
    for (std::size_t k = 0; k < features.size(); ++k) s += weights(static_cast<Eigen::Index>(k)) * z(features[k]);
    return s > 0.0;
}

int FldEnsembleModel::votes(const VectorXd& x) const {
    const VectorXd z = standardizer.apply(x);
    int v = 0;
    for (const auto& l : learners) v += l.vote(z) ? 1 : 0;
    return v;
}

double FldEnsembleModel::score(const VectorXd& x) const {
    if (learners.empty()) return -0.5;
    return static_cast<double>(votes(x)) / static_cast<double>(learners.size()) - 0.5;
}

std::vector<int> fld_subspace_ladder(int dim, std::size_t samples) {
    const auto ceil_div = [](int a, int b) { return (a + b - 1) / b; };
    // Top rung: the full dimension, capped so the within-class scatter of a
    // bootstrap sample is not rank-deficient before regularisation.
    const int top = std::max(1, std::min(dim, static_cast<int>(samples) - 2));
    std::vector<int> ladder{ceil_div(dim, 8), ceil_div(dim, 4), ceil_div(dim, 2), top};
    for (int& d : ladder) d = std::clamp(d, 1, top);
    std::sort(ladder.begin(), ladder.end());
    ladder.erase(std::unique(ladder.begin(), ladder.end()), ladder.end());
    return ladder;
}

namespace {

struct EnsembleRun {
    std::vector<FldLearner> learners;
    std::vector<double> oob_trace;
};

FldLearner fit_learner(const MatrixXd& z, const std::vector<int>& y, const std::vector<int>& bag,
                       std::vector<int> features, double reg) {
    const auto d = static_cast<Eigen::Index>(features.size());
    VectorXd mu[2] = {VectorXd::Zero(d), VectorXd::Zero(d)};
    double n[2] = {0.0, 0.0};
    for (int i : bag) {
        const int c = y[static_cast<std::size_t>(i)];
        for (Eigen::Index k = 0; k < d; ++k) mu[c](k) += z(i, features[static_cast<std::size_t>(k)]);
        n[c] += 1.0;
    }
    mu[0] /= n[0];
    mu[1] /= n[1];
    MatrixXd scatter = reg * MatrixXd::Identity(d, d);
    VectorXd row(d);
    for (int i : bag) {
        const int c = y[static_cast<std::size_t>(i)];
        for (Eigen::Index k = 0; k < d; ++k) row(k) = z(i, features[static_cast<std::size_t>(k)]) - mu[c](k);
        scatter.selfadjointView<Eigen::Lower>().rankUpdate(row);
    }
    const MatrixXd full = scatter.selfadjointView<Eigen::Lower>();
    const Eigen::LDLT<MatrixXd> ldlt(full);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::DegenerateScatter, "within-class scatter is singular");
    FldLearner learner;
    learner.weights = ldlt.solve(mu[1] - mu[0]);
    if (!learner.weights.allFinite()) throw Error(ErrorCode::DegenerateScatter, "non-finite discriminant weights");
    learner.bias = -learner.weights.dot(0.5 * (mu[0] + mu[1]));
    learner.features = std::move(features);
    return learner;
}

EnsembleRun grow_ensemble(const MatrixXd& z, const std::vector<int>& y, int d_sub, const FldOptions& opt,
                          std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(z.rows());
    const auto p = static_cast<int>(z.cols());
    Rng rng(seed);
    EnsembleRun run;
    std::vector<int> oob_votes(n, 0);
    std::vector<int> oob_count(n, 0);
    std::vector<int> all_features(static_cast<std::size_t>(p));
    std::iota(all_features.begin(), all_features.end(), 0);
    std::vector<char> in_bag(n);

    for (int l = 0; l < opt.max_learners; ++l) {
        // Random subspace: partial Fisher-Yates, then sorted for reproducible storage.
        std::vector<int> pool = all_features;
        for (int k = 0; k < d_sub; ++k) {
            const auto j = static_cast<std::size_t>(k) + rng.index(static_cast<std::uint64_t>(p - k));
            std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
        }
        std::vector<int> features(pool.begin(), pool.begin() + d_sub);
        std::sort(features.begin(), features.end());

        // Bootstrap sample containing both classes.
        std::vector<int> bag(n);
        for (;;) {
            std::fill(in_bag.begin(), in_bag.end(), 0);
            int classes[2] = {0, 0};
            for (auto& b : bag) {
                b = static_cast<int>(rng.index(n));
                in_bag[static_cast<std::size_t>(b)] = 1;
                ++classes[y[static_cast<std::size_t>(b)]];
            }
            if (classes[0] > 0 && classes[1] > 0) break;
        }

        FldLearner learner = fit_learner(z, y, bag, std::move(features), opt.scatter_regularization);
        std::size_t wrong = 0;
        std::size_t seen = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_bag[i]) {
                oob_votes[i] += learner.vote(z.row(static_cast<Eigen::Index>(i)).transpose()) ? 1 : 0;
                ++oob_count[i];
            }
            if (oob_count[i] == 0) continue;
            ++seen;
            const int predicted = 2 * oob_votes[i] > oob_count[i] ? 1 : 0;
            if (predicted != y[i]) ++wrong;
        }
        run.learners.push_back(std::move(learner));
        run.oob_trace.push_back(seen ? static_cast<double>(wrong) / static_cast<double>(seen) : 0.5);

        const auto L = static_cast<int>(run.learners.size());
        if (L >= opt.min_learners && L > opt.stability_window) {
            const double now = run.oob_trace.back();
            const double before = run.oob_trace[static_cast<std::size_t>(L - 1 - opt.stability_window)];
            const double change = std::abs(now - before);
            if (change == 0.0 || change / std::max(before, 1e-12) < opt.stability_tolerance) break;
        }
    }
    return run;
}

}  // namespace

FldEnsembleModel fld_ensemble_train(const Dataset& train, const FldOptions& options) {
    if (train.count(0) < 2 || train.count(1) < 2) {
        throw Error(ErrorCode::SingleClass, "FLD ensemble needs samples from both classes");
    }
    if (options.max_learners < 1) throw Error(ErrorCode::InvalidArgument, "max_learners must be positive");
    FldEnsembleModel model;
    model.standardizer = options.standardize ? Standardizer::fit(train.x) : Standardizer::identity(train.dim());
    const MatrixXd z = model.standardizer.apply(train.x);
    const auto p = static_cast<int>(train.dim());

    std::vector<int> ladder = options.subspace_dims.empty() ? fld_subspace_ladder(p, train.size()) : options.subspace_dims;
    EnsembleRun best;
    double best_error = 2.0;
    for (std::size_t r = 0; r < ladder.size(); ++r) {
        const int d = std::clamp(ladder[r], 1, p);
        EnsembleRun run = grow_ensemble(z, train.y, d, options, derive_seed(options.seed, r));
        const double err = run.oob_trace.back();
        model.subspace_search.emplace_back(d, err);
        if (err < best_error) {
            best_error = err;
            best = std::move(run);
            model.subspace_dim = d;
        }
    }
    model.learners = std::move(best.learners);
    model.oob_trace = std::move(best.oob_trace);
    model.oob_error = best_error;
    return model;
}

}  // namespace meshsteg
