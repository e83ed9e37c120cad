#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "meshsteg/classifiers.hpp"
#include "meshsteg/feature_stats.hpp"
#include "meshsteg/mesh.hpp"
#include "meshsteg/rng.hpp"

// Independent reference implementations shared by the unit tests and the
// acceptance run.
namespace meshsteg::testing {

// Two-pass central moments in long double.
inline MomentQuad brute_moments(const std::vector<double>& raw, double eps) {
    const auto n = static_cast<long double>(raw.size());
    std::vector<long double> x;
    for (double r : raw) x.push_back(std::log(static_cast<long double>(r) + eps));
    long double mean = 0;
    for (auto v : x) mean += v;
    mean /= n;
    long double m2 = 0, m3 = 0, m4 = 0;
    for (auto v : x) {
        const long double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    MomentQuad q;
    q.mean = static_cast<double>(mean);
    q.variance = static_cast<double>(m2);
    if (m2 >= 1e-24L) {
        q.skewness = static_cast<double>(m3 / std::pow(m2, 1.5L));
        q.kurtosis = static_cast<double>(m4 / (m2 * m2));
    }
    return q;
}

inline double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[i] != 1 || y[j] != 0) continue;
            pairs += 1;
            wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
    }
    return wins / pairs;
}

// n samples per class; class 1 shifted by `shift` along the first axis.
inline Dataset gaussian_pair(std::size_t n, int dim, double shift, std::uint64_t seed, double scale1 = 1.0) {
    Rng rng(seed);
    Dataset d;
    d.x.resize(static_cast<Eigen::Index>(2 * n), dim);
    for (std::size_t i = 0; i < 2 * n; ++i) {
        const int label = i < n ? 0 : 1;
        for (int c = 0; c < dim; ++c) {
            double v = rng.normal() * (label ? scale1 : 1.0);
            if (label && c == 0) v += shift;
            d.x(static_cast<Eigen::Index>(i), c) = v;
        }
        d.y.push_back(label);
    }
    return d;
}

inline double log_gauss(const VectorXd& x, const VectorXd& mu, const MatrixXd& cov) {
    const Eigen::FullPivLU<MatrixXd> lu(cov);
    const VectorXd d = x - mu;
    return -0.5 * std::log(lu.determinant()) - 0.5 * d.dot(lu.solve(d));
}

// Exact dual optimum by enumerating which multipliers sit at 0, at C or in between.
inline double exact_dual(const MatrixXd& q, const VectorXd& y, double C) {
    const auto n = static_cast<int>(y.size());
    double best = -std::numeric_limits<double>::infinity();
    int states = 1;
    for (int i = 0; i < n; ++i) states *= 3;
    for (int code = 0; code < states; ++code) {
        std::vector<int> free, fixed;
        VectorXd a = VectorXd::Zero(n);
        int c = code;
        for (int i = 0; i < n; ++i, c /= 3) {
            if (c % 3 == 0) fixed.push_back(i);
            else if (c % 3 == 1) {
                a(i) = C;
                fixed.push_back(i);
            } else {
                free.push_back(i);
            }
        }
        if (!free.empty()) {
            const auto m = static_cast<Eigen::Index>(free.size());
            MatrixXd kkt = MatrixXd::Zero(m + 1, m + 1);
            VectorXd rhs(m + 1);
            for (Eigen::Index r = 0; r < m; ++r) {
                double fixed_term = 0.0;
                for (int j : fixed) fixed_term += q(free[static_cast<std::size_t>(r)], j) * a(j);
                rhs(r) = 1.0 - fixed_term;
                for (Eigen::Index s = 0; s < m; ++s) kkt(r, s) = q(free[static_cast<std::size_t>(r)], free[static_cast<std::size_t>(s)]);
                kkt(r, m) = y(free[static_cast<std::size_t>(r)]);
                kkt(m, r) = y(free[static_cast<std::size_t>(r)]);
            }
            double fixed_sum = 0.0;
            for (int j : fixed) fixed_sum += y(j) * a(j);
            rhs(m) = -fixed_sum;
            const VectorXd sol = kkt.fullPivLu().solve(rhs);
            if (!((kkt * sol - rhs).norm() < 1e-9)) continue;
            bool ok = true;
            for (Eigen::Index r = 0; r < m; ++r) {
                const double v = sol(r);
                if (v < -1e-12 || v > C + 1e-12) ok = false;
                a(free[static_cast<std::size_t>(r)]) = std::clamp(v, 0.0, C);
            }
            if (!ok) continue;
        }
        if (std::abs(a.dot(y)) > 1e-9) continue;
        best = std::max(best, a.sum() - 0.5 * a.dot(q * a));
    }
    return best;
}

inline MatrixXd rbf_gram(const MatrixXd& x, double gamma) {
    MatrixXd g(x.rows(), x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.rows(); ++j) {
            g(i, j) = std::exp(-gamma * (x.row(i) - x.row(j)).squaredNorm());
        }
    }
    return g;
}

inline Dataset xor_points() {
    Dataset d;
    d.x.resize(4, 2);
    d.x << 0, 0, 1, 1, 0, 1, 1, 0;
    d.y = {0, 0, 1, 1};
    return d;
}

// Cover radial histogram with K equal-width bins about the centroid.
inline std::vector<int> radial_histogram(const TriMesh& m, int bins) {
    const Vec3 c = m.centroid();
    std::vector<double> r;
    for (const auto& p : m.vertices()) r.push_back((p - c).norm());
    const double lo = *std::min_element(r.begin(), r.end());
    const double hi = *std::max_element(r.begin(), r.end());
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    for (double x : r) {
        const int b = std::clamp(static_cast<int>(std::floor((x - lo) / (hi - lo) * bins)), 0, bins - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    return counts;
}

}  // namespace meshsteg::testing
