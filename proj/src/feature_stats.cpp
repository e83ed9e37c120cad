#include "meshsteg/feature_stats.hpp"

#include <cmath>
#include <cstdio>

#include "meshsteg/error.hpp"

namespace meshsteg {

MomentQuad log_moments(std::span<const double> raw, double epsilon) {
    if (raw.empty()) throw Error(ErrorCode::EmptyArray, "moment statistics of an empty feature array");
    const auto n = static_cast<double>(raw.size());
    std::vector<double> x;
    x.reserve(raw.size());
    for (double r : raw) {
        if (!(r >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative or NaN raw feature value");
        x.push_back(std::log(r + epsilon));
    }
    // Accumulate offsets from the first value so a constant array has an
    // exact mean and zero central moments whatever its length.
    const double shift = x.front();
    double sum = 0.0;
    for (double xi : x) sum += xi - shift;
    const double offset = sum / n;
    MomentQuad m;
    m.mean = shift + offset;
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
    for (double xi : x) {
        const double d = (xi - shift) - offset;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    m.variance = m2;
    if (m2 >= 1e-24) {
        m.skewness = m3 / std::pow(m2, 1.5);
        m.kurtosis = m4 / (m2 * m2);
    }
    return m;
}

std::string_view to_string(FeatureSet set) {
    switch (set) {
        case FeatureSet::Yang40: return "yang40";
        case FeatureSet::Yang40Vnf4: return "yang40+vnf4";
        case FeatureSet::Yang40Cf8: return "yang40+cf8";
        case FeatureSet::Lfs52: return "lfs52";
        case FeatureSet::Scf24: return "scf24";
        case FeatureSet::Lfs76: return "lfs76";
    }
    return "?";
}

FeatureSet parse_feature_set(std::string_view name) {
    for (FeatureSet s : all_feature_sets()) {
        if (to_string(s) == name) return s;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown feature set '" + std::string(name) + "'");
}

std::vector<FeatureSet> all_feature_sets() {
    return {FeatureSet::Yang40, FeatureSet::Yang40Vnf4, FeatureSet::Yang40Cf8,
            FeatureSet::Lfs52,  FeatureSet::Scf24,      FeatureSet::Lfs76};
}

std::vector<int> feature_set_members(FeatureSet set) {
    std::vector<int> m;
    const auto range = [&m](int lo, int hi) {
        for (int k = lo; k <= hi; ++k) m.push_back(k);
    };
    switch (set) {
        case FeatureSet::Yang40: range(1, 10); break;
        case FeatureSet::Yang40Vnf4: range(1, 11); break;
        case FeatureSet::Yang40Cf8: range(1, 10); range(12, 13); break;
        case FeatureSet::Lfs52: range(1, 13); break;
        case FeatureSet::Scf24: range(14, 19); break;
        case FeatureSet::Lfs76: range(1, 19); break;
    }
    return m;
}

int feature_set_dimension(FeatureSet set) {
    return static_cast<int>(feature_set_members(set).size()) * kMomentsPerFeature;
}

std::vector<int> lfs76_columns(FeatureSet set) {
    std::vector<int> cols;
    for (int phi : feature_set_members(set)) {
        for (int m = 0; m < kMomentsPerFeature; ++m) cols.push_back((phi - 1) * kMomentsPerFeature + m);
    }
    return cols;
}

FeatureVector assemble(const PerElementFeatures& features, FeatureSet set, double epsilon) {
    FeatureVector fv;
    fv.set = set;
    for (int phi : feature_set_members(set)) {
        const auto& raw = features(phi);
        if (raw.empty()) {
            throw Error(ErrorCode::MissingFeature, "feature phi" + std::to_string(phi) + " has no elements");
        }
        const MomentQuad q = log_moments(raw, epsilon);
        fv.values.insert(fv.values.end(), {q.mean, q.variance, q.skewness, q.kurtosis});
    }
    return fv;
}

FeatureVector project(const FeatureVector& lfs76, FeatureSet set) {
    if (lfs76.values.size() != static_cast<std::size_t>(kLfs76Dim)) {
        throw Error(ErrorCode::DimensionMismatch, "projection needs a 76-dimensional vector, got " +
                                                      std::to_string(lfs76.values.size()));
    }
    FeatureVector out;
    out.set = set;
    out.label = lfs76.label;
    for (int c : lfs76_columns(set)) out.values.push_back(lfs76.values[static_cast<std::size_t>(c)]);
    return out;
}

std::string feature_csv_header(int dimension) {
    std::string h = "label";
    char buf[16];
    for (int i = 0; i < dimension; ++i) {
        std::snprintf(buf, sizeof buf, ",f%03d", i);
        h += buf;
    }
    return h;
}

}  // namespace meshsteg
