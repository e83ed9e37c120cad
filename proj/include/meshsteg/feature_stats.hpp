#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meshsteg/features.hpp"

namespace meshsteg {

inline constexpr double kDefaultLogEpsilon = 1e-12;
inline constexpr int kMomentsPerFeature = 4;
inline constexpr int kLfs76Dim = kRawFeatureCount * kMomentsPerFeature;

struct MomentQuad {
    double mean = 0.0;
    double variance = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;  // non-excess
};

// Population moments of ln(raw + epsilon). When the second central moment is
// below 1e-24, skewness and kurtosis are reported as 0.
MomentQuad log_moments(std::span<const double> raw, double epsilon = kDefaultLogEpsilon);

enum class FeatureSet { Yang40, Yang40Vnf4, Yang40Cf8, Lfs52, Scf24, Lfs76 };

std::string_view to_string(FeatureSet set);
FeatureSet parse_feature_set(std::string_view name);  // "yang40", "yang40+vnf4", ...
std::vector<FeatureSet> all_feature_sets();

// One-based raw feature indices that make up a set, ascending.
std::vector<int> feature_set_members(FeatureSet set);
int feature_set_dimension(FeatureSet set);

// Column indices of a set's entries inside an LFS76 vector, in set order.
std::vector<int> lfs76_columns(FeatureSet set);

enum class Label { Cover = 0, Stego = 1, Unlabeled = -1 };

struct FeatureVector {
    std::vector<double> values;
    FeatureSet set = FeatureSet::Lfs76;
    Label label = Label::Unlabeled;
};

// Moments of the set's raw arrays, ordered by feature index then
// (mean, variance, skewness, kurtosis).
FeatureVector assemble(const PerElementFeatures& features, FeatureSet set, double epsilon = kDefaultLogEpsilon);

// Restrict an LFS76 vector to a subset.
FeatureVector project(const FeatureVector& lfs76, FeatureSet set);

// "label,f000,..." header for a set's dimension.
std::string feature_csv_header(int dimension);

}  // namespace meshsteg
