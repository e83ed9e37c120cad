#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meshsteg/classifiers.hpp"
#include "meshsteg/feature_stats.hpp"

namespace meshsteg {

struct SplitPlan {
    int trials = 30;
    int train = 260;  // pairs
    int test = 94;    // pairs
    std::uint64_t seed = 0;
};

// Pair indices; a pair's cover and stego always land on the same side.
struct Split {
    std::vector<int> train;
    std::vector<int> test;
};

std::vector<Split> make_splits(std::size_t corpus_size, const SplitPlan& plan);

struct Confusion {
    long tp = 0;
    long fp = 0;
    long tn = 0;
    long fn = 0;

    long total() const { return tp + fp + tn + fn; }
    long errors() const { return fp + fn; }
};

Confusion confusion_at_zero(std::span<const double> scores, std::span<const int> labels);

// (FN + FP) / (P + N).
double detection_error(const Confusion& c);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // from (0,0) to (1,1), one step per distinct score
    double auc = 0.0;
};

// Higher scores mean "stego" (label 1).
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

inline constexpr int kRelevanceCategories = 10;

// Raw feature indices (one-based) per relevance category.
const std::array<std::vector<int>, kRelevanceCategories>& relevance_categories();

struct RelevanceTable {
    std::vector<double> relevance;  // |rho| per LFS76 column
    std::array<double, kRelevanceCategories> category{};
};

// |Pearson correlation| between each column and the labels; zero-variance
// columns get 0. Category means need a 76-column input.
RelevanceTable pearson_relevance(const MatrixXd& x, std::span<const int> labels);
std::vector<double> pearson_abs(const MatrixXd& x, std::span<const int> labels);

// LFS76 vectors of each cover/stego pair.
struct FeatureTable {
    std::vector<std::string> ids;
    MatrixXd cover;  // pairs x 76
    MatrixXd stego;  // pairs x 76

    std::size_t pairs() const { return ids.size(); }
    Dataset dataset(const std::vector<int>& pair_ids, FeatureSet set) const;
};

struct ExperimentConfig {
    std::vector<FeatureSet> sets{FeatureSet::Yang40, FeatureSet::Lfs52, FeatureSet::Lfs76};
    std::vector<ClassifierKind> classifiers{ClassifierKind::Qda, ClassifierKind::Svm, ClassifierKind::Fld};
    SplitPlan plan;
    bool grid_search = false;  // SVM: per-trial grid search instead of fixed (C, gamma)
    double svm_C = 1e4;
    double svm_gamma = 0x1.0p-11;
    GridSearchOptions grid;
    FldOptions fld;
    SvmOptions svm;
    unsigned jobs = 1;
};

struct TrialRecord {
    FeatureSet set = FeatureSet::Lfs76;
    ClassifierKind classifier = ClassifierKind::Qda;
    int trial = 0;
    Confusion confusion;
    double error = 0.0;
    double auc = 0.0;
    double svm_C = 0.0;      // SVM only
    double svm_gamma = 0.0;  // SVM only
    RocCurve roc;
};

struct CellSummary {
    FeatureSet set = FeatureSet::Lfs76;
    ClassifierKind classifier = ClassifierKind::Qda;
    int trials = 0;
    double median_error = 0.0;
    double median_error_count = 0.0;
    double median_auc = 0.0;
    double auc_std = 0.0;
};

struct ExperimentReport {
    std::vector<TrialRecord> trials;  // ordered by (set, classifier, trial)
    std::vector<CellSummary> summary;
    RelevanceTable relevance;

    const CellSummary& cell(FeatureSet set, ClassifierKind clf) const;
};

double median(std::vector<double> values);
double sample_std(const std::vector<double>& values);

std::vector<CellSummary> summarize(const std::vector<TrialRecord>& trials);

ExperimentReport run_experiment(const FeatureTable& table, const ExperimentConfig& config);

// Trains one classifier on a dataset (SVM uses fixed parameters unless grid
// search is requested in the config).
TrainedModel train_classifier(const Dataset& train, FeatureSet set, ClassifierKind kind, const ExperimentConfig& config,
                              std::uint64_t seed);

// report.csv, summary.csv, roc_<set>_<classifier>.csv, relevance.csv,
// relevance_features.csv.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

// relevance.csv and relevance_features.csv only.
void write_relevance(const RelevanceTable& relevance, const std::filesystem::path& dir);

}  // namespace meshsteg
