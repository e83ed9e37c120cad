#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "meshsteg/feature_stats.hpp"

namespace meshsteg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Row-per-sample design matrix with labels 0 (cover) / 1 (stego).
struct Dataset {
    MatrixXd x;
    std::vector<int> y;

    std::size_t size() const { return y.size(); }
    Eigen::Index dim() const { return x.cols(); }
    std::size_t count(int label) const;
    Dataset subset(const std::vector<int>& rows) const;
    Dataset columns(const std::vector<int>& cols) const;
};

// Train-set mean and standard deviation per dimension; dimensions whose
// deviation is below 1e-12 map to 0.
class Standardizer {
public:
    static Standardizer fit(const MatrixXd& x);
    static Standardizer identity(Eigen::Index dim);

    VectorXd apply(const VectorXd& v) const;
    MatrixXd apply(const MatrixXd& x) const;

    const VectorXd& mean() const { return mean_; }
    const VectorXd& inverse_scale() const { return inv_scale_; }
    Eigen::Index dim() const { return mean_.size(); }

    static Standardizer from_parts(VectorXd mean, VectorXd inverse_scale);

private:
    VectorXd mean_;
    VectorXd inv_scale_;  // 1/std, or 0 for constant dimensions
};

// ---------------------------------------------------------------------------

struct QdaClass {
    VectorXd mean;
    MatrixXd covariance;  // regularised
    MatrixXd precision;
    double log_det = 0.0;
    double prior = 0.5;
    double regularization = 0.0;  // tau actually applied (0 when none was needed)
};

struct QdaModel {
    Standardizer standardizer;
    QdaClass cls[2];

    // delta_1(x) - delta_0(x) on a raw (unstandardised) vector.
    double score(const VectorXd& x) const;
    double discriminant(int label, const VectorXd& standardized) const;
};

struct QdaOptions {
    bool standardize = true;
};

QdaModel qda_train(const Dataset& train, const QdaOptions& options = {});
double qda_score(const QdaModel& model, const VectorXd& x);

// ---------------------------------------------------------------------------

struct FldLearner {
    std::vector<int> features;
    VectorXd weights;
    double bias = 0.0;

    bool vote(const VectorXd& standardized) const;
};

struct FldEnsembleModel {
    Standardizer standardizer;
    std::vector<FldLearner> learners;
    int subspace_dim = 0;
    double oob_error = 0.0;
    std::vector<double> oob_trace;                      // OOB error after each learner, chosen subspace
    std::vector<std::pair<int, double>> subspace_search;  // (d_sub, final OOB error) per rung

    int votes(const VectorXd& x) const;
    // Vote fraction minus 0.5; stego iff strictly positive (ties go to cover).
    double score(const VectorXd& x) const;
};

struct FldOptions {
    std::uint64_t seed = 0;
    int max_learners = 500;
    int min_learners = 20;
    int stability_window = 10;
    double stability_tolerance = 1e-3;
    double scatter_regularization = 1e-6;
    std::vector<int> subspace_dims;  // empty = default ladder
    bool standardize = true;
};

std::vector<int> fld_subspace_ladder(int dim, std::size_t samples);
FldEnsembleModel fld_ensemble_train(const Dataset& train, const FldOptions& options = {});

// ---------------------------------------------------------------------------

struct SvmModel {
    Standardizer standardizer;
    MatrixXd support_vectors;  // standardised
    VectorXd coefficients;     // alpha_i * y_i, y in {-1, +1}
    double offset = 0.0;       // b; decision = sum coef * G(sv, x) - b
    double gamma = 1.0;
    double C = 1.0;
    bool converged = true;
    long iterations = 0;

    double score(const VectorXd& x) const;
    double score_standardized(const VectorXd& z) const;
};

struct SvmOptions {
    double tolerance = 1e-3;
    long max_iterations = 100000;
    bool standardize = true;
};

// Full dual solution, exposed for constraint checks.
struct SvmSolution {
    VectorXd alpha;
    double offset = 0.0;
    double objective = 0.0;  // dual objective sum(alpha) - 1/2 alpha' Q alpha
    bool converged = true;
    long iterations = 0;
};

double rbf_kernel(const VectorXd& a, const VectorXd& b, double gamma);

// SMO on a precomputed Gram matrix; labels in {-1, +1}.
SvmSolution svm_solve(const MatrixXd& gram, const std::vector<int>& signs, double C, const SvmOptions& options = {});

SvmModel svm_train(const Dataset& train, double C, double gamma, const SvmOptions& options = {},
                   SvmSolution* solution = nullptr);
double svm_score(const SvmModel& model, const VectorXd& x);

struct GridPoint {
    int c_exponent = 0;      // C = 10^c_exponent
    int gamma_exponent = 0;  // gamma = 2^gamma_exponent
    double cv_error = 0.0;
};

struct GridSearchResult {
    double C = 0.0;
    double gamma = 0.0;
    double cv_error = 0.0;
    int expansions = 0;
    std::vector<GridPoint> evaluated;  // in evaluation order
};

struct GridSearchOptions {
    int c_min = 1, c_max = 7;            // powers of ten
    int gamma_min = -12, gamma_max = -1;  // powers of two
    int folds = 5;
    int max_expansions = 3;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    SvmOptions svm;
};

// Stratified fold assignment (0..folds-1) per sample.
std::vector<int> stratified_folds(const std::vector<int>& labels, int folds, std::uint64_t seed);

GridSearchResult svm_grid_search(const Dataset& train, const GridSearchOptions& options = {});

// ---------------------------------------------------------------------------

enum class ClassifierKind { Qda, Fld, Svm };

std::string_view to_string(ClassifierKind kind);
ClassifierKind parse_classifier(std::string_view name);

struct TrainedModel {
    std::variant<QdaModel, FldEnsembleModel, SvmModel> model;
    FeatureSet set = FeatureSet::Lfs76;
    std::map<std::string, std::string> metadata;  // seed, parameters, ...

    ClassifierKind kind() const;
    Eigen::Index dim() const;
    double score(const VectorXd& x) const;  // DimensionMismatch on wrong length
    int predict(const VectorXd& x) const { return score(x) > 0.0 ? 1 : 0; }
};

// Plain-text key/value serialisation with round-trip precision doubles.
void save_model(std::ostream& out, const TrainedModel& model);
TrainedModel load_model(std::istream& in);

}  // namespace meshsteg
