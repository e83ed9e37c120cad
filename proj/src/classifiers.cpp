#include "meshsteg/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "meshsteg/error.hpp"

namespace meshsteg {

std::size_t Dataset::count(int label) const { return static_cast<std::size_t>(std::count(y.begin(), y.end(), label)); }

Dataset Dataset::subset(const std::vector<int>& rows) const {
    Dataset d;
    d.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    d.y.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        d.x.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
        d.y.push_back(y[static_cast<std::size_t>(rows[r])]);
    }
    return d;
}

Dataset Dataset::columns(const std::vector<int>& cols) const {
    Dataset d;
    d.y = y;
    d.x.resize(x.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) d.x.col(static_cast<Eigen::Index>(c)) = x.col(cols[c]);
    return d;
}

Standardizer Standardizer::fit(const MatrixXd& x) {
    if (x.rows() == 0) throw Error(ErrorCode::EmptyArray, "cannot standardise an empty training set");
    Standardizer s;
    s.mean_ = x.colwise().mean().transpose();
    s.inv_scale_.resize(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double var = (x.col(c).array() - s.mean_(c)).square().mean();
        const double sd = std::sqrt(var);
        s.inv_scale_(c) = sd < 1e-12 ? 0.0 : 1.0 / sd;
    }
    return s;
}

Standardizer Standardizer::identity(Eigen::Index dim) {
    return from_parts(VectorXd::Zero(dim), VectorXd::Ones(dim));
}

Standardizer Standardizer::from_parts(VectorXd mean, VectorXd inverse_scale) {
    if (mean.size() != inverse_scale.size()) throw Error(ErrorCode::DimensionMismatch, "standardiser parts differ in length");
    Standardizer s;
    s.mean_ = std::move(mean);
    s.inv_scale_ = std::move(inverse_scale);
    return s;
}

VectorXd Standardizer::apply(const VectorXd& v) const {
    if (v.size() != mean_.size()) {
        throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(mean_.size()) + " features, got " +
                                                      std::to_string(v.size()));
    }
    return (v - mean_).cwiseProduct(inv_scale_);
}

MatrixXd Standardizer::apply(const MatrixXd& x) const {
    if (x.cols() != mean_.size()) throw Error(ErrorCode::DimensionMismatch, "feature matrix width mismatch");
    return (x.rowwise() - mean_.transpose()).array().rowwise() * inv_scale_.transpose().array();
}

// ---------------------------------------------------------------------------
// QDA

namespace {

bool well_conditioned(const MatrixXd& m) {
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    return hi > 0.0 && lo > 1e-12 * hi;
}

QdaClass fit_class(const MatrixXd& z, double prior) {
    QdaClass c;
    c.prior = prior;
    c.mean = z.colwise().mean().transpose();
    const MatrixXd centered = z.rowwise() - c.mean.transpose();
    const double denom = z.rows() > 1 ? static_cast<double>(z.rows() - 1) : 1.0;
    MatrixXd cov = centered.transpose() * centered / denom;
    cov = 0.5 * (cov + cov.transpose());

    const auto p = static_cast<double>(z.cols());
    const double tr = cov.trace();
    const double scale = tr > 0.0 ? tr / p : 1.0;
    MatrixXd reg = cov;
    if (!well_conditioned(reg)) {
        bool ok = false;
        for (double tau = 1e-6; tau <= 1e-2 * (1.0 + 1e-9); tau *= 10.0) {
            reg = cov + tau * scale * MatrixXd::Identity(z.cols(), z.cols());
            if (well_conditioned(reg)) {
                c.regularization = tau;
                ok = true;
                break;
            }
        }
        if (!ok) throw Error(ErrorCode::SingularCovariance, "class covariance stays singular after regularisation");
    }
    const Eigen::LLT<MatrixXd> llt(reg);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularCovariance, "Cholesky factorisation failed");
    c.covariance = reg;
    c.precision = llt.solve(MatrixXd::Identity(z.cols(), z.cols()));
    c.log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return c;
}

}  // namespace

double QdaModel::discriminant(int label, const VectorXd& z) const {
    const QdaClass& c = cls[label];
    const VectorXd d = z - c.mean;
    return -0.5 * c.log_det - 0.5 * d.dot(c.precision * d) + std::log(c.prior);
}

double QdaModel::score(const VectorXd& x) const {
    const VectorXd z = standardizer.apply(x);
    return discriminant(1, z) - discriminant(0, z);
}

QdaModel qda_train(const Dataset& train, const QdaOptions& options) {
    const std::size_t n0 = train.count(0);
    const std::size_t n1 = train.count(1);
    if (n0 < 2 || n1 < 2) throw Error(ErrorCode::SingleClass, "QDA needs at least two samples per class");
    QdaModel model;
    model.standardizer = options.standardize ? Standardizer::fit(train.x) : Standardizer::identity(train.dim());
    const MatrixXd z = model.standardizer.apply(train.x);
    for (int label = 0; label < 2; ++label) {
        std::vector<int> rows;
        for (std::size_t i = 0; i < train.size(); ++i) {
            if (train.y[i] == label) rows.push_back(static_cast<int>(i));
        }
        MatrixXd zc(static_cast<Eigen::Index>(rows.size()), z.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) zc.row(static_cast<Eigen::Index>(r)) = z.row(rows[r]);
        model.cls[label] = fit_class(zc, static_cast<double>(rows.size()) / static_cast<double>(train.size()));
    }
    return model;
}

double qda_score(const QdaModel& model, const VectorXd& x) { return model.score(x); }

// ---------------------------------------------------------------------------

std::string_view to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::Qda: return "qda";
        case ClassifierKind::Fld: return "fld";
        case ClassifierKind::Svm: return "svm";
    }
    return "?";
}

ClassifierKind parse_classifier(std::string_view name) {
    if (name == "qda") return ClassifierKind::Qda;
    if (name == "fld" || name == "fld_ensemble") return ClassifierKind::Fld;
    if (name == "svm") return ClassifierKind::Svm;
    throw Error(ErrorCode::InvalidArgument, "unknown classifier '" + std::string(name) + "'");
}

ClassifierKind TrainedModel::kind() const {
    return static_cast<ClassifierKind>(model.index());
}

Eigen::Index TrainedModel::dim() const {
    return std::visit([](const auto& m) { return m.standardizer.dim(); }, model);
}

double TrainedModel::score(const VectorXd& x) const {
    if (x.size() != dim()) {
        throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(dim()) + " features, got " +
                                                      std::to_string(x.size()));
    }
    return std::visit([&x](const auto& m) { return m.score(x); }, model);
}

}  // namespace meshsteg
