#include <charconv>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <Eigen/Dense>

#include "meshsteg/classifiers.hpp"
#include "meshsteg/error.hpp"

// Format: one "key value..." record per line, doubles in %.17g.
//
//   meshsteg-model 1
//   kind svm|qda|fld
//   set lfs76
//   meta.<name> <value>
//   standardizer.mean <d values>
//   standardizer.inv_scale <d values>
//   ... kind-specific records ...
//   end

namespace meshsteg {

namespace {

void put_vector(std::ostream& out, const std::string& key, const VectorXd& v) {
    out << key;
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << v(i);
    out << '\n';
}

void put_matrix(std::ostream& out, const std::string& key, const MatrixXd& m) {
    out << key << ' ' << m.rows() << ' ' << m.cols();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << ' ' << m(r, c);
    }
    out << '\n';
}

void put_standardizer(std::ostream& out, const Standardizer& s) {
    put_vector(out, "standardizer.mean", s.mean());
    put_vector(out, "standardizer.inv_scale", s.inverse_scale());
}

class Records {
public:
    explicit Records(std::istream& in) {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto sp = line.find(' ');
            const std::string key = line.substr(0, sp);
            if (key == "end") break;
            values_[key] = sp == std::string::npos ? std::string() : line.substr(sp + 1);
        }
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    const std::string& text(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw Error(ErrorCode::ParseError, "model file lacks '" + key + "'");
        return it->second;
    }

    std::vector<double> numbers(const std::string& key) const {
        std::istringstream ss(text(key));
        std::vector<double> out;
        std::string tok;
        while (ss >> tok) {
            try {
                std::size_t used = 0;
                out.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw Error(ErrorCode::ParseError, "bad number '" + tok + "' in '" + key + "'");
            }
        }
        return out;
    }

    double number(const std::string& key) const {
        const auto v = numbers(key);
        if (v.size() != 1) throw Error(ErrorCode::ParseError, "'" + key + "' must hold one number");
        return v[0];
    }

    VectorXd vector(const std::string& key) const {
        const auto v = numbers(key);
        return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }

    MatrixXd matrix(const std::string& key) const {
        const auto v = numbers(key);
        if (v.size() < 2) throw Error(ErrorCode::ParseError, "matrix '" + key + "' lacks a shape");
        const auto rows = static_cast<Eigen::Index>(v[0]);
        const auto cols = static_cast<Eigen::Index>(v[1]);
        if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) + 2 != v.size()) {
            throw Error(ErrorCode::ParseError, "matrix '" + key + "' has the wrong number of entries");
        }
        MatrixXd m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(2 + r * cols + c)];
        }
        return m;
    }

    Standardizer standardizer() const {
        return Standardizer::from_parts(vector("standardizer.mean"), vector("standardizer.inv_scale"));
    }

    const std::unordered_map<std::string, std::string>& all() const { return values_; }

private:
    std::unordered_map<std::string, std::string> values_;
};

}  // namespace

void save_model(std::ostream& out, const TrainedModel& tm) {
    const auto old_flags = out.flags();
    const auto old_precision = out.precision(17);
    out << "meshsteg-model 1\n";
    out << "kind " << to_string(tm.kind()) << '\n';
    out << "set " << to_string(tm.set) << '\n';
    for (const auto& [k, v] : tm.metadata) out << "meta." << k << ' ' << v << '\n';

    if (const auto* q = std::get_if<QdaModel>(&tm.model)) {
        put_standardizer(out, q->standardizer);
        for (int c = 0; c < 2; ++c) {
            const std::string p = "qda.class" + std::to_string(c) + ".";
            put_vector(out, p + "mean", q->cls[c].mean);
            put_matrix(out, p + "covariance", q->cls[c].covariance);
            out << p << "prior " << q->cls[c].prior << '\n';
            out << p << "regularization " << q->cls[c].regularization << '\n';
        }
    } else if (const auto* f = std::get_if<FldEnsembleModel>(&tm.model)) {
        put_standardizer(out, f->standardizer);
        out << "fld.subspace_dim " << f->subspace_dim << '\n';
        out << "fld.oob_error " << f->oob_error << '\n';
        out << "fld.learners " << f->learners.size() << '\n';
        for (std::size_t l = 0; l < f->learners.size(); ++l) {
            const FldLearner& learner = f->learners[l];
            const std::string p = "fld." + std::to_string(l) + ".";
            out << p << "features";
            for (int idx : learner.features) out << ' ' << idx;
            out << '\n';
            put_vector(out, p + "weights", learner.weights);
            out << p << "bias " << learner.bias << '\n';
        }
    } else if (const auto* s = std::get_if<SvmModel>(&tm.model)) {
        put_standardizer(out, s->standardizer);
        out << "svm.C " << s->C << '\n';
        out << "svm.gamma " << s->gamma << '\n';
        out << "svm.offset " << s->offset << '\n';
        out << "svm.converged " << (s->converged ? 1 : 0) << '\n';
        out << "svm.iterations " << s->iterations << '\n';
        put_vector(out, "svm.coefficients", s->coefficients);
        put_matrix(out, "svm.support_vectors", s->support_vectors);
    }
    out << "end\n";
    out.precision(old_precision);
    out.flags(old_flags);
}

TrainedModel load_model(std::istream& in) {
    std::string magic;
    std::getline(in, magic);
    if (magic != "meshsteg-model 1") throw Error(ErrorCode::ParseError, "not a meshsteg model file");
    const Records rec(in);
    TrainedModel tm;
    tm.set = parse_feature_set(rec.text("set"));
    for (const auto& [k, v] : rec.all()) {
        if (k.rfind("meta.", 0) == 0) tm.metadata[k.substr(5)] = v;
    }
    const ClassifierKind kind = parse_classifier(rec.text("kind"));
    switch (kind) {
        case ClassifierKind::Qda: {
            QdaModel q;
            q.standardizer = rec.standardizer();
            for (int c = 0; c < 2; ++c) {
                const std::string p = "qda.class" + std::to_string(c) + ".";
                QdaClass& k = q.cls[c];
                k.mean = rec.vector(p + "mean");
                k.covariance = rec.matrix(p + "covariance");
                k.prior = rec.number(p + "prior");
                k.regularization = rec.number(p + "regularization");
                const Eigen::LLT<MatrixXd> llt(k.covariance);
                if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularCovariance, "stored covariance is not positive definite");
                k.precision = llt.solve(MatrixXd::Identity(k.covariance.rows(), k.covariance.cols()));
                k.log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
            }
            tm.model = std::move(q);
            break;
        }
        case ClassifierKind::Fld: {
            FldEnsembleModel f;
            f.standardizer = rec.standardizer();
            f.subspace_dim = static_cast<int>(rec.number("fld.subspace_dim"));
            f.oob_error = rec.number("fld.oob_error");
            const auto count = static_cast<std::size_t>(rec.number("fld.learners"));
            for (std::size_t l = 0; l < count; ++l) {
                const std::string p = "fld." + std::to_string(l) + ".";
                FldLearner learner;
                for (double v : rec.numbers(p + "features")) learner.features.push_back(static_cast<int>(v));
                learner.weights = rec.vector(p + "weights");
                learner.bias = rec.number(p + "bias");
                if (learner.weights.size() != static_cast<Eigen::Index>(learner.features.size())) {
                    throw Error(ErrorCode::ParseError, "learner " + std::to_string(l) + " weight/feature count mismatch");
                }
                f.learners.push_back(std::move(learner));
            }
            tm.model = std::move(f);
            break;
        }
        case ClassifierKind::Svm: {
            SvmModel s;
            s.standardizer = rec.standardizer();
            s.C = rec.number("svm.C");
            s.gamma = rec.number("svm.gamma");
            s.offset = rec.number("svm.offset");
            s.converged = rec.number("svm.converged") != 0.0;
            s.iterations = static_cast<long>(rec.number("svm.iterations"));
            s.coefficients = rec.vector("svm.coefficients");
            s.support_vectors = rec.matrix("svm.support_vectors");
            if (s.support_vectors.rows() != s.coefficients.size()) {
                throw Error(ErrorCode::ParseError, "support vector / coefficient count mismatch");
            }
            tm.model = std::move(s);
            break;
        }
    }
    return tm;
}

}  // namespace meshsteg
