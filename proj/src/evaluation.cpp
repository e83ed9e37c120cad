#include "meshsteg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "meshsteg/error.hpp"
#include "meshsteg/parallel.hpp"
#include "meshsteg/rng.hpp"

namespace meshsteg {

std::vector<Split> make_splits(std::size_t corpus_size, const SplitPlan& plan) {
    if (plan.trials < 1) throw Error(ErrorCode::EmptyPlan, "split plan has no trials");
    if (plan.train < 1 || plan.test < 1) throw Error(ErrorCode::InvalidArgument, "train and test sizes must be positive");
    if (static_cast<std::size_t>(plan.train + plan.test) != corpus_size) {
        throw Error(ErrorCode::SizeMismatch, "train + test = " + std::to_string(plan.train + plan.test) +
                                                 " but the corpus has " + std::to_string(corpus_size) + " pairs");
    }
    std::vector<Split> splits;
    splits.reserve(static_cast<std::size_t>(plan.trials));
    for (int t = 0; t < plan.trials; ++t) {
        std::vector<int> ids(corpus_size);
        std::iota(ids.begin(), ids.end(), 0);
        Rng rng(derive_seed(plan.seed, static_cast<std::uint64_t>(t)));
        rng.shuffle(ids);
        Split s;
        s.train.assign(ids.begin(), ids.begin() + plan.train);
        s.test.assign(ids.begin() + plan.train, ids.end());
        std::sort(s.train.begin(), s.train.end());
        std::sort(s.test.begin(), s.test.end());
        splits.push_back(std::move(s));
    }
    return splits;
}

Confusion confusion_at_zero(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw Error(ErrorCode::SizeMismatch, "score and label counts differ");
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool stego = scores[i] > 0.0;
        if (labels[i] == 1) (stego ? c.tp : c.fn)++;
        else (stego ? c.fp : c.tn)++;
    }
    return c;
}

double detection_error(const Confusion& c) {
    if (c.total() <= 0) throw Error(ErrorCode::EmptyTestSet, "no test samples");
    return static_cast<double>(c.errors()) / static_cast<double>(c.total());
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw Error(ErrorCode::SizeMismatch, "score and label counts differ");
    const auto positives = std::count(labels.begin(), labels.end(), 1);
    const auto negatives = static_cast<long>(labels.size()) - positives;
    if (positives == 0 || negatives == 0) throw Error(ErrorCode::SingleClass, "ROC needs both labels");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve roc;
    roc.points.push_back({0.0, 0.0});
    long tp = 0;
    long fp = 0;
    double area = 0.0;
    for (std::size_t k = 0; k < order.size();) {
        const double threshold = scores[order[k]];
        const long tp0 = tp;
        const long fp0 = fp;
        while (k < order.size() && scores[order[k]] == threshold) {
            (labels[order[k]] == 1 ? tp : fp)++;
            ++k;
        }
        // trapezoid in count units
        area += static_cast<double>(fp - fp0) * 0.5 * static_cast<double>(tp + tp0);
        roc.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                              static_cast<double>(tp) / static_cast<double>(positives)});
    }
    roc.auc = area / (static_cast<double>(positives) * static_cast<double>(negatives));
    return roc;
}

const std::array<std::vector<int>, kRelevanceCategories>& relevance_categories() {
    static const std::array<std::vector<int>, kRelevanceCategories> groups{{
        {1, 2, 3},     // Cartesian vertex position
        {7},           // Cartesian vertex norm
        {4, 5, 6},     // Laplacian vertex position
        {8},           // Laplacian vertex norm
        {10},          // face normal
        {9},           // dihedral angle
        {11},          // vertex normal
        {12, 13},      // curvature
        {14, 15, 16},  // spherical vertex position
        {17, 18, 19},  // spherical edge lengths
    }};
    return groups;
}

std::vector<double> pearson_abs(const MatrixXd& x, std::span<const int> labels) {
    if (static_cast<std::size_t>(x.rows()) != labels.size()) throw Error(ErrorCode::SizeMismatch, "row/label count mismatch");
    const auto n = static_cast<double>(labels.size());
    const auto n1 = std::count(labels.begin(), labels.end(), 1);
    if (n1 == 0 || n1 == static_cast<long>(labels.size())) throw Error(ErrorCode::SingleClass, "relevance needs both labels");
    double ymean = 0.0;
    for (int l : labels) ymean += l;
    ymean /= n;
    double syy = 0.0;
    for (int l : labels) syy += (l - ymean) * (l - ymean);

    std::vector<double> rho(static_cast<std::size_t>(x.cols()), 0.0);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double xmean = x.col(c).mean();
        double sxy = 0.0;
        double sxx = 0.0;
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            const double dx = x(r, c) - xmean;
            sxy += dx * (labels[static_cast<std::size_t>(r)] - ymean);
            sxx += dx * dx;
        }
        if (sxx <= 1e-300 * n || !(sxx > 0.0)) continue;
        rho[static_cast<std::size_t>(c)] = std::min(1.0, std::abs(sxy / std::sqrt(sxx * syy)));
    }
    return rho;
}

RelevanceTable pearson_relevance(const MatrixXd& x, std::span<const int> labels) {
    if (x.cols() != kLfs76Dim) throw Error(ErrorCode::DimensionMismatch, "relevance categories need 76 columns");
    RelevanceTable t;
    t.relevance = pearson_abs(x, labels);
    const auto& groups = relevance_categories();
    for (int g = 0; g < kRelevanceCategories; ++g) {
        double s = 0.0;
        int count = 0;
        for (int phi : groups[static_cast<std::size_t>(g)]) {
            for (int m = 0; m < kMomentsPerFeature; ++m) {
                s += t.relevance[static_cast<std::size_t>((phi - 1) * kMomentsPerFeature + m)];
                ++count;
            }
        }
        t.category[static_cast<std::size_t>(g)] = s / count;
    }
    return t;
}

Dataset FeatureTable::dataset(const std::vector<int>& pair_ids, FeatureSet set) const {
    const std::vector<int> cols = lfs76_columns(set);
    Dataset d;
    d.x.resize(static_cast<Eigen::Index>(2 * pair_ids.size()), static_cast<Eigen::Index>(cols.size()));
    d.y.reserve(2 * pair_ids.size());
    Eigen::Index row = 0;
    for (int p : pair_ids) {
        for (int label = 0; label < 2; ++label) {
            const MatrixXd& src = label == 0 ? cover : stego;
            for (std::size_t c = 0; c < cols.size(); ++c) d.x(row, static_cast<Eigen::Index>(c)) = src(p, cols[c]);
            d.y.push_back(label);
            ++row;
        }
    }
    return d;
}

double median(std::vector<double> values) {
    if (values.empty()) throw Error(ErrorCode::EmptyArray, "median of nothing");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double sample_std(const std::vector<double>& values) {
    if (values.size() < 2) return 0.0;
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::vector<CellSummary> summarize(const std::vector<TrialRecord>& trials) {
    std::vector<CellSummary> out;
    for (std::size_t i = 0; i < trials.size();) {
        std::size_t j = i;
        std::vector<double> err, count, auc;
        while (j < trials.size() && trials[j].set == trials[i].set && trials[j].classifier == trials[i].classifier) {
            err.push_back(trials[j].error);
            count.push_back(static_cast<double>(trials[j].confusion.errors()));
            auc.push_back(trials[j].auc);
            ++j;
        }
        CellSummary s;
        s.set = trials[i].set;
        s.classifier = trials[i].classifier;
        s.trials = static_cast<int>(err.size());
        s.median_error = median(err);
        s.median_error_count = median(count);
        s.median_auc = median(auc);
        s.auc_std = sample_std(auc);
        out.push_back(s);
        i = j;
    }
    return out;
}

const CellSummary& ExperimentReport::cell(FeatureSet set, ClassifierKind clf) const {
    for (const auto& s : summary) {
        if (s.set == set && s.classifier == clf) return s;
    }
    throw Error(ErrorCode::InvalidArgument, "no such experiment cell");
}

TrainedModel train_classifier(const Dataset& train, FeatureSet set, ClassifierKind kind, const ExperimentConfig& config,
                              std::uint64_t seed) {
    TrainedModel tm;
    tm.set = set;
    tm.metadata["seed"] = std::to_string(seed);
    tm.metadata["samples"] = std::to_string(train.size());
    switch (kind) {
        case ClassifierKind::Qda: tm.model = qda_train(train); break;
        case ClassifierKind::Fld: {
            FldOptions opt = config.fld;
            opt.seed = seed;
            tm.model = fld_ensemble_train(train, opt);
            break;
        }
        case ClassifierKind::Svm: {
            double C = config.svm_C;
            double gamma = config.svm_gamma;
            if (config.grid_search) {
                GridSearchOptions g = config.grid;
                g.seed = seed;
                g.svm = config.svm;
                const GridSearchResult r = svm_grid_search(train, g);
                C = r.C;
                gamma = r.gamma;
                tm.metadata["cv_error"] = std::to_string(r.cv_error);
            }
            tm.model = svm_train(train, C, gamma, config.svm);
            break;
        }
    }
    return tm;
}

ExperimentReport run_experiment(const FeatureTable& table, const ExperimentConfig& config) {
    if (config.plan.trials < 1) throw Error(ErrorCode::EmptyPlan, "experiment has no trials");
    if (config.sets.empty() || config.classifiers.empty()) throw Error(ErrorCode::InvalidArgument, "no feature sets or classifiers");
    if (table.cover.cols() != kLfs76Dim || table.stego.cols() != kLfs76Dim) {
        throw Error(ErrorCode::DimensionMismatch, "experiments run on 76-dimensional feature tables");
    }
    const std::vector<Split> splits = make_splits(table.pairs(), config.plan);

    struct Cell {
        FeatureSet set;
        ClassifierKind clf;
        int trial;
    };
    std::vector<Cell> cells;
    for (FeatureSet s : config.sets) {
        for (ClassifierKind c : config.classifiers) {
            for (int t = 0; t < config.plan.trials; ++t) cells.push_back({s, c, t});
        }
    }

    ExperimentReport report;
    report.trials.resize(cells.size());
    parallel_for(cells.size(), config.jobs, [&](std::size_t k) {
        const Cell& cell = cells[k];
        const Split& split = splits[static_cast<std::size_t>(cell.trial)];
        const std::uint64_t seed = derive_seed(config.plan.seed, static_cast<std::uint64_t>(cell.trial));
        const Dataset train = table.dataset(split.train, cell.set);
        const Dataset test = table.dataset(split.test, cell.set);

        ExperimentConfig local = config;
        local.jobs = 1;
        local.grid.jobs = 1;
        const TrainedModel model = train_classifier(train, cell.set, cell.clf, local, seed);

        std::vector<double> scores(test.size());
        for (std::size_t i = 0; i < test.size(); ++i) scores[i] = model.score(test.x.row(static_cast<Eigen::Index>(i)).transpose());

        TrialRecord& rec = report.trials[k];
        rec.set = cell.set;
        rec.classifier = cell.clf;
        rec.trial = cell.trial;
        rec.confusion = confusion_at_zero(scores, test.y);
        rec.error = detection_error(rec.confusion);
        rec.roc = roc_auc(scores, test.y);
        rec.auc = rec.roc.auc;
        if (const auto* svm = std::get_if<SvmModel>(&model.model)) {
            rec.svm_C = svm->C;
            rec.svm_gamma = svm->gamma;
        }
    });
    report.summary = summarize(report.trials);

    MatrixXd all(static_cast<Eigen::Index>(2 * table.pairs()), kLfs76Dim);
    std::vector<int> labels;
    for (std::size_t p = 0; p < table.pairs(); ++p) {
        all.row(static_cast<Eigen::Index>(2 * p)) = table.cover.row(static_cast<Eigen::Index>(p));
        all.row(static_cast<Eigen::Index>(2 * p + 1)) = table.stego.row(static_cast<Eigen::Index>(p));
        labels.push_back(0);
        labels.push_back(1);
    }
    report.relevance = pearson_relevance(all, labels);
    return report;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.precision(17);
    return out;
}

std::string cell_name(FeatureSet set, ClassifierKind clf) {
    std::string s(to_string(set));
    std::replace(s.begin(), s.end(), '+', '_');
    return s + "_" + std::string(to_string(clf));
}

}  // namespace

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        auto out = open_csv(dir / "report.csv");
        out << "set,classifier,trial,tp,fp,tn,fn,errors,detection_error,auc,svm_C,svm_gamma\n";
        for (const auto& t : report.trials) {
            out << to_string(t.set) << ',' << to_string(t.classifier) << ',' << t.trial << ',' << t.confusion.tp << ','
                << t.confusion.fp << ',' << t.confusion.tn << ',' << t.confusion.fn << ',' << t.confusion.errors() << ','
                << t.error << ',' << t.auc << ',' << t.svm_C << ',' << t.svm_gamma << '\n';
        }
    }
    {
        auto out = open_csv(dir / "summary.csv");
        out << "set,classifier,trials,median_detection_error,median_error_count,median_auc,auc_std\n";
        for (const auto& s : report.summary) {
            out << to_string(s.set) << ',' << to_string(s.classifier) << ',' << s.trials << ',' << s.median_error << ','
                << s.median_error_count << ',' << s.median_auc << ',' << s.auc_std << '\n';
        }
    }
    for (const auto& s : report.summary) {
        auto out = open_csv(dir / ("roc_" + cell_name(s.set, s.classifier) + ".csv"));
        out << "trial,fpr,tpr\n";
        for (const auto& t : report.trials) {
            if (t.set != s.set || t.classifier != s.classifier) continue;
            for (const auto& p : t.roc.points) out << t.trial << ',' << p.fpr << ',' << p.tpr << '\n';
        }
    }
    write_relevance(report.relevance, dir);
}

void write_relevance(const RelevanceTable& relevance, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        auto out = open_csv(dir / "relevance.csv");
        out << "category,features,mean_abs_rho\n";
        const auto& groups = relevance_categories();
        for (int g = 0; g < kRelevanceCategories; ++g) {
            out << (g + 1) << ',';
            const auto& members = groups[static_cast<std::size_t>(g)];
            for (std::size_t m = 0; m < members.size(); ++m) out << (m ? " " : "") << "phi" << members[m];
            out << ',' << relevance.category[static_cast<std::size_t>(g)] << '\n';
        }
    }
    {
        auto out = open_csv(dir / "relevance_features.csv");
        out << "column,phi,moment,abs_rho\n";
        static constexpr const char* kMoments[] = {"mean", "variance", "skewness", "kurtosis"};
        for (std::size_t c = 0; c < relevance.relevance.size(); ++c) {
            out << c << ',' << (c / 4 + 1) << ',' << kMoments[c % 4] << ',' << relevance.relevance[c] << '\n';
        }
    }
}

}  // namespace meshsteg
