// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
// when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

#include "meshsteg/calibration.hpp"
#include "meshsteg/classifiers.hpp"
#include "meshsteg/corpus.hpp"
#include "meshsteg/embedders.hpp"
#include "meshsteg/error.hpp"
#include "meshsteg/evaluation.hpp"
#include "meshsteg/feature_stats.hpp"
#include "meshsteg/features.hpp"
#include "meshsteg/parallel.hpp"
#include "meshsteg/synthetic.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace meshsteg;
using namespace meshsteg::testing;
namespace fs = std::filesystem;

namespace {

// Seed for every randomised criterion; unrelated to the unit-test seeds.
constexpr std::uint64_t kSeed = 2026;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

// ---------------------------------------------------------------------------

void self_nullity(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> reference;
    std::size_t nonzero = 0, vertices = 0;
    bool constant = true;
    for (std::uint64_t i = 0; i < 20; ++i) {
        ShapeFamily family{};
        const TriMesh m = random_cover(kSeed ^ i, &family);
        vertices += m.vertex_count();
        const PerElementFeatures f = extract_features(m, m);
        for (int k = 1; k <= kRawFeatureCount; ++k) {
            for (double v : f(k)) nonzero += v != 0.0;
        }
        const FeatureVector fv = assemble(f, FeatureSet::Lfs76);
        if (reference.empty()) reference = fv.values;
        constant = constant && fv.values == reference;
    }
    const double elapsed = seconds_since(t0);
    o.detail << "20 meshes, " << vertices << " vertices, " << nonzero << " nonzero entries, " << fmt(elapsed, 3) << " s";
    o.require(nonzero == 0, "all phi arrays zero");
    o.require(constant, "identical moment vectors");
    o.require(elapsed < 10.0, "runtime < 10 s");
}

void geometry_oracles(Outcome& o) {
    double dihedral = 0.0;
    for (double a : dihedral_angles(regular_tetrahedron())) {
        dihedral = std::max(dihedral, std::abs(a - (std::numbers::pi - std::acos(1.0 / 3.0))));
    }
    double curvature = 0.0;
    std::size_t sphere_vertices = 0;
    for (double r : {1.0, 2.5}) {
        const TriMesh s = icosphere(4, r);
        sphere_vertices = s.vertex_count();
        for (const auto& pc : principal_curvatures(s)) {
            curvature = std::max(curvature, pc.valid ? std::abs(pc.gaussian() * r * r - 1.0) : 1.0);
        }
    }
    double round_trip = 0.0;
    for (std::uint64_t i = 0; i < 5; ++i) {
        const TriMesh m = random_cover(kSeed + 100 + i);
        const SphericalCoords sc = to_spherical(m);
        for (std::size_t v = 0; v < m.vertex_count(); ++v) {
            const Vec3 back = sc.center + from_spherical(sc.radius[v], sc.azimuth[v], sc.elevation[v]);
            round_trip = std::max(round_trip, (back - m.vertices()[v]).norm());
        }
    }
    o.detail << "dihedral err " << fmt(dihedral) << ", K_G rel err " << fmt(curvature) << " on " << sphere_vertices
             << " vertices, round trip " << fmt(round_trip);
    o.require(dihedral < 1e-9, "dihedral within 1e-9");
    o.require(sphere_vertices >= 2562 && curvature < 0.1, "Gaussian curvature within 10%");
    o.require(round_trip < 1e-9, "spherical round trip within 1e-9");
}

void moment_oracle(Outcome& o) {
    Rng rng(kSeed);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.index(400);
        const double scale = std::pow(10.0, -6.0 + 6.0 * rng.uniform());
        std::vector<double> raw(n);
        for (auto& v : raw) v = rng.uniform() < 0.05 ? 0.0 : scale * std::abs(rng.normal());
        const MomentQuad got = log_moments(raw);
        const MomentQuad want = brute_moments(raw, kDefaultLogEpsilon);
        for (auto [a, b] : {std::pair{got.mean, want.mean}, {got.variance, want.variance}, {got.skewness, want.skewness},
                            {got.kurtosis, want.kurtosis}}) {
            worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
        }
    }
    o.detail << "1000 arrays, worst rel err " << fmt(worst);
    o.require(worst < 1e-10, "within 1e-10");
}

void auc_oracle(Outcome& o) {
    Rng rng(kSeed + 1);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.index(300);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = i < 1 ? 0 : i < 2 ? 1 : static_cast<int>(rng.index(2));
            // Coarse rounding on half of the sets to force ties.
            const double v = rng.normal() + 0.7 * y[i];
            s[i] = trial % 2 ? std::round(v * 4.0) / 4.0 : v;
        }
        worst = std::max(worst, std::abs(roc_auc(s, y).auc - brute_auc(s, y)));
    }
    o.detail << "100 score sets, worst abs err " << fmt(worst);
    o.require(worst <= 1e-12, "within 1e-12");
}

void svm_correctness(Outcome& o) {
    SvmOptions raw;
    raw.standardize = false;

    double worst_balance = 0.0, worst_gap = 0.0;
    bool bounds = true, converged = true;
    const Dataset blobs = gaussian_pair(80, 5, 3.0, kSeed);
    for (double C : {0.1, 10.0, 1e4}) {
        SvmSolution sol;
        svm_train(blobs, C, 0.2, {}, &sol);
        converged = converged && sol.converged;
        bounds = bounds && sol.alpha.minCoeff() >= 0.0 && sol.alpha.maxCoeff() <= C;
        double balance = 0.0;
        for (std::size_t i = 0; i < blobs.size(); ++i) balance += sol.alpha(static_cast<Eigen::Index>(i)) * (blobs.y[i] ? 1 : -1);
        worst_balance = std::max(worst_balance, std::abs(balance));
    }

    const Dataset x = xor_points();
    const SvmModel xm = svm_train(x, 1e3, 1.0, raw);
    int xor_errors = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        xor_errors += (svm_score(xm, x.x.row(static_cast<Eigen::Index>(i)).transpose()) > 0.0) != (x.y[i] == 1);
    }

    Rng rng(kSeed + 2);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + static_cast<int>(rng.index(7));
        Dataset d;
        d.x.resize(n, 3);
        for (int i = 0; i < n; ++i) {
            for (int c = 0; c < 3; ++c) d.x(i, c) = rng.normal();
            d.y.push_back(i % 2);
        }
        const double C = std::pow(10.0, -1.0 + 2.0 * rng.uniform());
        const double gamma = 0.2 + rng.uniform();
        SvmSolution sol;
        svm_train(d, C, gamma, raw, &sol);
        VectorXd yy(n);
        for (int i = 0; i < n; ++i) yy(i) = d.y[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
        const MatrixXd q = rbf_gram(d.x, gamma).cwiseProduct(yy * yy.transpose());
        worst_gap = std::max(worst_gap, std::abs(sol.objective - exact_dual(q, yy, C)));
        bounds = bounds && sol.alpha.minCoeff() >= 0.0 && sol.alpha.maxCoeff() <= C;
        worst_balance = std::max(worst_balance, std::abs(sol.alpha.dot(yy)));
    }
    o.detail << "max |sum a y| " << fmt(worst_balance) << ", XOR errors " << xor_errors << ", max dual gap "
             << fmt(worst_gap) << " over 40 problems";
    o.require(bounds && converged, "0 <= alpha <= C at convergence");
    o.require(worst_balance < 1e-6, "sum alpha y within 1e-6");
    o.require(xor_errors == 0, "XOR separated");
    o.require(worst_gap < 1e-4, "dual objective within 1e-4");
}

void qda_correctness(Outcome& o) {
    const double sd1 = 1.3;
    const Dataset train = gaussian_pair(4000, 3, 4.0, kSeed, sd1);
    const Dataset test = gaussian_pair(3000, 3, 4.0, kSeed + 1, sd1);
    const QdaModel m = qda_train(train);
    VectorXd mu1 = VectorXd::Zero(3);
    mu1(0) = 4.0;
    const MatrixXd cov1 = sd1 * sd1 * MatrixXd::Identity(3, 3);
    int agree = 0;
    for (Eigen::Index i = 0; i < test.x.rows(); ++i) {
        const VectorXd xi = test.x.row(i).transpose();
        const bool bayes = log_gauss(xi, mu1, cov1) > log_gauss(xi, VectorXd::Zero(3), MatrixXd::Identity(3, 3));
        agree += bayes == (qda_score(m, xi) > 0.0);
    }
    const double rate = static_cast<double>(agree) / static_cast<double>(test.x.rows());
    o.detail << "agreement " << fmt(rate) << " on " << test.x.rows() << " points";
    o.require(rate >= 0.99, "agreement >= 99%");
}

void embedder_round_trips(Outcome& o) {
    int cho_exact = 0, topology = 0, runs = 0;
    for (std::uint64_t i = 0; i < 12; ++i) {
        const TriMesh m = random_cover(kSeed + 200 + i);
        EmbedParams p;
        p.variant = EmbedVariant::ChoMean;
        p.alpha = 0.04;
        p.payload = random_payload(64, i);
        const EmbedResult r = embed(m, p);
        cho_exact += r.report.failed_bits.empty() && cho_mean_decode(r.stego, 64, r.key) == p.payload;
        topology += r.stego.same_topology(m) && r.stego.faces() == m.faces();
        ++runs;
    }

    bool capacity_enforced = true;
    int yang_wrong = 0, yang_infeasible = 0, yang_unexplained = 0;
    for (int bins : {32, 128}) {
        for (std::uint64_t i = 0; i < 6; ++i) {
            const TriMesh m = random_cover(kSeed + 300 + i);
            EmbedParams p;
            p.variant = EmbedVariant::YangHist;
            p.bins = bins;
            p.payload = random_payload(yang_capacity(bins), i);
            const EmbedResult r = embed(m, p);
            topology += r.stego.same_topology(m) && r.stego.faces() == m.faces();
            ++runs;
            const Bits decoded = yang_hist_decode(r.stego, p.payload.size(), bins, r.key);
            const auto counts = radial_histogram(m, bins);
            for (std::size_t b = 0; b < decoded.size(); ++b) {
                const bool failed = std::find(r.report.failed_bits.begin(), r.report.failed_bits.end(), static_cast<int>(b)) !=
                                    r.report.failed_bits.end();
                const bool empty_pair = counts[2 * b + 1] == 0 && counts[2 * b + 2] == 0;
                if (failed) {
                    ++yang_infeasible;
                    yang_unexplained += !empty_pair;
                } else {
                    yang_wrong += decoded[b] != p.payload[b];
                }
            }
            p.payload.push_back(0);
            try {
                embed(m, p);
                capacity_enforced = false;
            } catch (const Error& e) {
                capacity_enforced = capacity_enforced && e.code() == ErrorCode::CapacityExceeded;
            }
        }
    }

    int chao_exact = 0, chao_runs = 0;
    for (int layers : {1, 2, 3}) {
        for (std::uint64_t i = 0; i < 4; ++i) {
            const TriMesh m = random_cover(kSeed + 400 + i);
            EmbedParams p;
            p.variant = EmbedVariant::ChaoLayers;
            p.layers = layers;
            p.payload = random_payload(chao_capacity(m.vertex_count(), layers), i);
            const EmbedResult r = embed(m, p);
            chao_exact += chao_layer_decode(r.stego, p.payload.size(), layers, p.intervals, r.key) == p.payload;
            topology += r.stego.same_topology(m) && r.stego.faces() == m.faces();
            ++runs;
            ++chao_runs;
        }
    }
    o.detail << "cho " << cho_exact << "/12 exact; yang " << yang_wrong << " wrong bits, " << yang_infeasible
             << " infeasible (empty bin pairs); chao " << chao_exact << "/" << chao_runs << " exact; topology "
             << topology << "/" << runs;
    o.require(cho_exact == 12, "cho 64-bit round trip");
    o.require(capacity_enforced, "yang capacity enforced");
    o.require(yang_wrong == 0 && yang_unexplained == 0, "yang decode");
    o.require(chao_exact == chao_runs, "chao round trip");
    o.require(topology == runs, "topology preserved");
}

// ---------------------------------------------------------------------------
// Synthetic corpus shared by the end-to-end and relevance criteria.

struct Corpus {
    fs::path covers;
    std::vector<std::pair<double, FeatureTable>> by_alpha;

    const FeatureTable& at(double alpha) const {
        for (const auto& [a, t] : by_alpha) {
            if (a == alpha) return t;
        }
        throw std::runtime_error("no table for alpha " + std::to_string(alpha));
    }
};

Corpus build_corpus(const fs::path& root, std::size_t count) {
    Corpus c;
    c.covers = root / "covers";
    fs::create_directories(c.covers);
    parallel_for(count, default_jobs(), [&](std::size_t i) {
        char name[32];
        std::snprintf(name, sizeof name, "cover_%04zu.off", i);
        save_off(random_cover(kSeed ^ (1000 + i)), c.covers / name);
    });
    for (double alpha : {0.02, 0.04, 0.06, 0.10}) {
        CorpusOptions opt;
        opt.params.variant = EmbedVariant::ChoMean;
        opt.params.alpha = alpha;
        opt.params.seed = kSeed;
        opt.payload_bits = 64;
        opt.jobs = default_jobs();
        const CorpusBuild build = embed_corpus(c.covers, root / ("alpha_" + fmt(alpha)), opt);
        if (build.records.size() != count) throw std::runtime_error("embedding dropped meshes");
        ExtractOptions eo;
        eo.jobs = default_jobs();
        TableBuild table = extract_table(build.records, eo);
        if (!table.errors.empty()) throw std::runtime_error("extraction dropped pairs");
        c.by_alpha.emplace_back(alpha, std::move(table.table));
    }
    return c;
}

ExperimentConfig split_config(std::vector<FeatureSet> sets, std::vector<ClassifierKind> classifiers) {
    ExperimentConfig cfg;
    cfg.sets = std::move(sets);
    cfg.classifiers = std::move(classifiers);
    cfg.plan.trials = 10;
    cfg.plan.train = 70;
    cfg.plan.test = 30;
    cfg.plan.seed = kSeed;
    cfg.jobs = default_jobs();
    return cfg;
}

void directional(Outcome& o, const Corpus& corpus, double corpus_seconds) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentReport main = run_experiment(
        corpus.at(0.04), split_config({FeatureSet::Yang40, FeatureSet::Lfs76},
                                      {ClassifierKind::Qda, ClassifierKind::Svm, ClassifierKind::Fld}));
    o.detail << "median AUC LFS76/YANG40:";
    for (ClassifierKind k : {ClassifierKind::Qda, ClassifierKind::Svm, ClassifierKind::Fld}) {
        const double lfs = main.cell(FeatureSet::Lfs76, k).median_auc;
        const double yang = main.cell(FeatureSet::Yang40, k).median_auc;
        o.detail << ' ' << to_string(k) << ' ' << fmt(lfs) << '/' << fmt(yang);
        o.require(lfs >= yang, std::string("(a) ") + std::string(to_string(k)));
    }
    o.detail << "; FLD/LFS76 median error over alpha";
    double previous = 1.0;
    for (double alpha : {0.02, 0.06, 0.10}) {
        const ExperimentReport r = run_experiment(corpus.at(alpha), split_config({FeatureSet::Lfs76}, {ClassifierKind::Fld}));
        const double err = r.cell(FeatureSet::Lfs76, ClassifierKind::Fld).median_error;
        o.detail << ' ' << alpha << ':' << fmt(err);
        o.require(err <= previous, "(b) error non-increasing at alpha " + fmt(alpha));
        previous = err;
    }
    const double elapsed = corpus_seconds + seconds_since(t0);
    o.detail << "; " << fmt(elapsed, 3) << " s";
    o.require(elapsed < 900.0, "runtime < 15 min");
}

void relevance_sanity(Outcome& o, const Corpus& corpus) {
    const FeatureTable& t = corpus.at(0.04);
    const auto n = static_cast<Eigen::Index>(t.pairs());
    MatrixXd x(2 * n, kLfs76Dim);
    x << t.cover, t.stego;
    std::vector<int> labels(static_cast<std::size_t>(2 * n), 0);
    std::fill(labels.begin() + n, labels.end(), 1);
    const RelevanceTable rel = pearson_relevance(x, labels);

    std::vector<int> order(kRelevanceCategories);
    for (int g = 0; g < kRelevanceCategories; ++g) order[static_cast<std::size_t>(g)] = g;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return rel.category[static_cast<std::size_t>(a)] > rel.category[static_cast<std::size_t>(b)];
    });
    const auto rank_of = [&](int category) {
        return static_cast<int>(std::find(order.begin(), order.end(), category - 1) - order.begin()) + 1;
    };
    MatrixXd copy(2 * n, 1);
    for (Eigen::Index i = 0; i < 2 * n; ++i) copy(i, 0) = labels[static_cast<std::size_t>(i)];
    const double label_rho = pearson_abs(copy, labels)[0];

    o.detail << "category ranks: 9 -> " << rank_of(9) << ", 10 -> " << rank_of(10) << " (order";
    for (int g : order) o.detail << ' ' << g + 1 << ':' << fmt(rel.category[static_cast<std::size_t>(g)], 3);
    o.detail << "); label copy |rho| " << fmt(label_rho, 17);
    o.require(rank_of(9) <= 5, "category 9 in top half");
    o.require(rank_of(10) <= 5, "category 10 in top half");
    o.require(std::abs(label_rho - 1.0) < 1e-12, "label copy |rho| = 1");
}

// ---------------------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(MESHSTEG_CLI) + " " + args + " >> " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void reproducibility(Outcome& o, const fs::path& root) {
    const std::string d = root.string();
    fs::create_directories(root);
    const fs::path log = root / "cli.log";
    o.require(run_cli("synth --count 16 --seed " + std::to_string(kSeed) + " " + d + "/covers", log) == 0, "synth");
    o.require(run_cli("embed --variant cho --seed 5 " + d + "/covers " + d + "/corpus", log) == 0, "embed");
    o.require(run_cli("-j 4 extract " + d + "/corpus/manifest.txt " + d + "/features.csv", log) == 0, "extract");
    o.require(run_cli("evaluate --trials 3 --train 11 --test 5 --seed 9 " + d + "/features.csv " + d + "/eval", log) == 0,
              "evaluate");
    o.require(run_cli("evaluate --sets lfs76 --clf svm --grid --trials 2 --train 11 --test 5 " + d + "/features.csv " + d +
                          "/grid",
                      log) == 0,
              "evaluate --grid");
    o.require(run_cli("relevance " + d + "/features.csv " + d + "/relevance", log) == 0, "relevance");

    struct Replay {
        fs::path echo, original, replayed;
    };
    const std::vector<Replay> replays{
        {root / "features.csv.config.json", root / "features.csv", root / "features_replay.csv"},
        {root / "eval" / "config.json", root / "eval", root / "eval_replay"},
        {root / "grid" / "config.json", root / "grid", root / "grid_replay"},
        {root / "relevance" / "config.json", root / "relevance", root / "relevance_replay"},
    };
    int compared = 0, identical = 0;
    for (const auto& r : replays) {
        o.require(run_cli("-j 3 replay " + r.echo.string() + " --output " + r.replayed.string(), log) == 0,
                  "replay " + r.echo.filename().string());
        std::vector<std::pair<fs::path, fs::path>> files;
        if (fs::is_directory(r.original)) {
            for (const auto& e : fs::directory_iterator(r.original)) {
                if (e.path().extension() == ".csv") files.emplace_back(e.path(), r.replayed / e.path().filename());
            }
        } else {
            files.emplace_back(r.original, r.replayed);
        }
        for (const auto& [a, b] : files) {
            ++compared;
            identical += fs::exists(b) && slurp(a) == slurp(b);
        }
    }
    o.detail << identical << "/" << compared << " CSV files byte-identical after replay";
    o.require(compared > 0 && identical == compared, "bit-identical CSV outputs");
}

}  // namespace

int main() {
    const fs::path root = fs::temp_directory_path() / "meshsteg_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);

    int failures = 0;
    const auto report = [&](int id, const std::string& name, const std::function<void(Outcome&)>& body) {
        Outcome o;
        try {
            body(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << name << ": " << o.detail.str() << std::endl;
    };

    report(1, "self-calibration nullity", self_nullity);
    report(2, "geometry oracles", geometry_oracles);
    report(3, "moment oracle", moment_oracle);
    report(4, "AUC oracle", auc_oracle);
    report(5, "SVM correctness", svm_correctness);
    report(6, "QDA correctness", qda_correctness);
    report(7, "embedder round trips", embedder_round_trips);

    std::optional<Corpus> corpus;
    std::string corpus_error;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        corpus = build_corpus(root / "synthetic", 100);
    } catch (const std::exception& e) {
        corpus_error = e.what();
    }
    const double corpus_seconds = seconds_since(t0);
    report(8, "directional reproduction", [&](Outcome& o) {
        if (!corpus) throw std::runtime_error("corpus: " + corpus_error);
        directional(o, *corpus, corpus_seconds);
    });
    report(9, "relevance sanity", [&](Outcome& o) {
        if (!corpus) throw std::runtime_error("corpus: " + corpus_error);
        relevance_sanity(o, *corpus);
    });
    report(10, "reproducibility", [&](Outcome& o) { reproducibility(o, root / "cli"); });

    std::cout << (failures ? std::to_string(failures) + " criterion(s) failed" : "all criteria passed") << std::endl;
    return failures ? 1 : 0;
}
