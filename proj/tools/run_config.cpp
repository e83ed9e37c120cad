#include "run_config.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "meshsteg/corpus.hpp"
#include "meshsteg/error.hpp"
#include "meshsteg/parallel.hpp"
#include "meshsteg/rng.hpp"
#include "meshsteg/synthetic.hpp"

namespace fs = std::filesystem;

namespace meshsteg::cli {

namespace {

void log_line(const std::string& msg) { std::cerr << msg << '\n'; }

std::string path_string(const fs::path& p) { return p.empty() ? std::string() : fs::absolute(p).lexically_normal().generic_string(); }

Json smoothing_json(const SmoothingParams& s) { return {{"iterations", s.iterations}, {"weight", s.weight}}; }

SmoothingParams smoothing_from(const Json& j) {
    SmoothingParams s;
    s.iterations = j.at("iterations").get<int>();
    s.weight = j.at("weight").get<double>();
    return s;
}

Json experiment_json(const ExperimentConfig& e) {
    Json sets = Json::array();
    for (auto s : e.sets) sets.push_back(std::string(to_string(s)));
    Json clfs = Json::array();
    for (auto c : e.classifiers) clfs.push_back(std::string(to_string(c)));
    return {
        {"sets", sets},
        {"classifiers", clfs},
        {"trials", e.plan.trials},
        {"train", e.plan.train},
        {"test", e.plan.test},
        {"seed", e.plan.seed},
        {"grid_search", e.grid_search},
        {"svm_C", e.svm_C},
        {"svm_gamma", e.svm_gamma},
        {"grid",
         {{"c_min", e.grid.c_min},
          {"c_max", e.grid.c_max},
          {"gamma_min", e.grid.gamma_min},
          {"gamma_max", e.grid.gamma_max},
          {"folds", e.grid.folds},
          {"max_expansions", e.grid.max_expansions}}},
        {"fld",
         {{"max_learners", e.fld.max_learners},
          {"min_learners", e.fld.min_learners},
          {"stability_window", e.fld.stability_window},
          {"stability_tolerance", e.fld.stability_tolerance},
          {"scatter_regularization", e.fld.scatter_regularization},
          {"subspace_dims", e.fld.subspace_dims}}},
        {"svm", {{"tolerance", e.svm.tolerance}, {"max_iterations", e.svm.max_iterations}}},
    };
}

ExperimentConfig experiment_from(const Json& j) {
    ExperimentConfig e;
    e.sets.clear();
    for (const auto& s : j.at("sets")) e.sets.push_back(parse_feature_set(s.get<std::string>()));
    e.classifiers.clear();
    for (const auto& c : j.at("classifiers")) e.classifiers.push_back(parse_classifier(c.get<std::string>()));
    e.plan.trials = j.at("trials").get<int>();
    e.plan.train = j.at("train").get<int>();
    e.plan.test = j.at("test").get<int>();
    e.plan.seed = j.at("seed").get<std::uint64_t>();
    e.grid_search = j.at("grid_search").get<bool>();
    e.svm_C = j.at("svm_C").get<double>();
    e.svm_gamma = j.at("svm_gamma").get<double>();
    const Json& g = j.at("grid");
    e.grid.c_min = g.at("c_min").get<int>();
    e.grid.c_max = g.at("c_max").get<int>();
    e.grid.gamma_min = g.at("gamma_min").get<int>();
    e.grid.gamma_max = g.at("gamma_max").get<int>();
    e.grid.folds = g.at("folds").get<int>();
    e.grid.max_expansions = g.at("max_expansions").get<int>();
    const Json& f = j.at("fld");
    e.fld.max_learners = f.at("max_learners").get<int>();
    e.fld.min_learners = f.at("min_learners").get<int>();
    e.fld.stability_window = f.at("stability_window").get<int>();
    e.fld.stability_tolerance = f.at("stability_tolerance").get<double>();
    e.fld.scatter_regularization = f.at("scatter_regularization").get<double>();
    e.fld.subspace_dims = f.at("subspace_dims").get<std::vector<int>>();
    const Json& s = j.at("svm");
    e.svm.tolerance = s.at("tolerance").get<double>();
    e.svm.max_iterations = s.at("max_iterations").get<long>();
    e.grid.svm = e.svm;
    return e;
}

void write_echo(const std::string& command, const Json& body, const fs::path& output) {
    Json doc;
    doc["command"] = command;
    doc["config"] = body;
    const fs::path path = echo_path(command, output);
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

// Feature table from a manifest (extracting features) or a 76-column CSV.
TableBuild load_table(const fs::path& input, const SmoothingParams& smoothing, double epsilon, unsigned jobs) {
    if (input.extension() == ".csv") {
        std::ifstream in(input);
        if (!in) throw Error(ErrorCode::Io, "cannot open " + input.string());
        TableBuild build;
        build.table = read_feature_csv(in);
        return build;
    }
    ExtractOptions opt;
    opt.smoothing = smoothing;
    opt.epsilon = epsilon;
    opt.jobs = jobs;
    opt.log = log_line;
    TableBuild build = extract_table(read_manifest(input), opt);
    for (const auto& e : build.errors) log_line("error: " + e.id + ": " + e.message);
    if (build.table.pairs() == 0) throw Error(ErrorCode::EmptyCorpus, "no pair could be extracted");
    return build;
}

std::ofstream open_output(const fs::path& path) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    return out;
}

}  // namespace

fs::path echo_path(const std::string& command, const fs::path& output) {
    const bool directory_output = command == "synth" || command == "embed" || command == "evaluate" || command == "relevance";
    if (directory_output) return output / "config.json";
    fs::path p = output;
    p += ".config.json";
    return p;
}

Json to_json(const SynthConfig& c) {
    return {{"count", c.count}, {"seed", c.seed}, {"output", path_string(c.output)}};
}

Json to_json(const EmbedConfig& c) {
    return {
        {"variant", std::string(to_string(c.params.variant))},
        {"bits", c.bits},
        {"alpha", c.params.alpha},
        {"delta_k", c.params.delta_k},
        {"bins", c.params.bins},
        {"n_thr", c.params.n_thr},
        {"layers", c.params.layers},
        {"intervals", c.params.intervals},
        {"seed", c.params.seed},
        {"normalize", c.normalize},
        {"input", path_string(c.input)},
        {"output", path_string(c.output)},
    };
}

Json to_json(const SmoothConfig& c) {
    return {{"smoothing", smoothing_json(c.smoothing)}, {"input", path_string(c.input)}, {"output", path_string(c.output)}};
}

Json to_json(const ExtractConfig& c) {
    return {{"set", std::string(to_string(c.set))},
            {"smoothing", smoothing_json(c.smoothing)},
            {"epsilon", c.epsilon},
            {"input", path_string(c.input)},
            {"output", path_string(c.output)}};
}

Json to_json(const TrainConfig& c) {
    return {{"set", std::string(to_string(c.set))},
            {"classifier", std::string(to_string(c.classifier))},
            {"seed", c.seed},
            {"experiment", experiment_json(c.experiment)},
            {"smoothing", smoothing_json(c.smoothing)},
            {"epsilon", c.epsilon},
            {"input", path_string(c.input)},
            {"output", path_string(c.output)}};
}

Json to_json(const PredictConfig& c) {
    return {{"model", path_string(c.model)}, {"input", path_string(c.input)}, {"output", path_string(c.output)}};
}

Json to_json(const EvaluateConfig& c) {
    return {{"experiment", experiment_json(c.experiment)},
            {"smoothing", smoothing_json(c.smoothing)},
            {"epsilon", c.epsilon},
            {"input", path_string(c.input)},
            {"output", path_string(c.output)}};
}

Json to_json(const RelevanceConfig& c) {
    return {{"smoothing", smoothing_json(c.smoothing)},
            {"epsilon", c.epsilon},
            {"input", path_string(c.input)},
            {"output", path_string(c.output)}};
}

int run(const SynthConfig& c, unsigned jobs) {
    if (c.count == 0) throw Error(ErrorCode::InvalidArgument, "--count must be positive");
    fs::create_directories(c.output);
    write_echo("synth", to_json(c), c.output);
    std::vector<std::string> names(c.count);
    parallel_for(c.count, jobs, [&](std::size_t i) {
        ShapeFamily family;
        const TriMesh mesh = random_cover(derive_seed(c.seed, i), &family);
        char name[32];
        std::snprintf(name, sizeof name, "cover_%04zu.off", i);
        save_off(mesh, c.output / name);
        names[i] = std::string(name) + " " + std::string(to_string(family)) + " " + std::to_string(mesh.vertex_count());
    });
    for (const auto& n : names) log_line(n);
    return 0;
}

int run(const EmbedConfig& c, unsigned jobs) {
    write_echo("embed", to_json(c), c.output);
    CorpusOptions opt;
    opt.params = c.params;
    opt.payload_bits = c.bits;
    opt.normalize_covers = c.normalize;
    opt.jobs = jobs;
    opt.log = log_line;
    const CorpusBuild build = embed_corpus(c.input, c.output, opt);
    for (const auto& w : build.warnings) log_line("warning: " + w.id + ": " + w.message);
    for (const auto& f : build.failures) log_line("error: " + f.id + ": " + f.message);
    log_line(std::to_string(build.records.size()) + " pairs written to " + (c.output / "manifest.txt").string());
    if (build.records.empty()) throw Error(ErrorCode::EmptyCorpus, "every mesh failed to embed");
    return static_cast<int>(build.failures.size());
}

int run(const SmoothConfig& c, unsigned) {
    write_echo("smooth", to_json(c), c.output);
    SmoothingReport report;
    const TriMesh smoothed = laplacian_smooth(load_mesh(c.input), c.smoothing, &report);
    if (report.isolated_vertices) log_line("warning: " + std::to_string(report.isolated_vertices) + " isolated vertices left in place");
    if (!c.output.parent_path().empty()) fs::create_directories(c.output.parent_path());
    save_off(smoothed, c.output);
    return 0;
}

int run(const ExtractConfig& c, unsigned jobs) {
    write_echo("extract", to_json(c), c.output);
    ExtractOptions opt;
    opt.smoothing = c.smoothing;
    opt.epsilon = c.epsilon;
    opt.jobs = jobs;
    opt.log = log_line;
    const TableBuild build = extract_table(read_manifest(c.input), opt);
    for (const auto& e : build.errors) log_line("error: " + e.id + ": " + e.message);
    auto out = open_output(c.output);
    write_feature_csv(out, build.table, c.set);
    const auto& t = build.totals;
    log_line(std::to_string(build.table.pairs()) + " pairs; degenerate faces " + std::to_string(t.degenerate_faces) +
             ", boundary edges " + std::to_string(t.boundary_edges) + ", non-manifold edges " +
             std::to_string(t.non_manifold_edges) + ", insufficient rings " + std::to_string(t.insufficient_rings));
    return static_cast<int>(build.errors.size());
}

int run(const TrainConfig& c, unsigned jobs) {
    write_echo("train", to_json(c), c.output);
    const TableBuild build = load_table(c.input, c.smoothing, c.epsilon, jobs);
    std::vector<int> all(build.table.pairs());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    ExperimentConfig e = c.experiment;
    e.grid.jobs = jobs;
    TrainedModel model = train_classifier(build.table.dataset(all, c.set), c.set, c.classifier, e, c.seed);
    if (const auto* svm = std::get_if<SvmModel>(&model.model)) {
        model.metadata["C"] = std::to_string(svm->C);
        model.metadata["gamma"] = std::to_string(svm->gamma);
        log_line("svm C=" + std::to_string(svm->C) + " gamma=" + std::to_string(svm->gamma));
    }
    auto out = open_output(c.output);
    save_model(out, model);
    return static_cast<int>(build.errors.size());
}

int run(const PredictConfig& c, unsigned) {
    write_echo("predict", to_json(c), c.output);
    std::ifstream model_in(c.model);
    if (!model_in) throw Error(ErrorCode::Io, "cannot open " + c.model.string());
    const TrainedModel model = load_model(model_in);
    std::ifstream in(c.input);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + c.input.string());
    std::string line;
    std::getline(in, line);
    const std::vector<int> cols = lfs76_columns(model.set);
    auto out = open_output(c.output);
    out << "row,label,score,prediction\n";
    char buf[64];
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> values;
        std::istringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) values.push_back(std::stod(tok));
        if (values.empty()) continue;
        const int label = static_cast<int>(values.front());
        values.erase(values.begin());
        VectorXd x(static_cast<Eigen::Index>(model.dim()));
        if (static_cast<Eigen::Index>(values.size()) == model.dim()) {
            for (std::size_t k = 0; k < values.size(); ++k) x(static_cast<Eigen::Index>(k)) = values[k];
        } else if (values.size() == static_cast<std::size_t>(kLfs76Dim)) {
            for (std::size_t k = 0; k < cols.size(); ++k) x(static_cast<Eigen::Index>(k)) = values[static_cast<std::size_t>(cols[k])];
        } else {
            throw Error(ErrorCode::DimensionMismatch, "row " + std::to_string(row) + " has " + std::to_string(values.size()) +
                                                          " features; the model expects " + std::to_string(model.dim()));
        }
        const double s = model.score(x);
        std::snprintf(buf, sizeof buf, "%.17g", s);
        out << row << ',' << label << ',' << buf << ',' << (s > 0.0 ? 1 : 0) << '\n';
        ++row;
    }
    return 0;
}

int run(const EvaluateConfig& c, unsigned jobs) {
    fs::create_directories(c.output);
    write_echo("evaluate", to_json(c), c.output);
    const TableBuild build = load_table(c.input, c.smoothing, c.epsilon, jobs);
    ExperimentConfig e = c.experiment;
    e.jobs = jobs;
    const ExperimentReport report = run_experiment(build.table, e);
    write_report(report, c.output);
    if (e.grid_search) {
        for (const auto& t : report.trials) {
            if (t.classifier != ClassifierKind::Svm) continue;
            log_line(std::string(to_string(t.set)) + " trial " + std::to_string(t.trial) + ": C=" + std::to_string(t.svm_C) +
                     " gamma=" + std::to_string(t.svm_gamma));
        }
    }
    for (const auto& s : report.summary) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-12s %-4s median error %.4f  median AUC %.4f +- %.4f", std::string(to_string(s.set)).c_str(),
                      std::string(to_string(s.classifier)).c_str(), s.median_error, s.median_auc, s.auc_std);
        log_line(buf);
    }
    return static_cast<int>(build.errors.size());
}

int run(const RelevanceConfig& c, unsigned jobs) {
    fs::create_directories(c.output);
    write_echo("relevance", to_json(c), c.output);
    const TableBuild build = load_table(c.input, c.smoothing, c.epsilon, jobs);
    const FeatureTable& t = build.table;
    MatrixXd all(static_cast<Eigen::Index>(2 * t.pairs()), kLfs76Dim);
    std::vector<int> labels;
    for (std::size_t p = 0; p < t.pairs(); ++p) {
        all.row(static_cast<Eigen::Index>(2 * p)) = t.cover.row(static_cast<Eigen::Index>(p));
        all.row(static_cast<Eigen::Index>(2 * p + 1)) = t.stego.row(static_cast<Eigen::Index>(p));
        labels.push_back(0);
        labels.push_back(1);
    }
    const RelevanceTable relevance = pearson_relevance(all, labels);
    write_relevance(relevance, c.output);
    for (int g = 0; g < kRelevanceCategories; ++g) {
        log_line("category " + std::to_string(g + 1) + ": " + std::to_string(relevance.category[static_cast<std::size_t>(g)]));
    }
    return static_cast<int>(build.errors.size());
}

int replay(const fs::path& echo, const std::optional<fs::path>& output, unsigned jobs) {
    std::ifstream in(echo);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + echo.string());
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, echo.string() + ": " + e.what());
    }
    try {
        const std::string command = doc.at("command").get<std::string>();
        const Json& j = doc.at("config");
        const auto out = [&](const Json& v) { return output ? *output : fs::path(v.get<std::string>()); };
        if (command == "synth") {
            SynthConfig c;
            c.count = j.at("count").get<std::size_t>();
            c.seed = j.at("seed").get<std::uint64_t>();
            c.output = out(j.at("output"));
            return run(c, jobs);
        }
        if (command == "embed") {
            EmbedConfig c;
            c.params.variant = parse_embed_variant(j.at("variant").get<std::string>());
            c.bits = j.at("bits").get<std::size_t>();
            c.params.alpha = j.at("alpha").get<double>();
            c.params.delta_k = j.at("delta_k").get<double>();
            c.params.bins = j.at("bins").get<int>();
            c.params.n_thr = j.at("n_thr").get<int>();
            c.params.layers = j.at("layers").get<int>();
            c.params.intervals = j.at("intervals").get<int>();
            c.params.seed = j.at("seed").get<std::uint64_t>();
            c.normalize = j.at("normalize").get<bool>();
            c.input = j.at("input").get<std::string>();
            c.output = out(j.at("output"));
            return run(c, jobs);
        }
        if (command == "smooth") {
            SmoothConfig c;
            c.smoothing = smoothing_from(j.at("smoothing"));
            c.input = j.at("input").get<std::string>();
            c.output = out(j.at("output"));
            return run(c, jobs);
        }
        if (command == "extract") {
            ExtractConfig c;
            c.set = parse_feature_set(j.at("set").get<std::string>());
            c.smoothing = smoothing_from(j.at("smoothing"));
            c.epsilon = j.at("epsilon").get<double>();
            c.input = j.at("input").get<std::string>();
            c.output = out(j.at("output"));
            return run(c, jobs);
        }
        if (command == "train") {
            TrainConfig c;
            c.set = parse_feature_set(j.at("set").get<std::string>());
            c.classifier = parse_classifier(j.at("classifier").get<std::string>());
            c.seed = j.at("seed").get<std::uint64_t>();
            c.experiment = experiment_from(j.at("experiment"));
            c.smoothing = smoothing_from(j.at("smoothing"));
            c.epsilon = j.at("epsilon").get<double>();
            c.input = j.at("input").get<std::string>();
            c.output = out(j.at("output"));
            return run(c, jobs);
        }
        if (command == "predict") {
            PredictConfig c;
            c.model = j.at("model").get<std::string>();
            c.input = j.at("input").get<std::string>();
            c.output = out(j.at("output"));
            return run(c, jobs);
        }
        if (command == "evaluate") {
            EvaluateConfig c;
            c.experiment = experiment_from(j.at("experiment"));
            c.smoothing = smoothing_from(j.at("smoothing"));
            c.epsilon = j.at("epsilon").get<double>();
            c.input = j.at("input").get<std::string>();
            c.output = out(j.at("output"));
            return run(c, jobs);
        }
        if (command == "relevance") {
            RelevanceConfig c;
            c.smoothing = smoothing_from(j.at("smoothing"));
            c.epsilon = j.at("epsilon").get<double>();
            c.input = j.at("input").get<std::string>();
            c.output = out(j.at("output"));
            return run(c, jobs);
        }
        throw Error(ErrorCode::ParseError, "unknown command '" + command + "' in " + echo.string());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, echo.string() + ": " + e.what());
    }
}

}  // namespace meshsteg::cli
