// meshsteg: corpus generation, feature extraction, training and evaluation.
//
// Exit codes: 0 success, 1 usage error, 2 data error (including runs where
// some meshes or pairs failed and were skipped).

#include <cmath>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "meshsteg/error.hpp"
#include "meshsteg/parallel.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace meshsteg;
using namespace meshsteg::cli;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename Parse>
CLI::Validator parses_as(Parse parse, const std::string& what) {
    return CLI::Validator(
        [parse, what](std::string& value) -> std::string {
            try {
                for (const auto& item : split_list(value)) (void)parse(item);
                return {};
            } catch (const std::exception&) {
                return "unknown " + what + " '" + value + "'";
            }
        },
        what);
}

void add_smoothing(CLI::App* cmd, SmoothingParams& s) {
    cmd->add_option("--iterations", s.iterations, "Laplacian smoothing iterations")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--weight", s.weight, "Laplacian smoothing weight")->capture_default_str()->check(CLI::Range(0.0, 1.0));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"3D mesh steganalysis lab"};
    app.require_subcommand(1);
    unsigned jobs = default_jobs();
    app.add_option("--jobs,-j", jobs, "worker threads (outputs do not depend on it)")->capture_default_str()->check(CLI::PositiveNumber);

    SynthConfig synth;
    auto* synth_cmd = app.add_subcommand("synth", "write random synthetic cover meshes");
    synth_cmd->add_option("--count", synth.count, "number of meshes")->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed, "corpus seed; mesh i uses seed ^ i")->capture_default_str();
    synth_cmd->add_option("output", synth.output, "output directory")->required();

    EmbedConfig embed;
    std::string variant = "cho";
    std::optional<std::size_t> bits;
    bool no_normalize = false;
    auto* embed_cmd = app.add_subcommand("embed", "embed random payloads into every cover of a directory");
    embed_cmd->add_option("--variant", variant, "cho | yang | chao")
        ->capture_default_str()
        ->check(parses_as(parse_embed_variant, "variant"));
    embed_cmd->add_option("--bits", bits, "payload bits per mesh (default 64; yang: its capacity)");
    embed_cmd->add_option("--alpha", embed.params.alpha, "cho: bin-mean margin")->capture_default_str();
    embed_cmd->add_option("--delta-k", embed.params.delta_k, "cho: exponent step")->capture_default_str();
    embed_cmd->add_option("--bins", embed.params.bins, "yang: histogram bins K")->capture_default_str();
    embed_cmd->add_option("--n-thr", embed.params.n_thr, "yang: max vertices moved per bit")->capture_default_str();
    embed_cmd->add_option("--layers", embed.params.layers, "chao: layers 1..10")->capture_default_str()->check(CLI::Range(1, 10));
    embed_cmd->add_option("--intervals", embed.params.intervals, "chao: slots along the axis")->capture_default_str();
    embed_cmd->add_option("--seed", embed.params.seed, "corpus seed; mesh i uses seed ^ i")->capture_default_str();
    embed_cmd->add_flag("--no-normalize", no_normalize, "keep covers at their original scale");
    embed_cmd->add_option("covers", embed.input, "directory of .off/.obj covers")->required();
    embed_cmd->add_option("output", embed.output, "output directory (covers/, stegos/, manifest.txt)")->required();

    SmoothConfig smooth;
    auto* smooth_cmd = app.add_subcommand("smooth", "Laplacian-smooth one mesh");
    add_smoothing(smooth_cmd, smooth.smoothing);
    smooth_cmd->add_option("input", smooth.input, "input mesh")->required();
    smooth_cmd->add_option("output", smooth.output, "output .off")->required();

    ExtractConfig extract;
    std::string extract_set = "lfs76";
    auto* extract_cmd = app.add_subcommand("extract", "write the feature matrix of a corpus");
    extract_cmd->add_option("--set", extract_set, "yang40 | yang40+vnf4 | yang40+cf8 | lfs52 | scf24 | lfs76")
        ->capture_default_str()
        ->check(parses_as(parse_feature_set, "feature set"));
    add_smoothing(extract_cmd, extract.smoothing);
    extract_cmd->add_option("--epsilon", extract.epsilon, "log offset")->capture_default_str();
    extract_cmd->add_option("manifest", extract.input, "corpus manifest")->required();
    extract_cmd->add_option("output", extract.output, "feature CSV")->required();

    TrainConfig train;
    std::string train_set = "lfs76";
    std::string train_clf = "fld";
    auto* train_cmd = app.add_subcommand("train", "train one classifier on a whole corpus");
    train_cmd->add_option("--set", train_set, "feature set")->capture_default_str()->check(parses_as(parse_feature_set, "feature set"));
    train_cmd->add_option("--clf", train_clf, "qda | svm | fld")->capture_default_str()->check(parses_as(parse_classifier, "classifier"));
    train_cmd->add_option("--seed", train.seed, "training seed")->capture_default_str();
    train_cmd->add_flag("--grid", train.experiment.grid_search, "svm: choose (C, gamma) by 5-fold grid search");
    train_cmd->add_option("--C", train.experiment.svm_C, "svm: fixed C")->capture_default_str();
    train_cmd->add_option("--gamma", train.experiment.svm_gamma, "svm: fixed gamma")->capture_default_str();
    add_smoothing(train_cmd, train.smoothing);
    train_cmd->add_option("--epsilon", train.epsilon, "log offset")->capture_default_str();
    train_cmd->add_option("input", train.input, "manifest or 76-column feature CSV")->required();
    train_cmd->add_option("output", train.output, "model file")->required();

    PredictConfig predict;
    auto* predict_cmd = app.add_subcommand("predict", "score feature rows with a trained model");
    predict_cmd->add_option("model", predict.model, "model file")->required();
    predict_cmd->add_option("input", predict.input, "feature CSV")->required();
    predict_cmd->add_option("output", predict.output, "score CSV")->required();

    EvaluateConfig evaluate;
    std::string eval_sets = "yang40,lfs52,lfs76";
    std::string eval_clfs = "qda,svm,fld";
    auto* eval_cmd = app.add_subcommand("evaluate", "repeated random-split experiment");
    eval_cmd->add_option("--sets", eval_sets, "comma-separated feature sets")
        ->capture_default_str()
        ->check(parses_as(parse_feature_set, "feature set"));
    eval_cmd->add_option("--clf", eval_clfs, "comma-separated classifiers")
        ->capture_default_str()
        ->check(parses_as(parse_classifier, "classifier"));
    eval_cmd->add_option("--trials", evaluate.experiment.plan.trials, "random splits")->capture_default_str();
    eval_cmd->add_option("--train", evaluate.experiment.plan.train, "training pairs per split")->capture_default_str();
    eval_cmd->add_option("--test", evaluate.experiment.plan.test, "test pairs per split")->capture_default_str();
    eval_cmd->add_option("--seed", evaluate.experiment.plan.seed, "master seed; trial t uses seed ^ t")->capture_default_str();
    eval_cmd->add_flag("--grid", evaluate.experiment.grid_search, "svm: grid search per trial");
    eval_cmd->add_option("--C", evaluate.experiment.svm_C, "svm: fixed C")->capture_default_str();
    eval_cmd->add_option("--gamma", evaluate.experiment.svm_gamma, "svm: fixed gamma")->capture_default_str();
    add_smoothing(eval_cmd, evaluate.smoothing);
    eval_cmd->add_option("--epsilon", evaluate.epsilon, "log offset")->capture_default_str();
    eval_cmd->add_option("input", evaluate.input, "manifest or 76-column feature CSV")->required();
    eval_cmd->add_option("output", evaluate.output, "report directory")->required();

    RelevanceConfig relevance;
    auto* rel_cmd = app.add_subcommand("relevance", "Pearson relevance of every LFS76 column");
    add_smoothing(rel_cmd, relevance.smoothing);
    rel_cmd->add_option("--epsilon", relevance.epsilon, "log offset")->capture_default_str();
    rel_cmd->add_option("input", relevance.input, "manifest or 76-column feature CSV")->required();
    rel_cmd->add_option("output", relevance.output, "output directory")->required();

    fs::path echo;
    std::optional<fs::path> replay_output;
    auto* replay_cmd = app.add_subcommand("replay", "re-run a configuration echo file");
    replay_cmd->add_option("config", echo, "config echo JSON")->required()->check(CLI::ExistingFile);
    replay_cmd->add_option("--output", replay_output, "write to this path instead of the recorded one");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        int problems = 0;
        if (*synth_cmd) {
            problems = run(synth, jobs);
        } else if (*embed_cmd) {
            embed.params.variant = parse_embed_variant(variant);
            embed.bits = bits ? *bits : embed.params.variant == EmbedVariant::YangHist ? yang_capacity(embed.params.bins) : 64;
            embed.normalize = !no_normalize;
            problems = run(embed, jobs);
        } else if (*smooth_cmd) {
            problems = run(smooth, jobs);
        } else if (*extract_cmd) {
            extract.set = parse_feature_set(extract_set);
            problems = run(extract, jobs);
        } else if (*train_cmd) {
            train.set = parse_feature_set(train_set);
            train.classifier = parse_classifier(train_clf);
            problems = run(train, jobs);
        } else if (*predict_cmd) {
            problems = run(predict, jobs);
        } else if (*eval_cmd) {
            evaluate.experiment.sets.clear();
            for (const auto& s : split_list(eval_sets)) evaluate.experiment.sets.push_back(parse_feature_set(s));
            evaluate.experiment.classifiers.clear();
            for (const auto& c : split_list(eval_clfs)) evaluate.experiment.classifiers.push_back(parse_classifier(c));
            problems = run(evaluate, jobs);
        } else if (*rel_cmd) {
            problems = run(relevance, jobs);
        } else if (*replay_cmd) {
            problems = replay(echo, replay_output, jobs);
        }
        if (problems > 0) {
            std::cerr << problems << " item(s) failed; see the messages above\n";
            return kDataError;
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::InvalidArgument ? kUsageError : kDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDataError;
    }
}
