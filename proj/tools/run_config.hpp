#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "meshsteg/calibration.hpp"
#include "meshsteg/classifiers.hpp"
#include "meshsteg/embedders.hpp"
#include "meshsteg/evaluation.hpp"
#include "meshsteg/feature_stats.hpp"

// Effective parameters of each subcommand. Every run writes its record as
// JSON (the "config echo"); `meshsteg replay` runs a record again.

namespace meshsteg::cli {

using Json = nlohmann::ordered_json;

struct SynthConfig {
    std::size_t count = 100;
    std::uint64_t seed = 1;
    std::filesystem::path output;
};

struct EmbedConfig {
    EmbedParams params;  // payload left empty; bits drawn per mesh
    std::size_t bits = 64;
    bool normalize = true;
    std::filesystem::path input;
    std::filesystem::path output;
};

struct SmoothConfig {
    SmoothingParams smoothing;
    std::filesystem::path input;
    std::filesystem::path output;
};

struct ExtractConfig {
    FeatureSet set = FeatureSet::Lfs76;
    SmoothingParams smoothing;
    double epsilon = kDefaultLogEpsilon;
    std::filesystem::path input;   // manifest
    std::filesystem::path output;  // CSV
};

// `input` is either a corpus manifest or a 76-column feature CSV.
struct TrainConfig {
    FeatureSet set = FeatureSet::Lfs76;
    ClassifierKind classifier = ClassifierKind::Fld;
    std::uint64_t seed = 0;
    ExperimentConfig experiment;  // classifier settings only
    SmoothingParams smoothing;
    double epsilon = kDefaultLogEpsilon;
    std::filesystem::path input;
    std::filesystem::path output;  // model file
};

struct PredictConfig {
    std::filesystem::path model;
    std::filesystem::path input;   // feature CSV (model dimension or 76 columns)
    std::filesystem::path output;  // score CSV
};

struct EvaluateConfig {
    ExperimentConfig experiment;
    SmoothingParams smoothing;
    double epsilon = kDefaultLogEpsilon;
    std::filesystem::path input;
    std::filesystem::path output;  // report directory
};

struct RelevanceConfig {
    SmoothingParams smoothing;
    double epsilon = kDefaultLogEpsilon;
    std::filesystem::path input;
    std::filesystem::path output;  // directory
};

Json to_json(const SynthConfig& c);
Json to_json(const EmbedConfig& c);
Json to_json(const SmoothConfig& c);
Json to_json(const ExtractConfig& c);
Json to_json(const TrainConfig& c);
Json to_json(const PredictConfig& c);
Json to_json(const EvaluateConfig& c);
Json to_json(const RelevanceConfig& c);

// Runners write the config echo next to their outputs and return the number
// of per-item problems (0 = clean run). `jobs` never changes the outputs.
int run(const SynthConfig& c, unsigned jobs);
int run(const EmbedConfig& c, unsigned jobs);
int run(const SmoothConfig& c, unsigned jobs);
int run(const ExtractConfig& c, unsigned jobs);
int run(const TrainConfig& c, unsigned jobs);
int run(const PredictConfig& c, unsigned jobs);
int run(const EvaluateConfig& c, unsigned jobs);
int run(const RelevanceConfig& c, unsigned jobs);

// Re-runs an echo file; `output` replaces the recorded output path when set.
int replay(const std::filesystem::path& echo, const std::optional<std::filesystem::path>& output, unsigned jobs);

// Where a run with this output path writes its echo.
std::filesystem::path echo_path(const std::string& command, const std::filesystem::path& output);

}  // namespace meshsteg::cli
