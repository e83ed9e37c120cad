#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "meshsteg/calibration.hpp"
#include "meshsteg/embedders.hpp"
#include "meshsteg/evaluation.hpp"
#include "meshsteg/feature_stats.hpp"
#include "meshsteg/features.hpp"

namespace meshsteg {

// One cover/stego pair. On disk, one whitespace-separated record per line:
//   id cover_path stego_path variant params payload_hash
// Relative paths are resolved against the manifest's directory; '#' starts
// a comment line.
struct ManifestRecord {
    std::string id;
    std::filesystem::path cover;
    std::filesystem::path stego;
    std::string variant;
    std::string params;
    std::uint64_t payload_hash = 0;
};

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records);

// .off / .obj files directly inside `dir`, sorted by name. EmptyCorpus when none.
std::vector<std::filesystem::path> list_meshes(const std::filesystem::path& dir);

using LogFn = std::function<void(const std::string&)>;

struct Problem {
    std::string id;
    std::string message;
};

struct CorpusOptions {
    EmbedParams params;              // params.seed is the corpus seed
    std::size_t payload_bits = 64;   // used when params.payload is empty
    bool normalize_covers = true;
    unsigned jobs = 1;
    LogFn log;
};

struct CorpusBuild {
    std::vector<ManifestRecord> records;
    std::vector<Problem> failures;  // meshes left out of the manifest
    std::vector<Problem> warnings;  // e.g. bits that could not be enforced
};

// Writes covers/<id>.off, stegos/<id>.off and manifest.txt under out_dir.
// Mesh i gets payload seed corpus_seed ^ i; a failing mesh is reported and
// skipped.
CorpusBuild embed_corpus(const std::filesystem::path& cover_dir, const std::filesystem::path& out_dir,
                         const CorpusOptions& options);

struct ExtractOptions {
    SmoothingParams smoothing;
    double epsilon = kDefaultLogEpsilon;
    unsigned jobs = 1;
    LogFn log;
};

FeatureVector extract_lfs76(const TriMesh& mesh, const ExtractOptions& options, ExtractionReport* report = nullptr);

struct TableBuild {
    FeatureTable table;
    std::vector<Problem> errors;  // pairs dropped from the table
    ExtractionReport totals;
};

TableBuild extract_table(const std::vector<ManifestRecord>& records, const ExtractOptions& options);

// "label,f000,..." rows, cover then stego for each pair, restricted to `set`.
void write_feature_csv(std::ostream& out, const FeatureTable& table, FeatureSet set);

// Reads a 76-column file written by write_feature_csv back into pairs.
FeatureTable read_feature_csv(std::istream& in);

}  // namespace meshsteg
