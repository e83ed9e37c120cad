#include "meshsteg/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>

#include "meshsteg/error.hpp"
#include "meshsteg/parallel.hpp"
#include "meshsteg/rng.hpp"

namespace fs = std::filesystem;

namespace meshsteg {

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

fs::path relative_to(const fs::path& base, const fs::path& p) {
    std::error_code ec;
    const fs::path r = fs::relative(p, base, ec);
    return ec || r.empty() ? p : r;
}

}  // namespace

std::vector<ManifestRecord> read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open manifest " + path.string());
    const fs::path base = path.parent_path();
    std::vector<ManifestRecord> records;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        ManifestRecord r;
        std::string cover, stego, hash, extra;
        if (!(ss >> r.id >> cover >> stego >> r.variant >> r.params >> hash) || (ss >> extra)) {
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) + ": expected 6 fields");
        }
        try {
            std::size_t used = 0;
            r.payload_hash = std::stoull(hash, &used, 16);
            if (used != hash.size()) throw std::invalid_argument(hash);
        } catch (const std::exception&) {
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) + ": bad payload hash");
        }
        r.cover = resolve(base, cover);
        r.stego = resolve(base, stego);
        records.push_back(std::move(r));
    }
    if (records.empty()) throw Error(ErrorCode::EmptyCorpus, "manifest " + path.string() + " lists no pairs");
    return records;
}

void write_manifest(const fs::path& path, const std::vector<ManifestRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
    out << "# id cover stego variant params payload_hash\n";
    char hash[17];
    for (const auto& r : records) {
        std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.payload_hash));
        out << r.id << ' ' << relative_to(base, r.cover).generic_string() << ' '
            << relative_to(base, r.stego).generic_string() << ' ' << r.variant << ' ' << r.params << ' ' << hash << '\n';
    }
}

std::vector<fs::path> list_meshes(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, dir.string() + " is not a directory");
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".off" || ext == ".obj") out.push_back(entry.path());
    }
    if (out.empty()) throw Error(ErrorCode::EmptyCorpus, "no .off/.obj meshes in " + dir.string());
    std::sort(out.begin(), out.end());
    return out;
}

CorpusBuild embed_corpus(const fs::path& cover_dir, const fs::path& out_dir, const CorpusOptions& options) {
    const auto inputs = list_meshes(cover_dir);
    fs::create_directories(out_dir / "covers");
    fs::create_directories(out_dir / "stegos");

    struct Slot {
        bool ok = false;
        ManifestRecord record;
        std::string failure;
        std::string warning;
    };
    std::vector<Slot> slots(inputs.size());
    std::mutex log_mutex;
    const auto log = [&](const std::string& msg) {
        if (!options.log) return;
        std::lock_guard lock(log_mutex);
        options.log(msg);
    };

    parallel_for(inputs.size(), options.jobs, [&](std::size_t i) {
        Slot& slot = slots[i];
        const std::string id = inputs[i].stem().string();
        try {
            TriMesh cover = load_mesh(inputs[i]);
            if (options.normalize_covers) cover = normalize(cover);
            EmbedParams params = options.params;
            params.seed = derive_seed(options.params.seed, i);
            if (params.payload.empty()) params.payload = random_payload(options.payload_bits, params.seed);
            const EmbedResult result = embed(cover, params);

            slot.record.id = id;
            slot.record.cover = out_dir / "covers" / (id + ".off");
            slot.record.stego = out_dir / "stegos" / (id + ".off");
            slot.record.variant = std::string(to_string(params.variant));
            slot.record.params = params.describe();
            slot.record.payload_hash = payload_hash(params.payload);
            save_off(cover, slot.record.cover);
            save_off(result.stego, slot.record.stego);
            if (!result.report.failed_bits.empty()) {
                slot.warning = std::to_string(result.report.failed_bits.size()) + " of " +
                               std::to_string(params.payload.size()) + " bits not enforced";
            }
            slot.ok = true;
            log(id + ": embedded " + std::to_string(params.payload.size()) + " bits, max displacement " +
                std::to_string(result.report.max_displacement));
        } catch (const std::exception& e) {
            slot.failure = e.what();
            log(id + ": FAILED " + slot.failure);
        }
    });

    CorpusBuild build;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const std::string id = inputs[i].stem().string();
        if (!slots[i].ok) {
            build.failures.push_back({id, slots[i].failure});
            continue;
        }
        if (!slots[i].warning.empty()) build.warnings.push_back({id, slots[i].warning});
        build.records.push_back(std::move(slots[i].record));
    }
    write_manifest(out_dir / "manifest.txt", build.records);
    return build;
}

FeatureVector extract_lfs76(const TriMesh& mesh, const ExtractOptions& options, ExtractionReport* report) {
    const PerElementFeatures phi = calibrate_and_extract(mesh, options.smoothing);
    if (report) *report += phi.report;
    return assemble(phi, FeatureSet::Lfs76, options.epsilon);
}

TableBuild extract_table(const std::vector<ManifestRecord>& records, const ExtractOptions& options) {
    if (records.empty()) throw Error(ErrorCode::EmptyCorpus, "no pairs to extract");
    struct Slot {
        bool ok = false;
        FeatureVector cover;
        FeatureVector stego;
        ExtractionReport report;
        std::string error;
    };
    std::vector<Slot> slots(records.size());
    std::mutex log_mutex;

    parallel_for(records.size(), options.jobs, [&](std::size_t i) {
        Slot& slot = slots[i];
        const ManifestRecord& r = records[i];
        std::string stage = "cover " + r.cover.string();
        try {
            const TriMesh cover = load_mesh(r.cover);
            stage = "stego " + r.stego.string();
            if (!fs::exists(r.stego)) throw Error(ErrorCode::Io, "file does not exist");
            const TriMesh stego = load_mesh(r.stego);
            if (!cover.same_topology(stego)) throw Error(ErrorCode::TopologyMismatch, "cover and stego differ in topology");
            stage = "features";
            slot.cover = extract_lfs76(cover, options, &slot.report);
            slot.stego = extract_lfs76(stego, options, &slot.report);
            slot.ok = true;
        } catch (const std::exception& e) {
            slot.error = stage + ": " + e.what();
        }
        if (options.log) {
            std::lock_guard lock(log_mutex);
            options.log(r.id + (slot.ok ? ": extracted" : ": FAILED " + slot.error));
        }
    });

    TableBuild build;
    std::vector<std::size_t> good;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].ok) {
            good.push_back(i);
            build.totals += slots[i].report;
        } else {
            build.errors.push_back({records[i].id, slots[i].error});
        }
    }
    build.table.cover.resize(static_cast<Eigen::Index>(good.size()), kLfs76Dim);
    build.table.stego.resize(static_cast<Eigen::Index>(good.size()), kLfs76Dim);
    for (std::size_t k = 0; k < good.size(); ++k) {
        const Slot& s = slots[good[k]];
        build.table.ids.push_back(records[good[k]].id);
        for (int c = 0; c < kLfs76Dim; ++c) {
            build.table.cover(static_cast<Eigen::Index>(k), c) = s.cover.values[static_cast<std::size_t>(c)];
            build.table.stego(static_cast<Eigen::Index>(k), c) = s.stego.values[static_cast<std::size_t>(c)];
        }
    }
    return build;
}

void write_feature_csv(std::ostream& out, const FeatureTable& table, FeatureSet set) {
    const std::vector<int> cols = lfs76_columns(set);
    out << feature_csv_header(static_cast<int>(cols.size())) << '\n';
    char buf[32];
    for (std::size_t p = 0; p < table.pairs(); ++p) {
        for (int label = 0; label < 2; ++label) {
            const MatrixXd& m = label == 0 ? table.cover : table.stego;
            out << label;
            for (int c : cols) {
                std::snprintf(buf, sizeof buf, ",%.17g", m(static_cast<Eigen::Index>(p), c));
                out << buf;
            }
            out << '\n';
        }
    }
}

FeatureTable read_feature_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty feature file");
    if (line != feature_csv_header(kLfs76Dim)) {
        throw Error(ErrorCode::DimensionMismatch, "feature file must hold the 76-column set (extract --set lfs76)");
    }
    std::vector<std::vector<double>> rows[2];
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        std::vector<double> values;
        int label = -1;
        bool first = true;
        while (std::getline(ss, tok, ',')) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0') {
                throw Error(ErrorCode::ParseError, "feature file line " + std::to_string(lineno) + ": bad number");
            }
            if (first) label = static_cast<int>(v);
            else values.push_back(v);
            first = false;
        }
        if ((label != 0 && label != 1) || values.size() != static_cast<std::size_t>(kLfs76Dim)) {
            throw Error(ErrorCode::ParseError, "feature file line " + std::to_string(lineno) + ": malformed row");
        }
        const std::size_t expected = rows[0].size() == rows[1].size() ? 0 : 1;
        if (static_cast<std::size_t>(label) != expected) {
            throw Error(ErrorCode::ParseError, "feature file line " + std::to_string(lineno) + ": rows must alternate cover, stego");
        }
        rows[label].push_back(std::move(values));
    }
    if (rows[0].size() != rows[1].size()) throw Error(ErrorCode::ParseError, "feature file ends with an unpaired cover");
    if (rows[0].empty()) throw Error(ErrorCode::EmptyCorpus, "feature file has no rows");
    FeatureTable t;
    const auto n = static_cast<Eigen::Index>(rows[0].size());
    t.cover.resize(n, kLfs76Dim);
    t.stego.resize(n, kLfs76Dim);
    for (Eigen::Index p = 0; p < n; ++p) {
        t.ids.push_back("pair" + std::to_string(p));
        for (int c = 0; c < kLfs76Dim; ++c) {
            t.cover(p, c) = rows[0][static_cast<std::size_t>(p)][static_cast<std::size_t>(c)];
            t.stego(p, c) = rows[1][static_cast<std::size_t>(p)][static_cast<std::size_t>(c)];
        }
    }
    return t;
}

}  // namespace meshsteg
