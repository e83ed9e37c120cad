#include "meshsteg/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "meshsteg/error.hpp"

namespace meshsteg {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorCode::Io: return "IoError";
        case ErrorCode::DegenerateMesh: return "DegenerateMesh";
        case ErrorCode::TopologyMismatch: return "TopologyMismatch";
        case ErrorCode::EmptyArray: return "EmptyArray";
        case ErrorCode::MissingFeature: return "MissingFeature";
        case ErrorCode::CapacityExceeded: return "CapacityExceeded";
        case ErrorCode::DegenerateAxis: return "DegenerateAxis";
        case ErrorCode::SingularCovariance: return "SingularCovariance";
        case ErrorCode::DegenerateScatter: return "DegenerateScatter";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::SizeMismatch: return "SizeMismatch";
        case ErrorCode::EmptyTestSet: return "EmptyTestSet";
        case ErrorCode::SingleClass: return "SingleClass";
        case ErrorCode::EmptyPlan: return "EmptyPlan";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Error";
}

int Connectivity::find_edge(int u, int v) const {
    const Edge key{std::min(u, v), std::max(u, v)};
    const auto it = std::lower_bound(edges.begin(), edges.end(), key);
    if (it == edges.end() || *it != key) return -1;
    return static_cast<int>(it - edges.begin());
}

Connectivity derive_connectivity(std::size_t vertex_count, std::span<const Face> faces) {
    Connectivity c;
    c.rings.resize(vertex_count);
    c.vertex_faces.resize(vertex_count);

    std::vector<std::pair<Edge, int>> incidences;
    incidences.reserve(faces.size() * 3);
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const Face& face = faces[f];
        for (int k = 0; k < 3; ++k) {
            const int u = face[k];
            const int v = face[(k + 1) % 3];
            incidences.push_back({Edge{std::min(u, v), std::max(u, v)}, static_cast<int>(f)});
            c.vertex_faces[static_cast<std::size_t>(u)].push_back(static_cast<int>(f));
        }
    }
    std::sort(incidences.begin(), incidences.end());

    for (std::size_t i = 0; i < incidences.size();) {
        std::size_t j = i;
        std::vector<int> inc;
        while (j < incidences.size() && incidences[j].first == incidences[i].first) {
            inc.push_back(incidences[j].second);
            ++j;
        }
        const Edge e = incidences[i].first;
        c.edges.push_back(e);
        c.rings[static_cast<std::size_t>(e.a)].push_back(e.b);
        c.rings[static_cast<std::size_t>(e.b)].push_back(e.a);
        if (inc.size() == 1) {
            ++c.boundary_edge_count;
        } else if (inc.size() == 2) {
            c.interior_edges.push_back(static_cast<int>(c.edges.size() - 1));
        } else {
            ++c.non_manifold_edge_count;
        }
        c.edge_faces.push_back(std::move(inc));
        i = j;
    }
    for (auto& ring : c.rings) {
        std::sort(ring.begin(), ring.end());
        if (ring.empty()) ++c.isolated_vertex_count;
    }
    return c;
}

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
    const auto n = static_cast<long long>(vertices_.size());
    for (std::size_t f = 0; f < faces_.size(); ++f) {
        for (int idx : faces_[f]) {
            if (idx < 0 || idx >= n) {
                throw Error(ErrorCode::ParseError, "face " + std::to_string(f) + " references vertex " +
                                                       std::to_string(idx) + " of " + std::to_string(n));
            }
        }
        const Face& t = faces_[f];
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
            throw Error(ErrorCode::ParseError, "face " + std::to_string(f) + " repeats a vertex");
        }
    }
    connectivity_ = std::make_shared<const Connectivity>(derive_connectivity(vertices_.size(), faces_));
}

TriMesh TriMesh::with_vertices(std::vector<Vec3> vertices) const {
    if (vertices.size() != vertices_.size()) {
        throw Error(ErrorCode::TopologyMismatch, "vertex count changed from " + std::to_string(vertices_.size()) +
                                                     " to " + std::to_string(vertices.size()));
    }
    TriMesh out;
    out.vertices_ = std::move(vertices);
    out.faces_ = faces_;
    out.connectivity_ = connectivity_;
    return out;
}

bool TriMesh::same_topology(const TriMesh& other) const {
    if (vertices_.size() != other.vertices_.size()) return false;
    return connectivity_ == other.connectivity_ || faces_ == other.faces_;
}

Vec3 TriMesh::centroid() const {
    Vec3 c = Vec3::Zero();
    for (const Vec3& v : vertices_) c += v;
    if (!vertices_.empty()) c /= static_cast<double>(vertices_.size());
    return c;
}

namespace {

std::string strip_comment(const std::string& line) {
    const auto pos = line.find('#');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char ch) { return std::isspace(ch); });
}

// Token stream over the non-comment content of an OFF file.
class OffTokens {
public:
    explicit OffTokens(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            std::istringstream ls(strip_comment(line));
            std::string tok;
            while (ls >> tok) tokens_.push_back(tok);
        }
    }

    bool done() const { return pos_ >= tokens_.size(); }

    const std::string& next(const char* what) {
        if (done()) throw Error(ErrorCode::ParseError, std::string("unexpected end of file reading ") + what);
        return tokens_[pos_++];
    }

    template <typename T>
    T number(const char* what) {
        const std::string& tok = next(what);
        std::istringstream ss(tok);
        T value{};
        ss >> value;
        if (ss.fail() || !ss.eof()) throw Error(ErrorCode::ParseError, std::string("bad ") + what + " '" + tok + "'");
        return value;
    }

private:
    std::vector<std::string> tokens_;
    std::size_t pos_ = 0;
};

}  // namespace

TriMesh parse_off(const std::string& text) {
    OffTokens tokens(text);
    const std::string header = tokens.next("header");
    if (header != "OFF") {
        if (header.size() > 3 && header.ends_with("OFF")) {
            throw Error(ErrorCode::UnsupportedFormat, "OFF variant '" + header + "' is not supported");
        }
        throw Error(ErrorCode::ParseError, "missing OFF header");
    }
    const long long nv = [&] {
        const std::string& tok = tokens.next("vertex count");
        if (tok == "BINARY") throw Error(ErrorCode::UnsupportedFormat, "binary OFF is not supported");
        std::istringstream ss(tok);
        long long v = -1;
        ss >> v;
        if (ss.fail() || !ss.eof() || v < 0) throw Error(ErrorCode::ParseError, "bad vertex count '" + tok + "'");
        return v;
    }();
    const auto nf = tokens.number<long long>("face count");
    (void)tokens.number<long long>("edge count");
    if (nf < 0) throw Error(ErrorCode::ParseError, "negative face count");

    std::vector<Vec3> vertices;
    vertices.reserve(static_cast<std::size_t>(nv));
    for (long long i = 0; i < nv; ++i) {
        const double x = tokens.number<double>("vertex coordinate");
        const double y = tokens.number<double>("vertex coordinate");
        const double z = tokens.number<double>("vertex coordinate");
        vertices.emplace_back(x, y, z);
    }
    std::vector<Face> faces;
    faces.reserve(static_cast<std::size_t>(nf));
    for (long long i = 0; i < nf; ++i) {
        const auto arity = tokens.number<long long>("face arity");
        if (arity != 3) {
            throw Error(ErrorCode::UnsupportedFormat,
                        "face " + std::to_string(i) + " has " + std::to_string(arity) + " vertices; only triangles are supported");
        }
        Face face{};
        for (int k = 0; k < 3; ++k) {
            const auto idx = tokens.number<long long>("face index");
            if (idx < 0 || idx >= nv) {
                throw Error(ErrorCode::ParseError, "face " + std::to_string(i) + " index " + std::to_string(idx) +
                                                       " out of range for " + std::to_string(nv) + " vertices");
            }
            face[k] = static_cast<int>(idx);
        }
        faces.push_back(face);
    }
    return TriMesh(std::move(vertices), std::move(faces));
}

TriMesh parse_obj(const std::string& text) {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::vector<long long> pending;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_comment(line);
        if (blank(line)) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            double x = 0, y = 0, z = 0;
            if (!(ls >> x >> y >> z)) throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": bad vertex");
            vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            pending.clear();
            std::string ref;
            while (ls >> ref) {
                const std::string head = ref.substr(0, ref.find('/'));
                std::istringstream rs(head);
                long long idx = 0;
                rs >> idx;
                if (rs.fail() || !rs.eof() || idx == 0) {
                    throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": bad face index '" + ref + "'");
                }
                pending.push_back(idx);
            }
            if (pending.size() != 3) {
                throw Error(ErrorCode::UnsupportedFormat, "line " + std::to_string(lineno) + ": face with " +
                                                              std::to_string(pending.size()) + " vertices; only triangles are supported");
            }
            Face face{};
            const auto nv = static_cast<long long>(vertices.size());
            for (int k = 0; k < 3; ++k) {
                long long idx = pending[static_cast<std::size_t>(k)];
                idx = idx > 0 ? idx - 1 : nv + idx;  // negative = relative to the end
                if (idx < 0) {
                    throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": face index out of range");
                }
                face[k] = static_cast<int>(idx);
            }
            faces.push_back(face);
        }
        // vt, vn, o, g, s, usemtl, mtllib are ignored
    }
    for (std::size_t f = 0; f < faces.size(); ++f) {
        for (int idx : faces[f]) {
            if (static_cast<std::size_t>(idx) >= vertices.size()) {
                throw Error(ErrorCode::ParseError, "face " + std::to_string(f) + " index " + std::to_string(idx + 1) +
                                                       " out of range for " + std::to_string(vertices.size()) + " vertices");
            }
        }
    }
    return TriMesh(std::move(vertices), std::move(faces));
}

MeshFormat format_from_path(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".off") return MeshFormat::Off;
    if (ext == ".obj") return MeshFormat::Obj;
    throw Error(ErrorCode::UnsupportedFormat, "unrecognised mesh extension '" + ext + "' (" + path.string() + ")");
}

TriMesh load_mesh(const std::filesystem::path& path) { return load_mesh(path, format_from_path(path)); }

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (std::any_of(text.begin(), text.end(), [](char c) { return c == '\0'; })) {
        throw Error(ErrorCode::UnsupportedFormat, path.string() + " looks like a binary file");
    }
    try {
        return format == MeshFormat::Off ? parse_off(text) : parse_obj(text);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + std::string(e.what()));
    }
}

std::string to_off(const TriMesh& mesh) {
    std::ostringstream out;
    out.precision(9);
    out << "OFF\n" << mesh.vertex_count() << ' ' << mesh.face_count() << ' ' << mesh.edge_count() << '\n';
    for (const Vec3& v : mesh.vertices()) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const Face& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    return out.str();
}

void save_off(const TriMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << to_off(mesh);
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

Vec3 bounding_box_extent(const TriMesh& mesh) {
    if (mesh.vertex_count() == 0) return Vec3::Zero();
    Vec3 lo = mesh.vertices().front();
    Vec3 hi = lo;
    for (const Vec3& v : mesh.vertices()) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    return hi - lo;
}

TriMesh normalize(const TriMesh& mesh) {
    if (mesh.vertex_count() == 0) throw Error(ErrorCode::DegenerateMesh, "mesh has no vertices");
    const double extent = bounding_box_extent(mesh).maxCoeff();
    if (!(extent > 0.0) || !std::isfinite(extent)) {
        throw Error(ErrorCode::DegenerateMesh, "all vertices coincide");
    }
    const Vec3 c = mesh.centroid();
    const double scale = 1.0 / extent;
    std::vector<Vec3> out;
    out.reserve(mesh.vertex_count());
    for (const Vec3& v : mesh.vertices()) out.push_back((v - c) * scale);
    return mesh.with_vertices(std::move(out));
}

}  // namespace meshsteg
