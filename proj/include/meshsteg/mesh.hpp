#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace meshsteg {

using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;

// Unordered vertex pair stored as (min, max).
struct Edge {
    int a = 0;
    int b = 0;
    auto operator<=>(const Edge&) const = default;
};

// Connectivity derived from the face list. Shared (immutably) between a mesh
// and every mesh derived from it by moving vertices, so that smoothed and
// stego versions index the same edges in the same order.
struct Connectivity {
    std::vector<Edge> edges;                     // lexicographic order
    std::vector<std::vector<int>> rings;         // sorted one-ring neighbours per vertex
    std::vector<std::vector<int>> vertex_faces;  // faces incident to each vertex
    std::vector<std::vector<int>> edge_faces;    // faces incident to each edge
    std::vector<int> interior_edges;             // edges with exactly two incident faces
    std::size_t boundary_edge_count = 0;         // exactly one incident face
    std::size_t non_manifold_edge_count = 0;     // more than two incident faces
    std::size_t isolated_vertex_count = 0;

    int find_edge(int u, int v) const;  // -1 when absent
};

// Indexed triangle mesh. Positions and connectivity are immutable after
// construction; geometry changes produce a new mesh through with_vertices().
class TriMesh {
public:
    TriMesh() = default;
    TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces);

    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<Face>& faces() const { return faces_; }
    const Connectivity& connectivity() const { return *connectivity_; }

    std::size_t vertex_count() const { return vertices_.size(); }
    std::size_t face_count() const { return faces_.size(); }
    std::size_t edge_count() const { return connectivity_->edges.size(); }

    const Vec3& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }

    // Same connectivity, new positions. Throws TopologyMismatch on count mismatch.
    TriMesh with_vertices(std::vector<Vec3> vertices) const;

    // True when both meshes share face lists (and therefore edge order).
    bool same_topology(const TriMesh& other) const;

    Vec3 centroid() const;

private:
    std::vector<Vec3> vertices_;
    std::vector<Face> faces_;
    std::shared_ptr<const Connectivity> connectivity_ = std::make_shared<Connectivity>();
};

struct MeshPair {
    TriMesh cover;
    TriMesh stego;
};

Connectivity derive_connectivity(std::size_t vertex_count, std::span<const Face> faces);

enum class MeshFormat { Off, Obj };

// Picks the format from the extension (.off / .obj); UnsupportedFormat otherwise.
MeshFormat format_from_path(const std::filesystem::path& path);

TriMesh load_mesh(const std::filesystem::path& path);
TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format);
TriMesh parse_off(const std::string& text);
TriMesh parse_obj(const std::string& text);

std::string to_off(const TriMesh& mesh);
void save_off(const TriMesh& mesh, const std::filesystem::path& path);

// Centroid to origin, uniform scale so the largest bounding-box side is 1.
TriMesh normalize(const TriMesh& mesh);

Vec3 bounding_box_extent(const TriMesh& mesh);

}  // namespace meshsteg
