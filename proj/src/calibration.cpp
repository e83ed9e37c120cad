#include "meshsteg/calibration.hpp"

#include <string>

#include "meshsteg/error.hpp"

namespace meshsteg {

namespace {

std::vector<Vec3> umbrella(const std::vector<Vec3>& positions, const Connectivity& conn) {
    std::vector<Vec3> delta(positions.size(), Vec3::Zero());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const auto& ring = conn.rings[i];
        if (ring.empty()) continue;
        Vec3 mean = Vec3::Zero();
        for (int j : ring) mean += positions[static_cast<std::size_t>(j)];
        mean /= static_cast<double>(ring.size());
        delta[i] = positions[i] - mean;
    }
    return delta;
}

}  // namespace

std::vector<Vec3> laplacian_coords(const TriMesh& mesh) { return umbrella(mesh.vertices(), mesh.connectivity()); }

TriMesh laplacian_smooth(const TriMesh& mesh, const SmoothingParams& params, SmoothingReport* report) {
    if (params.iterations < 0) throw Error(ErrorCode::InvalidArgument, "negative smoothing iteration count");
    if (!(params.weight >= 0.0 && params.weight <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "smoothing weight " + std::to_string(params.weight) + " outside [0, 1]");
    }
    if (report) report->isolated_vertices = mesh.connectivity().isolated_vertex_count;

    std::vector<Vec3> positions = mesh.vertices();
    for (int it = 0; it < params.iterations; ++it) {
        const std::vector<Vec3> delta = umbrella(positions, mesh.connectivity());
        for (std::size_t i = 0; i < positions.size(); ++i) positions[i] -= params.weight * delta[i];
    }
    return mesh.with_vertices(std::move(positions));
}

double umbrella_energy(const TriMesh& mesh) {
    double energy = 0.0;
    for (const Vec3& d : laplacian_coords(mesh)) energy += d.squaredNorm();
    return energy;
}

}  // namespace meshsteg
