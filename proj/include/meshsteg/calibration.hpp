#pragma once

#include <cstddef>
#include <vector>

#include "meshsteg/mesh.hpp"

namespace meshsteg {

struct SmoothingParams {
    int iterations = 3;
    double weight = 0.3;  // lambda, in [0, 1]
};

struct SmoothingReport {
    std::size_t isolated_vertices = 0;  // left in place
};

// Uniform-weight Laplacian coordinates: v(i) minus the mean of its one-ring.
// Isolated vertices get a zero vector.
std::vector<Vec3> laplacian_coords(const TriMesh& mesh);

// Jacobi-style umbrella smoothing: every iteration moves each vertex by
// weight * (ring mean - v), all updates computed from the previous positions.
TriMesh laplacian_smooth(const TriMesh& mesh, const SmoothingParams& params = {},
                         SmoothingReport* report = nullptr);

// Sum of squared Laplacian coordinate norms.
double umbrella_energy(const TriMesh& mesh);

}  // namespace meshsteg
