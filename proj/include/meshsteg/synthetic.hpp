#pragma once

#include <cstdint>
#include <string>

#include "meshsteg/mesh.hpp"

namespace meshsteg {

// Subdivided icosahedron projected onto a sphere; 10 * 4^level + 2 vertices.
TriMesh icosphere(int level, double radius = 1.0);

// Closed torus with `around` x `tube` vertices.
TriMesh torus(int around, int tube, double major_radius = 1.0, double minor_radius = 0.35);

// Open (nx x ny)-vertex grid over [0,1]^2 at height zero.
TriMesh grid(int nx, int ny);

enum class ShapeFamily { Sphere, Torus, Superellipsoid, Grid };

std::string_view to_string(ShapeFamily family);

// One random cover: a smoothly deformed sphere, torus, superellipsoid or
// height-field grid with 500-3000 vertices, small Gaussian vertex noise, and
// normalised to the unit cube. Deterministic in the seed.
TriMesh random_cover(std::uint64_t seed, ShapeFamily* family = nullptr);

}  // namespace meshsteg
