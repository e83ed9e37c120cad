#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "meshsteg/calibration.hpp"
#include "meshsteg/mesh.hpp"

namespace meshsteg {

inline constexpr int kRawFeatureCount = 19;

// Counts of elements that produced zero-valued (or skipped) entries instead
// of aborting extraction.
struct ExtractionReport {
    std::size_t degenerate_faces = 0;        // zero-area faces in either mesh
    std::size_t skipped_dihedral_edges = 0;  // interior edges touching a degenerate face
    std::size_t boundary_edges = 0;
    std::size_t non_manifold_edges = 0;
    std::size_t zero_vertex_normals = 0;
    std::size_t insufficient_rings = 0;  // valence < 3, or a rank-deficient quadric fit
    std::size_t isolated_vertices = 0;

    ExtractionReport& operator+=(const ExtractionReport& other);
};

// The 19 per-element difference arrays. phi[k] holds feature k+1.
//   phi1..phi8, phi11..phi16  per vertex
//   phi9                      per interior edge (degenerate-incident edges dropped)
//   phi10                     per face
//   phi17..phi19              per edge
struct PerElementFeatures {
    std::array<std::vector<double>, kRawFeatureCount> phi;
    ExtractionReport report;

    const std::vector<double>& operator()(int one_based) const { return phi[static_cast<std::size_t>(one_based - 1)]; }
};

struct SphericalCoords {
    Vec3 center = Vec3::Zero();
    std::vector<double> radius;
    std::vector<double> azimuth;    // (-pi, pi]
    std::vector<double> elevation;  // [-pi/2, pi/2]
};

struct PrincipalCurvature {
    double k_min = 0.0;
    double k_max = 0.0;
    bool valid = false;

    double gaussian() const { return k_min * k_max; }
    double ratio() const;  // min(|k|)/max(|k|), 0 when both vanish
};

// Angle difference folded into [0, pi].
double wrapped_angle_difference(double a, double b);

// Unnormalised face normals (cross product of the face's edge vectors, winding order).
std::vector<Vec3> face_normals(const TriMesh& mesh);

// Angle in [0, pi] between the two incident face normals of each interior
// edge; the returned vector is indexed like Connectivity::interior_edges.
// Entries touching a degenerate face are NaN.
std::vector<double> dihedral_angles(const TriMesh& mesh);

// Face-area weighted normals divided by the squared lengths of the two face
// edges meeting at the vertex. Not normalised.
std::vector<Vec3> vertex_normals(const TriMesh& mesh);

// Quadric height-field fit over the vertex-normal tangent plane.
std::vector<PrincipalCurvature> principal_curvatures(const TriMesh& mesh, std::size_t* insufficient = nullptr);

SphericalCoords to_spherical(const TriMesh& mesh);
Vec3 from_spherical(double radius, double azimuth, double elevation);

std::array<std::vector<double>, 8> positional_features(const TriMesh& mesh, const TriMesh& smoothed);
std::vector<double> dihedral_features(const TriMesh& mesh, const TriMesh& smoothed, ExtractionReport* report = nullptr);
std::vector<double> face_normal_features(const TriMesh& mesh, const TriMesh& smoothed, ExtractionReport* report = nullptr);
std::vector<double> vertex_normal_features(const TriMesh& mesh, const TriMesh& smoothed, ExtractionReport* report = nullptr);
std::array<std::vector<double>, 2> curvature_features(const TriMesh& mesh, const TriMesh& smoothed,
                                                      ExtractionReport* report = nullptr);
std::array<std::vector<double>, 3> spherical_vertex_features(const TriMesh& mesh, const TriMesh& smoothed);
std::array<std::vector<double>, 3> spherical_edge_features(const TriMesh& mesh, const TriMesh& smoothed);

// All 19 arrays between a mesh and a smoothed copy of it.
PerElementFeatures extract_features(const TriMesh& mesh, const TriMesh& smoothed);

// Smooth with the given parameters, then extract.
PerElementFeatures calibrate_and_extract(const TriMesh& mesh, const SmoothingParams& params = {});

// "element,phi,value" rows for visualisation.
void write_feature_dump_csv(std::ostream& out, const PerElementFeatures& features);

}  // namespace meshsteg
