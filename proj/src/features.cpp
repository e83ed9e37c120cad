#include "meshsteg/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <Eigen/Dense>

#include "meshsteg/error.hpp"

namespace meshsteg {

namespace {

constexpr double kPi = std::numbers::pi;

// Curvatures below this magnitude (scaled by the local edge length) are
// treated as exact zeros, so planar regions map to K_r = 0.
constexpr double kFlatTolerance = 1e-10;

void require_same_topology(const TriMesh& a, const TriMesh& b) {
    if (!a.same_topology(b)) {
        throw Error(ErrorCode::TopologyMismatch, "meshes differ in vertex count or face connectivity");
    }
}

// Same angle as acos of the normalised dot product, but exact near 0 and pi
// where acos loses half the significant digits.
double clamped_angle(const Vec3& a, const Vec3& b) {
    if (!(a.norm() * b.norm() > 0.0)) return 0.0;
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

bool degenerate_normal(const Vec3& cross, const Vec3& e1, const Vec3& e2) {
    const double scale = e1.squaredNorm() + e2.squaredNorm();
    return !(scale > 0.0) || cross.norm() <= 1e-12 * scale;
}

std::vector<char> degenerate_faces(const TriMesh& mesh, const std::vector<Vec3>& normals) {
    std::vector<char> bad(mesh.face_count(), 0);
    for (std::size_t f = 0; f < mesh.face_count(); ++f) {
        const Face& t = mesh.faces()[f];
        const Vec3 e1 = mesh.vertex(t[1]) - mesh.vertex(t[0]);
        const Vec3 e2 = mesh.vertex(t[2]) - mesh.vertex(t[0]);
        bad[f] = degenerate_normal(normals[f], e1, e2) ? 1 : 0;
    }
    return bad;
}

}  // namespace

ExtractionReport& ExtractionReport::operator+=(const ExtractionReport& o) {
    degenerate_faces += o.degenerate_faces;
    skipped_dihedral_edges += o.skipped_dihedral_edges;
    boundary_edges += o.boundary_edges;
    non_manifold_edges += o.non_manifold_edges;
    zero_vertex_normals += o.zero_vertex_normals;
    insufficient_rings += o.insufficient_rings;
    isolated_vertices += o.isolated_vertices;
    return *this;
}

double PrincipalCurvature::ratio() const {
    const double hi = std::max(std::abs(k_min), std::abs(k_max));
    if (!(hi > 0.0)) return 0.0;
    return std::min(std::abs(k_min), std::abs(k_max)) / hi;
}

double wrapped_angle_difference(double a, double b) {
    double d = std::fmod(std::abs(a - b), 2.0 * kPi);
    if (d > kPi) d = 2.0 * kPi - d;
    return d;
}

std::vector<Vec3> face_normals(const TriMesh& mesh) {
    std::vector<Vec3> normals;
    normals.reserve(mesh.face_count());
    for (const Face& t : mesh.faces()) {
        const Vec3& p0 = mesh.vertex(t[0]);
        normals.push_back((mesh.vertex(t[1]) - p0).cross(mesh.vertex(t[2]) - p0));
    }
    return normals;
}

std::vector<double> dihedral_angles(const TriMesh& mesh) {
    const Connectivity& conn = mesh.connectivity();
    const std::vector<Vec3> normals = face_normals(mesh);
    const std::vector<char> bad = degenerate_faces(mesh, normals);
    std::vector<double> angles;
    angles.reserve(conn.interior_edges.size());
    for (int e : conn.interior_edges) {
        const auto& inc = conn.edge_faces[static_cast<std::size_t>(e)];
        const auto f0 = static_cast<std::size_t>(inc[0]);
        const auto f1 = static_cast<std::size_t>(inc[1]);
        if (bad[f0] || bad[f1]) {
            angles.push_back(std::numeric_limits<double>::quiet_NaN());
        } else {
            angles.push_back(clamped_angle(normals[f0], normals[f1]));
        }
    }
    return angles;
}

std::vector<Vec3> vertex_normals(const TriMesh& mesh) {
    std::vector<Vec3> normals(mesh.vertex_count(), Vec3::Zero());
    for (const Face& t : mesh.faces()) {
        for (int k = 0; k < 3; ++k) {
            const int i = t[k];
            const Vec3& p = mesh.vertex(i);
            const Vec3 e1 = mesh.vertex(t[(k + 1) % 3]) - p;
            const Vec3 e2 = mesh.vertex(t[(k + 2) % 3]) - p;
            const double w = e1.squaredNorm() * e2.squaredNorm();
            if (!(w > 0.0)) continue;
            // area * unit normal = cross / 2, in winding order
            normals[static_cast<std::size_t>(i)] += 0.5 * e1.cross(e2) / w;
        }
    }
    return normals;
}

std::vector<PrincipalCurvature> principal_curvatures(const TriMesh& mesh, std::size_t* insufficient) {
    const Connectivity& conn = mesh.connectivity();
    const std::vector<Vec3> normals = vertex_normals(mesh);
    std::vector<PrincipalCurvature> out(mesh.vertex_count());
    std::size_t bad = 0;

    for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
        const auto& ring = conn.rings[i];
        const double nlen = normals[i].norm();
        if (ring.size() < 3 || !(nlen > 0.0)) {
            ++bad;
            continue;
        }
        const Vec3 n = normals[i] / nlen;
        // Tangent frame from the coordinate axis least aligned with n.
        Eigen::Index axis = 0;
        n.cwiseAbs().minCoeff(&axis);
        const Vec3 u = n.cross(Vec3::Unit(axis)).normalized();
        const Vec3 w = n.cross(u);

        const Vec3& p = mesh.vertices()[i];
        Eigen::MatrixX3d design(static_cast<Eigen::Index>(ring.size()), 3);
        Eigen::VectorXd height(static_cast<Eigen::Index>(ring.size()));
        double mean_len = 0.0;
        for (std::size_t r = 0; r < ring.size(); ++r) {
            const Vec3 d = mesh.vertex(ring[r]) - p;
            const double x = d.dot(u);
            const double y = d.dot(w);
            const auto row = static_cast<Eigen::Index>(r);
            design(row, 0) = x * x;
            design(row, 1) = x * y;
            design(row, 2) = y * y;
            height(row) = d.dot(n);
            mean_len += d.norm();
        }
        mean_len /= static_cast<double>(ring.size());

        const Eigen::ColPivHouseholderQR<Eigen::MatrixX3d> qr(design);
        if (qr.rank() < 3) {
            ++bad;
            continue;
        }
        const Eigen::Vector3d coef = qr.solve(height);
        Eigen::Matrix2d shape;
        shape << 2.0 * coef(0), coef(1), coef(1), 2.0 * coef(2);
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(shape, Eigen::EigenvaluesOnly);
        PrincipalCurvature pc;
        pc.k_min = eig.eigenvalues()(0);
        pc.k_max = eig.eigenvalues()(1);
        if (std::abs(pc.k_min) * mean_len < kFlatTolerance) pc.k_min = 0.0;
        if (std::abs(pc.k_max) * mean_len < kFlatTolerance) pc.k_max = 0.0;
        pc.valid = true;
        out[i] = pc;
    }
    if (insufficient) *insufficient = bad;
    return out;
}

Vec3 from_spherical(double radius, double azimuth, double elevation) {
    return {radius * std::cos(elevation) * std::cos(azimuth), radius * std::cos(elevation) * std::sin(azimuth),
            radius * std::sin(elevation)};
}

SphericalCoords to_spherical(const TriMesh& mesh) {
    SphericalCoords s;
    s.center = mesh.centroid();
    const std::size_t n = mesh.vertex_count();
    s.radius.resize(n);
    s.azimuth.resize(n);
    s.elevation.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 d = mesh.vertices()[i] - s.center;
        const double r = d.norm();
        s.radius[i] = r;
        if (r > 0.0) {
            s.azimuth[i] = std::atan2(d.y(), d.x());
            s.elevation[i] = std::asin(std::clamp(d.z() / r, -1.0, 1.0));
        } else {
            s.azimuth[i] = 0.0;
            s.elevation[i] = 0.0;
        }
    }
    return s;
}

std::array<std::vector<double>, 8> positional_features(const TriMesh& mesh, const TriMesh& smoothed) {
    require_same_topology(mesh, smoothed);
    const std::vector<Vec3> lap = laplacian_coords(mesh);
    const std::vector<Vec3> lap_s = laplacian_coords(smoothed);
    const std::size_t n = mesh.vertex_count();
    std::array<std::vector<double>, 8> phi;
    for (auto& a : phi) a.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& v = mesh.vertices()[i];
        const Vec3& vs = smoothed.vertices()[i];
        for (int axis = 0; axis < 3; ++axis) {
            phi[static_cast<std::size_t>(axis)][i] = std::abs(v(axis) - vs(axis));
            phi[static_cast<std::size_t>(axis + 3)][i] = std::abs(lap[i](axis) - lap_s[i](axis));
        }
        phi[6][i] = std::abs(v.norm() - vs.norm());
        phi[7][i] = std::abs(lap[i].norm() - lap_s[i].norm());
    }
    return phi;
}

std::vector<double> dihedral_features(const TriMesh& mesh, const TriMesh& smoothed, ExtractionReport* report) {
    require_same_topology(mesh, smoothed);
    const std::vector<double> a = dihedral_angles(mesh);
    const std::vector<double> b = dihedral_angles(smoothed);
    std::vector<double> phi;
    phi.reserve(a.size());
    std::size_t skipped = 0;
    for (std::size_t e = 0; e < a.size(); ++e) {
        if (std::isnan(a[e]) || std::isnan(b[e])) {
            ++skipped;
            continue;
        }
        phi.push_back(std::abs(a[e] - b[e]));
    }
    if (report) {
        report->skipped_dihedral_edges += skipped;
        report->boundary_edges += mesh.connectivity().boundary_edge_count;
        report->non_manifold_edges += mesh.connectivity().non_manifold_edge_count;
    }
    return phi;
}

std::vector<double> face_normal_features(const TriMesh& mesh, const TriMesh& smoothed, ExtractionReport* report) {
    require_same_topology(mesh, smoothed);
    const std::vector<Vec3> na = face_normals(mesh);
    const std::vector<Vec3> nb = face_normals(smoothed);
    const std::vector<char> bad_a = degenerate_faces(mesh, na);
    const std::vector<char> bad_b = degenerate_faces(smoothed, nb);
    std::vector<double> phi(mesh.face_count(), 0.0);
    std::size_t degenerate = 0;
    for (std::size_t f = 0; f < phi.size(); ++f) {
        if (bad_a[f] || bad_b[f]) {
            ++degenerate;
            continue;
        }
        phi[f] = clamped_angle(na[f], nb[f]);
    }
    if (report) report->degenerate_faces += degenerate;
    return phi;
}

std::vector<double> vertex_normal_features(const TriMesh& mesh, const TriMesh& smoothed, ExtractionReport* report) {
    require_same_topology(mesh, smoothed);
    const std::vector<Vec3> na = vertex_normals(mesh);
    const std::vector<Vec3> nb = vertex_normals(smoothed);
    std::vector<double> phi(mesh.vertex_count(), 0.0);
    std::size_t zero = 0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        if (!(na[i].norm() > 0.0) || !(nb[i].norm() > 0.0)) {
            ++zero;
            continue;
        }
        phi[i] = clamped_angle(na[i], nb[i]);
    }
    if (report) report->zero_vertex_normals += zero;
    return phi;
}

std::array<std::vector<double>, 2> curvature_features(const TriMesh& mesh, const TriMesh& smoothed,
                                                      ExtractionReport* report) {
    require_same_topology(mesh, smoothed);
    std::size_t bad_a = 0;
    std::size_t bad_b = 0;
    const auto ka = principal_curvatures(mesh, &bad_a);
    const auto kb = principal_curvatures(smoothed, &bad_b);
    std::array<std::vector<double>, 2> phi;
    phi[0].resize(ka.size());
    phi[1].resize(ka.size());
    for (std::size_t i = 0; i < ka.size(); ++i) {
        phi[0][i] = std::abs(ka[i].gaussian() - kb[i].gaussian());
        phi[1][i] = std::abs(ka[i].ratio() - kb[i].ratio());
    }
    if (report) report->insufficient_rings += std::max(bad_a, bad_b);
    return phi;
}

std::array<std::vector<double>, 3> spherical_vertex_features(const TriMesh& mesh, const TriMesh& smoothed) {
    require_same_topology(mesh, smoothed);
    const SphericalCoords a = to_spherical(mesh);
    const SphericalCoords b = to_spherical(smoothed);
    std::array<std::vector<double>, 3> phi;
    for (auto& v : phi) v.resize(mesh.vertex_count());
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
        phi[0][i] = wrapped_angle_difference(a.azimuth[i], b.azimuth[i]);
        phi[1][i] = std::abs(a.elevation[i] - b.elevation[i]);
        phi[2][i] = std::abs(a.radius[i] - b.radius[i]);
    }
    return phi;
}

std::array<std::vector<double>, 3> spherical_edge_features(const TriMesh& mesh, const TriMesh& smoothed) {
    require_same_topology(mesh, smoothed);
    const SphericalCoords a = to_spherical(mesh);
    const SphericalCoords b = to_spherical(smoothed);
    const auto& edges = mesh.connectivity().edges;
    std::array<std::vector<double>, 3> phi;
    for (auto& v : phi) v.resize(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto i = static_cast<std::size_t>(edges[k].a);
        const auto j = static_cast<std::size_t>(edges[k].b);
        const double kt = wrapped_angle_difference(a.azimuth[i], a.azimuth[j]);
        const double kt_s = wrapped_angle_difference(b.azimuth[i], b.azimuth[j]);
        const double kp = std::abs(a.elevation[i] - a.elevation[j]);
        const double kp_s = std::abs(b.elevation[i] - b.elevation[j]);
        const double kr = std::abs(a.radius[i] - a.radius[j]);
        const double kr_s = std::abs(b.radius[i] - b.radius[j]);
        phi[0][k] = std::abs(kt - kt_s);
        phi[1][k] = std::abs(kp - kp_s);
        phi[2][k] = std::abs(kr - kr_s);
    }
    return phi;
}

PerElementFeatures extract_features(const TriMesh& mesh, const TriMesh& smoothed) {
    require_same_topology(mesh, smoothed);
    PerElementFeatures out;
    auto& phi = out.phi;
    auto pos = positional_features(mesh, smoothed);
    for (std::size_t k = 0; k < 8; ++k) phi[k] = std::move(pos[k]);
    phi[8] = dihedral_features(mesh, smoothed, &out.report);
    phi[9] = face_normal_features(mesh, smoothed, &out.report);
    phi[10] = vertex_normal_features(mesh, smoothed, &out.report);
    auto curv = curvature_features(mesh, smoothed, &out.report);
    phi[11] = std::move(curv[0]);
    phi[12] = std::move(curv[1]);
    auto sv = spherical_vertex_features(mesh, smoothed);
    auto se = spherical_edge_features(mesh, smoothed);
    for (std::size_t k = 0; k < 3; ++k) {
        phi[13 + k] = std::move(sv[k]);
        phi[16 + k] = std::move(se[k]);
    }
    out.report.isolated_vertices = mesh.connectivity().isolated_vertex_count;
    return out;
}

PerElementFeatures calibrate_and_extract(const TriMesh& mesh, const SmoothingParams& params) {
    return extract_features(mesh, laplacian_smooth(mesh, params));
}

void write_feature_dump_csv(std::ostream& out, const PerElementFeatures& features) {
    out << "element,phi,value\n";
    const auto old = out.precision(17);
    for (int k = 0; k < kRawFeatureCount; ++k) {
        const auto& values = features.phi[static_cast<std::size_t>(k)];
        for (std::size_t e = 0; e < values.size(); ++e) out << e << ',' << (k + 1) << ',' << values[e] << '\n';
    }
    out.precision(old);
}

}  // namespace meshsteg
