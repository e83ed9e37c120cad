#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "meshsteg/calibration.hpp"
#include "meshsteg/error.hpp"
#include "meshsteg/features.hpp"
#include "meshsteg/synthetic.hpp"
#include "test_support.hpp"

using namespace meshsteg;
using namespace meshsteg::testing;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Vec3 naive_face_normal(const TriMesh& m, const Face& f) {
    return (m.vertex(f[1]) - m.vertex(f[0])).cross(m.vertex(f[2]) - m.vertex(f[0]));
}

double wrap(double d) {
    d = std::abs(d);
    while (d > 2 * kPi) d -= 2 * kPi;
    return d > kPi ? 2 * kPi - d : d;
}

// Incident faces per canonical edge, in lexicographic edge order.
std::map<std::pair<int, int>, std::vector<int>> naive_edge_faces(const TriMesh& m) {
    std::map<std::pair<int, int>, std::vector<int>> out;
    for (std::size_t f = 0; f < m.face_count(); ++f) {
        const Face& t = m.faces()[f];
        for (int k = 0; k < 3; ++k) {
            const int a = t[k], b = t[(k + 1) % 3];
            out[{std::min(a, b), std::max(a, b)}].push_back(static_cast<int>(f));
        }
    }
    return out;
}

std::vector<double> naive_dihedral(const TriMesh& m) {
    std::vector<double> out;
    for (const auto& [edge, faces] : naive_edge_faces(m)) {
        if (faces.size() != 2) continue;
        out.push_back(angle_between(naive_face_normal(m, m.faces()[static_cast<std::size_t>(faces[0])]),
                                    naive_face_normal(m, m.faces()[static_cast<std::size_t>(faces[1])])));
    }
    return out;
}

std::vector<Vec3> naive_vertex_normals(const TriMesh& m) {
    std::vector<Vec3> n(m.vertex_count(), Vec3::Zero());
    for (const Face& f : m.faces()) {
        const Vec3 normal = naive_face_normal(m, f);
        const double area = 0.5 * normal.norm();
        for (int k = 0; k < 3; ++k) {
            const Vec3& p = m.vertex(f[k]);
            const double l1 = (m.vertex(f[(k + 1) % 3]) - p).squaredNorm();
            const double l2 = (m.vertex(f[(k + 2) % 3]) - p).squaredNorm();
            n[static_cast<std::size_t>(f[k])] += area * normal.normalized() / (l1 * l2);
        }
    }
    return n;
}

struct Sph {
    double r, theta, phi;
};

std::vector<Sph> naive_spherical(const TriMesh& m) {
    Vec3 c = Vec3::Zero();
    for (const auto& p : m.vertices()) c += p;
    c /= static_cast<double>(m.vertex_count());
    std::vector<Sph> out;
    for (const auto& p : m.vertices()) {
        const Vec3 d = p - c;
        out.push_back({d.norm(), std::atan2(d.y(), d.x()), std::asin(d.z() / d.norm())});
    }
    return out;
}

// Normal-equation quadric fit with closed-form 2x2 eigenvalues.
std::pair<double, double> naive_curvature(const TriMesh& m, const std::set<int>& ring, std::size_t i, const Vec3& normal) {
    const Vec3 n = normal.normalized();
    Eigen::Index axis = 0;
    n.cwiseAbs().minCoeff(&axis);
    const Vec3 u = n.cross(Vec3::Unit(axis)).normalized();
    const Vec3 w = n.cross(u);
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    double mean_len = 0.0;
    for (int j : ring) {
        const Vec3 d = m.vertex(j) - m.vertices()[i];
        mean_len += d.norm() / static_cast<double>(ring.size());
        const Eigen::Vector3d row(d.dot(u) * d.dot(u), d.dot(u) * d.dot(w), d.dot(w) * d.dot(w));
        ata += row * row.transpose();
        atb += row * d.dot(n);
    }
    const Eigen::Vector3d c = ata.ldlt().solve(atb);
    const double a = 2 * c(0), b = c(1), d = 2 * c(2);
    const double mean = 0.5 * (a + d);
    const double disc = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    // Curvatures that vanish at the ring's length scale count as planar.
    const auto flat = [&](double k) { return std::abs(k) * mean_len < 1e-10 ? 0.0 : k; };
    return {flat(mean - disc), flat(mean + disc)};
}

TriMesh rotate(const TriMesh& m, const Eigen::Matrix3d& r) {
    std::vector<Vec3> v;
    for (const auto& p : m.vertices()) v.push_back(r * p);
    return m.with_vertices(v);
}

}  // namespace

TEST_CASE("self-calibration nullity") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const TriMesh m = random_cover(seed);
        const PerElementFeatures f = extract_features(m, m);
        for (int k = 1; k <= kRawFeatureCount; ++k) CHECK(max_abs(f(k)) == 0.0);
    }
}

TEST_CASE("array lengths follow the element type") {
    const TriMesh m = random_cover(17);
    const PerElementFeatures f = calibrate_and_extract(m);
    const std::size_t nv = m.vertex_count();
    for (int k : {1, 2, 3, 4, 5, 6, 7, 8, 11, 12, 13, 14, 15, 16}) CHECK(f(k).size() == nv);
    CHECK(f(9).size() == m.connectivity().interior_edges.size());
    CHECK(f(10).size() == m.face_count());
    for (int k : {17, 18, 19}) CHECK(f(k).size() == m.edge_count());
    for (const auto& a : f.phi) {
        for (double x : a) CHECK(x >= 0.0);
    }
    for (int k : {9, 10, 11, 14}) CHECK(max_abs(f(k)) <= kPi);
    CHECK(max_abs(f(15)) <= kPi);
}

TEST_CASE("positional features: hand example") {
    const TriMesh a({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {{0, 1, 2}});
    const TriMesh b = a.with_vertices({{0.7, 0, 0.4}, {0, 1, 0}, {0, 0, 1}});
    const auto phi = positional_features(a, b);
    CHECK(phi[0][0] == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(phi[1][0] == 0.0);
    CHECK(phi[2][0] == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(phi[6][0] == doctest::Approx(std::abs(1.0 - std::sqrt(0.65))).epsilon(1e-14));
}

TEST_CASE("all features match naive oracles on smoothed random covers") {
    for (std::uint64_t seed : {2u, 5u, 9u}) {
        const TriMesh m = random_cover(seed);
        const TriMesh s = laplacian_smooth(m);
        const PerElementFeatures f = extract_features(m, s);

        const auto la = naive_laplacian(m);
        const auto ls = naive_laplacian(s);
        std::array<std::vector<double>, 8> pos;
        for (std::size_t i = 0; i < m.vertex_count(); ++i) {
            const Vec3& p = m.vertices()[i];
            const Vec3& q = s.vertices()[i];
            for (int a = 0; a < 3; ++a) {
                pos[static_cast<std::size_t>(a)].push_back(std::abs(p(a) - q(a)));
                pos[static_cast<std::size_t>(a) + 3].push_back(std::abs(la[i](a) - ls[i](a)));
            }
            pos[6].push_back(std::abs(p.norm() - q.norm()));
            pos[7].push_back(std::abs(la[i].norm() - ls[i].norm()));
        }
        for (int k = 0; k < 8; ++k) CHECK(max_diff(f(k + 1), pos[static_cast<std::size_t>(k)]) < 1e-12);

        const auto da = naive_dihedral(m);
        const auto ds = naive_dihedral(s);
        std::vector<double> phi9;
        for (std::size_t e = 0; e < da.size(); ++e) phi9.push_back(std::abs(da[e] - ds[e]));
        CHECK(max_diff(f(9), phi9) < 1e-9);

        std::vector<double> phi10;
        for (const Face& t : m.faces()) phi10.push_back(angle_between(naive_face_normal(m, t), naive_face_normal(s, t)));
        CHECK(max_diff(f(10), phi10) < 1e-9);

        const auto na = naive_vertex_normals(m);
        const auto ns = naive_vertex_normals(s);
        std::vector<double> phi11;
        for (std::size_t i = 0; i < na.size(); ++i) phi11.push_back(angle_between(na[i], ns[i]));
        CHECK(max_diff(f(11), phi11) < 1e-9);

        std::vector<double> phi12, phi13;
        const auto ratio = [](std::pair<double, double> k) {
            const double hi = std::max(std::abs(k.first), std::abs(k.second));
            return hi > 0 ? std::min(std::abs(k.first), std::abs(k.second)) / hi : 0.0;
        };
        const auto rings = naive_rings(m);
        for (std::size_t i = 0; i < m.vertex_count(); ++i) {
            const auto ka = naive_curvature(m, rings[i], i, na[i]);
            const auto ks = naive_curvature(s, rings[i], i, ns[i]);
            phi12.push_back(std::abs(ka.first * ka.second - ks.first * ks.second));
            phi13.push_back(std::abs(ratio(ka) - ratio(ks)));
        }
        // The oracle solves the normal equations, so it is looser than a QR fit.
        double worst12 = 0.0;
        for (std::size_t i = 0; i < phi12.size(); ++i) {
            worst12 = std::max(worst12, std::abs(f(12)[i] - phi12[i]) / (1.0 + phi12[i]));
        }
        CHECK(worst12 < 1e-6);
        CHECK(max_diff(f(13), phi13) < 1e-6);

        const auto sa = naive_spherical(m);
        const auto ss = naive_spherical(s);
        std::vector<double> p14, p15, p16;
        for (std::size_t i = 0; i < sa.size(); ++i) {
            p14.push_back(wrap(sa[i].theta - ss[i].theta));
            p15.push_back(std::abs(sa[i].phi - ss[i].phi));
            p16.push_back(std::abs(sa[i].r - ss[i].r));
        }
        CHECK(max_diff(f(14), p14) < 1e-12);
        CHECK(max_diff(f(15), p15) < 1e-12);
        CHECK(max_diff(f(16), p16) < 1e-12);

        std::vector<double> p17, p18, p19;
        for (const auto& [edge, faces] : naive_edge_faces(m)) {
            const auto i = static_cast<std::size_t>(edge.first);
            const auto j = static_cast<std::size_t>(edge.second);
            p17.push_back(std::abs(wrap(sa[i].theta - sa[j].theta) - wrap(ss[i].theta - ss[j].theta)));
            p18.push_back(std::abs(std::abs(sa[i].phi - sa[j].phi) - std::abs(ss[i].phi - ss[j].phi)));
            p19.push_back(std::abs(std::abs(sa[i].r - sa[j].r) - std::abs(ss[i].r - ss[j].r)));
        }
        CHECK(max_diff(f(17), p17) < 1e-12);
        CHECK(max_diff(f(18), p18) < 1e-12);
        CHECK(max_diff(f(19), p19) < 1e-12);
    }
}

TEST_CASE("dihedral angles") {
    SUBCASE("regular tetrahedron") {
        for (double a : dihedral_angles(regular_tetrahedron())) CHECK(std::abs(a - (kPi - std::acos(1.0 / 3.0))) < 1e-9);
    }
    SUBCASE("coplanar triangles") {
        const TriMesh m({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}}, {{0, 1, 2}, {1, 3, 2}});
        REQUIRE(dihedral_angles(m).size() == 1);
        CHECK(dihedral_angles(m)[0] == doctest::Approx(0.0));
        CHECK(dihedral_features(m, m)[0] == 0.0);
    }
    SUBCASE("degenerate incident face skips the edge") {
        const TriMesh m({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}}, {{0, 1, 2}, {1, 3, 2}});
        const TriMesh flat = m.with_vertices({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.5, 0.5, 0}});
        ExtractionReport report;
        CHECK(dihedral_features(m, flat, &report).empty());
        CHECK(report.skipped_dihedral_edges == 1);
        CHECK(report.boundary_edges == 4);
    }
}

TEST_CASE("face normal angle of a quarter turn is pi/2") {
    const TriMesh m({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
    const TriMesh r = rotate(m, Eigen::AngleAxisd(kPi / 2, Vec3::UnitX()).toRotationMatrix());
    CHECK(face_normal_features(m, r)[0] == doctest::Approx(kPi / 2).epsilon(1e-12));

    ExtractionReport report;
    const TriMesh squashed = m.with_vertices({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
    CHECK(face_normal_features(m, squashed, &report)[0] == 0.0);
    CHECK(report.degenerate_faces == 1);
}

TEST_CASE("vertex normal follows a rotated ring") {
    std::vector<Vec3> v{Vec3::Zero()};
    std::vector<Face> f;
    for (int k = 0; k < 7; ++k) {
        const double a = 2 * kPi * k / 7 + 0.1 * k * k;
        v.emplace_back((1 + 0.2 * k) * std::cos(a), (1 + 0.1 * k) * std::sin(a), 0.0);
        f.push_back({0, 1 + k, 1 + (k + 1) % 7});
    }
    const TriMesh fan(v, f);
    CHECK(vertex_normals(fan)[0].normalized().cross(Vec3::UnitZ()).norm() < 1e-12);
    CHECK(vertex_normal_features(fan, fan)[0] == 0.0);
    for (double alpha : {0.05, 0.4, 1.2}) {
        const Vec3 axis = Vec3(1, 2, 0).normalized();
        const TriMesh r = rotate(fan, Eigen::AngleAxisd(alpha, axis).toRotationMatrix());
        CHECK(vertex_normal_features(fan, r)[0] == doctest::Approx(alpha).epsilon(1e-12));
    }
}

TEST_CASE("icosphere curvature approaches the analytic value") {
    double previous = 1e9;
    for (int level = 2; level <= 5; ++level) {
        const TriMesh s = icosphere(level, 1.0);
        double worst_g = 0.0, worst_r = 0.0;
        for (const auto& pc : principal_curvatures(s)) {
            REQUIRE(pc.valid);
            worst_g = std::max(worst_g, std::abs(pc.gaussian() - 1.0));
            worst_r = std::max(worst_r, std::abs(pc.ratio() - 1.0));
        }
        if (level >= 4) {
            CHECK(s.vertex_count() >= 2562);
            CHECK(worst_g < 0.1);
            CHECK(worst_r < 0.1);
        }
        CHECK(worst_g < previous);
        previous = worst_g;
    }
    const TriMesh big = icosphere(4, 2.0);
    for (const auto& pc : principal_curvatures(big)) CHECK(pc.gaussian() == doctest::Approx(0.25).epsilon(0.1));
}

TEST_CASE("planar patches have zero curvature") {
    const TriMesh g = grid(6, 6);
    std::size_t insufficient = 0;
    const auto k = principal_curvatures(g, &insufficient);
    for (const auto& pc : k) {
        CHECK(pc.gaussian() == 0.0);
        CHECK(pc.ratio() == 0.0);
    }
    const auto phi = curvature_features(g, g);
    CHECK(max_abs(phi[0]) == 0.0);
    CHECK(max_abs(phi[1]) == 0.0);
}

TEST_CASE("spherical coordinates") {
    const TriMesh m({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {-1, 0, 0}, {0, -1, 0}, {0, 0, -1}},
                    {{0, 1, 2}, {3, 4, 5}});
    const SphericalCoords s = to_spherical(m);
    CHECK(s.center.norm() < 1e-15);
    CHECK(s.radius[0] == doctest::Approx(1.0));
    CHECK(s.azimuth[0] == 0.0);
    CHECK(s.elevation[0] == 0.0);
    CHECK(s.radius[2] == doctest::Approx(1.0));
    CHECK(s.elevation[2] == doctest::Approx(kPi / 2));

    const auto edge = spherical_edge_features(m, m);
    CHECK(max_abs(edge[0]) == 0.0);
    const int e01 = m.connectivity().find_edge(0, 1);
    CHECK(wrapped_angle_difference(s.azimuth[0], s.azimuth[1]) == doctest::Approx(kPi / 2));
    CHECK(std::abs(s.elevation[0] - s.elevation[1]) == 0.0);
    CHECK(std::abs(s.radius[0] - s.radius[1]) < 1e-15);
    CHECK(e01 >= 0);

    const TriMesh c = random_cover(14);
    const SphericalCoords sc = to_spherical(c);
    for (std::size_t i = 0; i < c.vertex_count(); ++i) {
        const Vec3 back = sc.center + from_spherical(sc.radius[i], sc.azimuth[i], sc.elevation[i]);
        CHECK((back - c.vertices()[i]).norm() < 1e-9);
    }
}

TEST_CASE("wrapped azimuth difference") {
    CHECK(wrapped_angle_difference(3.1, -3.1) == doctest::Approx(2 * kPi - 6.2).epsilon(1e-12));
    CHECK(wrapped_angle_difference(0.5, 0.2) == doctest::Approx(0.3));
    CHECK(wrapped_angle_difference(-kPi / 2, kPi / 2) == doctest::Approx(kPi));
}

TEST_CASE("rotation: phi7 invariant, phi1-3 covariant") {
    const TriMesh m = random_cover(23);
    const TriMesh s = laplacian_smooth(m);
    const Eigen::Matrix3d quarter = Eigen::AngleAxisd(kPi / 2, Vec3::UnitZ()).toRotationMatrix();
    const auto a = positional_features(m, s);
    const auto b = positional_features(rotate(m, quarter), rotate(s, quarter));
    CHECK(max_diff(a[6], b[6]) < 1e-12);
    // A quarter turn about z swaps the x and y differences.
    CHECK(max_diff(a[0], b[1]) < 1e-12);
    CHECK(max_diff(a[1], b[0]) < 1e-12);
    CHECK(max_diff(a[2], b[2]) < 1e-12);

    const Eigen::Matrix3d oblique = Eigen::AngleAxisd(0.7, Vec3(1, 1, 0).normalized()).toRotationMatrix();
    const auto c = positional_features(rotate(m, oblique), rotate(s, oblique));
    CHECK(max_diff(a[6], c[6]) < 1e-12);
    CHECK(max_diff(a[0], c[0]) > 1e-6);
}

TEST_CASE("topology mismatch is rejected") {
    CHECK_THROWS_AS(extract_features(icosphere(1), icosphere(2)), Error);
}

TEST_CASE("feature dump lists every element") {
    const TriMesh m = icosphere(1);
    const PerElementFeatures f = calibrate_and_extract(m);
    std::ostringstream out;
    write_feature_dump_csv(out, f);
    std::size_t rows = 0;
    for (const auto& a : f.phi) rows += a.size();
    std::size_t lines = 0;
    std::istringstream in(out.str());
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines == rows + 1);
}
