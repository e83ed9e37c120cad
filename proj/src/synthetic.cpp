#include "meshsteg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "meshsteg/error.hpp"
#include "meshsteg/rng.hpp"

namespace meshsteg {

namespace {

constexpr double kPi = std::numbers::pi;

struct Bump {
    Vec3 direction;
    double frequency;
    double phase;
    double amplitude;
};

std::vector<Bump> random_bumps(Rng& rng, int count, double max_amplitude) {
    std::vector<Bump> bumps;
    for (int k = 0; k < count; ++k) {
        Vec3 d(rng.normal(), rng.normal(), rng.normal());
        d.normalize();
        bumps.push_back({d, rng.uniform(1.0, 4.0), rng.uniform(0.0, 2.0 * kPi), rng.uniform(0.2, 1.0) * max_amplitude});
    }
    return bumps;
}

double bump_field(const std::vector<Bump>& bumps, const Vec3& p) {
    double s = 0.0;
    for (const auto& b : bumps) s += b.amplitude * std::sin(b.frequency * b.direction.dot(p) + b.phase);
    return s;
}

double signed_power(double x, double e) { return std::copysign(std::pow(std::abs(x), e), x); }

}  // namespace

TriMesh icosphere(int level, double radius) {
    if (level < 0 || level > 7) throw Error(ErrorCode::InvalidArgument, "icosphere level must be in [0, 7]");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                        {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& p : v) p.normalize();
    std::vector<Face> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                        {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> midpoint;
        const auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            const auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            v.push_back((v[static_cast<std::size_t>(a)] + v[static_cast<std::size_t>(b)]).normalized());
            const int id = static_cast<int>(v.size()) - 1;
            midpoint.emplace(key, id);
            return id;
        };
        std::vector<Face> next;
        next.reserve(f.size() * 4);
        for (const auto& tri : f) {
            const int ab = mid(tri[0], tri[1]);
            const int bc = mid(tri[1], tri[2]);
            const int ca = mid(tri[2], tri[0]);
            next.push_back({tri[0], ab, ca});
            next.push_back({tri[1], bc, ab});
            next.push_back({tri[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        f = std::move(next);
    }
    for (auto& p : v) p *= radius;
    return TriMesh(std::move(v), std::move(f));
}

TriMesh torus(int around, int tube, double major_radius, double minor_radius) {
    if (around < 3 || tube < 3) throw Error(ErrorCode::InvalidArgument, "torus needs at least 3 x 3 vertices");
    std::vector<Vec3> v;
    v.reserve(static_cast<std::size_t>(around * tube));
    for (int i = 0; i < around; ++i) {
        const double u = 2.0 * kPi * i / around;
        for (int j = 0; j < tube; ++j) {
            const double w = 2.0 * kPi * j / tube;
            const double r = major_radius + minor_radius * std::cos(w);
            v.emplace_back(r * std::cos(u), r * std::sin(u), minor_radius * std::sin(w));
        }
    }
    std::vector<Face> f;
    const auto id = [&](int i, int j) { return ((i + around) % around) * tube + (j + tube) % tube; };
    for (int i = 0; i < around; ++i) {
        for (int j = 0; j < tube; ++j) {
            f.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            f.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    return TriMesh(std::move(v), std::move(f));
}

TriMesh grid(int nx, int ny) {
    if (nx < 2 || ny < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least 2 x 2 vertices");
    std::vector<Vec3> v;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) v.emplace_back(static_cast<double>(i) / (nx - 1), static_cast<double>(j) / (ny - 1), 0.0);
    }
    std::vector<Face> f;
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            const int a = j * nx + i;
            f.push_back({a, a + 1, a + nx + 1});
            f.push_back({a, a + nx + 1, a + nx});
        }
    }
    return TriMesh(std::move(v), std::move(f));
}

std::string_view to_string(ShapeFamily family) {
    switch (family) {
        case ShapeFamily::Sphere: return "sphere";
        case ShapeFamily::Torus: return "torus";
        case ShapeFamily::Superellipsoid: return "superellipsoid";
        case ShapeFamily::Grid: return "grid";
    }
    return "?";
}

TriMesh random_cover(std::uint64_t seed, ShapeFamily* family_out) {
    Rng rng(seed);
    const auto family = static_cast<ShapeFamily>(rng.index(4));
    if (family_out) *family_out = family;
    const auto bumps = random_bumps(rng, 4, 0.12);
    // Sample positions are jittered inside the surface parametrisation so the
    // tessellation is irregular while the surface itself stays smooth.
    constexpr double kJitter = 0.3;  // fraction of the sample spacing
    std::vector<Vec3> pos;
    TriMesh base;

    switch (family) {
        case ShapeFamily::Sphere:
        case ShapeFamily::Superellipsoid: {
            const int level = rng.index(2) == 0 ? 3 : 4;
            base = icosphere(level);
            const double spacing = 1.1 / (1 << level);  // unit-sphere edge length at this level
            const Vec3 axes(rng.uniform(0.6, 1.4), rng.uniform(0.6, 1.4), rng.uniform(0.6, 1.4));
            const double e1 = rng.uniform(0.5, 1.5);
            const double e2 = rng.uniform(0.5, 1.5);
            for (const auto& p0 : base.vertices()) {
                Vec3 g(rng.normal(), rng.normal(), rng.normal());
                g -= g.dot(p0) * p0;
                const Vec3 p = (p0 + kJitter * spacing * g / std::sqrt(2.0)).normalized();
                Vec3 q = p;
                if (family == ShapeFamily::Superellipsoid) {
                    const double lat = std::asin(std::clamp(p.z(), -1.0, 1.0));
                    const double lon = std::atan2(p.y(), p.x());
                    q = Vec3(signed_power(std::cos(lat), e1) * signed_power(std::cos(lon), e2),
                             signed_power(std::cos(lat), e1) * signed_power(std::sin(lon), e2), signed_power(std::sin(lat), e1));
                }
                q = q.cwiseProduct(axes);
                pos.push_back(q * (1.0 + bump_field(bumps, p)));
            }
            break;
        }
        case ShapeFamily::Torus: {
            const int around = 32 + static_cast<int>(rng.index(33));
            const int tube = 16 + static_cast<int>(rng.index(17));
            const double minor = rng.uniform(0.25, 0.5);
            base = torus(around, tube, 1.0, minor);
            for (int i = 0; i < around; ++i) {
                for (int j = 0; j < tube; ++j) {
                    const double u = 2.0 * kPi * (i + kJitter * rng.uniform(-1.0, 1.0)) / around;
                    const double w = 2.0 * kPi * (j + kJitter * rng.uniform(-1.0, 1.0)) / tube;
                    const Vec3 tube_center(std::cos(u), std::sin(u), 0.0);
                    const Vec3 outward = std::cos(w) * tube_center + std::sin(w) * Vec3::UnitZ();
                    const Vec3 p = tube_center + minor * outward;
                    pos.push_back(p + outward * (0.5 * bump_field(bumps, p)));
                }
            }
            break;
        }
        case ShapeFamily::Grid: {
            const int nx = 24 + static_cast<int>(rng.index(27));
            const int ny = 24 + static_cast<int>(rng.index(27));
            base = grid(nx, ny);
            for (const auto& p : base.vertices()) {
                const double x = std::clamp(p.x() + kJitter * rng.uniform(-1.0, 1.0) / (nx - 1), 0.0, 1.0);
                const double y = std::clamp(p.y() + kJitter * rng.uniform(-1.0, 1.0) / (ny - 1), 0.0, 1.0);
                const Vec3 q(2.0 * x - 1.0, 2.0 * y - 1.0, 0.0);
                pos.push_back(Vec3(q.x(), q.y(), 3.0 * bump_field(bumps, q)));
            }
            break;
        }
    }

    // Small off-surface noise relative to the mean edge length.
    double edge_sum = 0.0;
    for (const auto& e : base.connectivity().edges) {
        edge_sum += (pos[static_cast<std::size_t>(e.a)] - pos[static_cast<std::size_t>(e.b)]).norm();
    }
    const double sigma = 0.002 * edge_sum / static_cast<double>(base.edge_count());
    for (auto& p : pos) p += sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
    return normalize(base.with_vertices(std::move(pos)));
}

}  // namespace meshsteg
