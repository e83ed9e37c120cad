#include "meshsteg/embedders.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "meshsteg/error.hpp"
#include "meshsteg/rng.hpp"

namespace meshsteg {

namespace {

// Keeps re-binned radii and slot fractions away from boundaries they must not cross.
constexpr double kEdgeGuard = 1e-9;

struct RadialFrame {
    std::vector<double> radius;
    double r_min = 0.0;
    double r_max = 0.0;
    int min_vertex = -1;
    int max_vertex = -1;
};

RadialFrame radial_frame(const TriMesh& mesh, const Vec3& center) {
    RadialFrame f;
    f.radius.resize(mesh.vertex_count());
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
        f.radius[i] = (mesh.vertices()[i] - center).norm();
        if (f.min_vertex < 0 || f.radius[i] < f.r_min) {
            f.r_min = f.radius[i];
            f.min_vertex = static_cast<int>(i);
        }
        if (f.max_vertex < 0 || f.radius[i] > f.r_max) {
            f.r_max = f.radius[i];
            f.max_vertex = static_cast<int>(i);
        }
    }
    return f;
}

int bin_of(double r, const RadialFrame& f, int bins) {
    const double span = f.r_max - f.r_min;
    const auto b = static_cast<int>(std::floor((r - f.r_min) / span * bins));
    return std::clamp(b, 0, bins - 1);
}

std::vector<std::vector<int>> bin_members(const RadialFrame& f, int bins) {
    std::vector<std::vector<int>> members(static_cast<std::size_t>(bins));
    for (std::size_t i = 0; i < f.radius.size(); ++i) {
        members[static_cast<std::size_t>(bin_of(f.radius[i], f, bins))].push_back(static_cast<int>(i));
    }
    return members;
}

// Equal-count radial groups: vertices sorted by (radius, index) and cut into
// `bins` runs. Each group is normalised over its own radius range, so its
// extreme vertices sit at 0 and 1 and are fixed points of the power map.
struct RadialGroup {
    std::vector<int> members;
    double lo = 0.0;
    double hi = 0.0;
};

std::vector<RadialGroup> equal_count_groups(const RadialFrame& f, int bins) {
    const std::size_t n = f.radius.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&f](int a, int b) {
        const double ra = f.radius[static_cast<std::size_t>(a)];
        const double rb = f.radius[static_cast<std::size_t>(b)];
        return ra != rb ? ra < rb : a < b;
    });
    std::vector<RadialGroup> groups(static_cast<std::size_t>(bins));
    const auto nb = static_cast<std::size_t>(bins);
    for (std::size_t g = 0; g < nb; ++g) {
        RadialGroup& group = groups[g];
        group.members.assign(order.begin() + static_cast<std::ptrdiff_t>(g * n / nb),
                             order.begin() + static_cast<std::ptrdiff_t>((g + 1) * n / nb));
        if (group.members.empty()) continue;
        group.lo = f.radius[static_cast<std::size_t>(group.members.front())];
        group.hi = f.radius[static_cast<std::size_t>(group.members.back())];
    }
    return groups;
}

void check_bits(const Bits& bits) {
    for (auto b : bits) {
        if (b > 1) throw Error(ErrorCode::InvalidArgument, "payload entries must be 0 or 1");
    }
}

// Moves vertex i radially (about center) to radius new_r.
Vec3 at_radius(const Vec3& v, const Vec3& center, double r, double new_r) {
    if (!(r > 0.0)) return v;
    return center + (v - center) * (new_r / r);
}

double max_displacement(const TriMesh& a, const std::vector<Vec3>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) m = std::max(m, (a.vertices()[i] - b[i]).norm());
    return m;
}

void assert_bound(const EmbedReport& report, const char* variant) {
    // Small slack for the floating-point round trip through positions.
    if (report.max_displacement > report.displacement_bound * (1.0 + 1e-9) + 1e-15) {
        throw Error(ErrorCode::InvalidArgument, std::string(variant) + " displacement bound violated");
    }
}

}  // namespace

std::string_view to_string(EmbedVariant v) {
    switch (v) {
        case EmbedVariant::ChoMean: return "cho";
        case EmbedVariant::YangHist: return "yang";
        case EmbedVariant::ChaoLayers: return "chao";
    }
    return "?";
}

EmbedVariant parse_embed_variant(std::string_view name) {
    if (name == "cho" || name == "cho_mean") return EmbedVariant::ChoMean;
    if (name == "yang" || name == "yang_hist") return EmbedVariant::YangHist;
    if (name == "chao" || name == "chao_layers") return EmbedVariant::ChaoLayers;
    throw Error(ErrorCode::InvalidArgument, "unknown embedding variant '" + std::string(name) + "'");
}

std::string EmbedParams::describe() const {
    std::ostringstream out;
    out.precision(17);
    out << "variant=" << to_string(variant) << ";bits=" << payload.size();
    switch (variant) {
        case EmbedVariant::ChoMean: out << ";alpha=" << alpha << ";delta_k=" << delta_k; break;
        case EmbedVariant::YangHist: out << ";K=" << bins << ";n_thr=" << n_thr; break;
        case EmbedVariant::ChaoLayers: out << ";layers=" << layers << ";intervals=" << intervals; break;
    }
    out << ";seed=" << seed;
    return out.str();
}

std::size_t yang_capacity(int bins) { return bins < 2 ? 0 : static_cast<std::size_t>((bins - 2) / 2); }

std::size_t chao_capacity(std::size_t vertex_count, int layers) {
    if (vertex_count <= 3 || layers < 1) return 0;
    return (vertex_count - 3) * static_cast<std::size_t>(layers);
}

Bits random_payload(std::size_t length, std::uint64_t seed) {
    Rng rng(seed);
    Bits bits(length);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next() >> 63);
    return bits;
}

std::string bits_to_string(const Bits& bits) {
    std::string s;
    s.reserve(bits.size());
    for (auto b : bits) s.push_back(b ? '1' : '0');
    return s;
}

std::uint64_t payload_hash(const Bits& bits) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : bits) {
        h ^= static_cast<std::uint64_t>(b ? '1' : '0');
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Mean-shift of normalised radial distances per equal-count radial group.

EmbedResult cho_mean_embed(const TriMesh& mesh, const EmbedParams& params) {
    check_bits(params.payload);
    if (!(params.alpha > 0.0 && params.alpha < 0.5)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 0.5)");
    if (!(params.delta_k > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta_k must be positive");

    EmbedResult result;
    result.key.center = mesh.centroid();
    const std::size_t nbits = params.payload.size();
    if (nbits == 0) {
        result.stego = mesh;
        return result;
    }
    // Each group needs a movable vertex between its two fixed extremes.
    if (3 * nbits > mesh.vertex_count()) {
        throw Error(ErrorCode::CapacityExceeded, std::to_string(nbits) + " bits need at least " +
                                                     std::to_string(3 * nbits) + " vertices");
    }
    const Vec3& c = result.key.center;
    const RadialFrame frame = radial_frame(mesh, c);
    if (!(frame.r_max > frame.r_min)) throw Error(ErrorCode::DegenerateMesh, "all vertices are equidistant from the centre");

    const int nbins = static_cast<int>(nbits);
    const auto groups = equal_count_groups(frame, nbins);
    std::vector<Vec3> out = mesh.vertices();
    double width = 0.0;

    for (int b = 0; b < nbins; ++b) {
        const RadialGroup& group = groups[static_cast<std::size_t>(b)];
        const auto& idx = group.members;
        const double lo = group.lo;
        const double span = group.hi - group.lo;
        width = std::max(width, span);
        if (idx.size() < 3 || !(span > 0.0)) {
            result.report.failed_bits.push_back(b);
            continue;
        }
        std::vector<double> rho;
        rho.reserve(idx.size());
        for (int i : idx) rho.push_back(std::clamp((frame.radius[static_cast<std::size_t>(i)] - lo) / span, 0.0, 1.0));

        const bool one = params.payload[static_cast<std::size_t>(b)] != 0;
        const auto mean_at = [&rho](double k) {
            double sum = 0.0;
            for (double r : rho) sum += std::pow(r, k);
            return sum / static_cast<double>(rho.size());
        };
        const auto satisfied = [&](double m) { return one ? m > 0.5 + params.alpha : m < 0.5 - params.alpha; };

        double k = 1.0;
        bool ok = satisfied(mean_at(k));
        // bit 1 pushes mass up (k < 1), bit 0 pushes it down (k > 1)
        const long max_steps = one ? static_cast<long>(std::ceil(1.0 / params.delta_k)) : 1000000L;
        for (long step = 0; !ok && step < max_steps; ++step) {
            k += one ? -params.delta_k : params.delta_k;
            if (!(k > 0.0)) break;
            ok = satisfied(mean_at(k));
        }
        if (!ok) {
            result.report.failed_bits.push_back(b);
            continue;
        }
        for (std::size_t m = 0; m < idx.size(); ++m) {
            double mapped = std::pow(rho[m], k);
            if (mapped == rho[m]) continue;
            mapped = std::clamp(mapped, kEdgeGuard, 1.0 - kEdgeGuard);
            const auto ui = static_cast<std::size_t>(idx[m]);
            out[ui] = at_radius(mesh.vertices()[ui], c, frame.radius[ui], lo + mapped * span);
        }
    }
    result.report.bin_width = width;
    result.report.displacement_bound = width;
    result.report.max_displacement = max_displacement(mesh, out);
    assert_bound(result.report, "cho");
    result.stego = mesh.with_vertices(std::move(out));
    return result;
}

std::vector<double> cho_bin_means(const TriMesh& stego, std::size_t bit_count, const Vec3& center) {
    std::vector<double> means(bit_count, 0.0);
    if (bit_count == 0 || bit_count > stego.vertex_count()) return means;
    const RadialFrame frame = radial_frame(stego, center);
    const auto groups = equal_count_groups(frame, static_cast<int>(bit_count));
    for (std::size_t b = 0; b < bit_count; ++b) {
        const RadialGroup& group = groups[b];
        const double span = group.hi - group.lo;
        if (group.members.empty() || !(span > 0.0)) continue;
        double sum = 0.0;
        for (int i : group.members) sum += std::clamp((frame.radius[static_cast<std::size_t>(i)] - group.lo) / span, 0.0, 1.0);
        means[b] = sum / static_cast<double>(group.members.size());
    }
    return means;
}

Bits cho_mean_decode(const TriMesh& stego, std::size_t bit_count, const EmbedKey& key) {
    Bits bits;
    for (double m : cho_bin_means(stego, bit_count, key.center)) bits.push_back(m > 0.5 ? 1 : 0);
    return bits;
}

// ---------------------------------------------------------------------------
// Radial histogram: bit i is the sign of count(2i-1) - count(2i). The first
// and last bins are never paired, so R_min and R_max survive embedding.

EmbedResult yang_hist_embed(const TriMesh& mesh, const EmbedParams& params) {
    check_bits(params.payload);
    if (params.bins < 4) throw Error(ErrorCode::InvalidArgument, "yang embedding needs at least 4 bins");
    if (params.n_thr < 1) throw Error(ErrorCode::InvalidArgument, "n_thr must be positive");
    const std::size_t nbits = params.payload.size();
    if (nbits > yang_capacity(params.bins)) {
        throw Error(ErrorCode::CapacityExceeded, std::to_string(nbits) + " bits exceed capacity " +
                                                     std::to_string(yang_capacity(params.bins)) + " for K=" +
                                                     std::to_string(params.bins));
    }
    EmbedResult result;
    result.key.center = mesh.centroid();
    if (nbits == 0) {
        result.stego = mesh;
        return result;
    }
    const Vec3& c = result.key.center;
    const RadialFrame frame = radial_frame(mesh, c);
    if (!(frame.r_max > frame.r_min)) throw Error(ErrorCode::DegenerateMesh, "all vertices are equidistant from the centre");
    const int K = params.bins;
    const double width = (frame.r_max - frame.r_min) / K;
    const double gap = 1e-3 * width;
    auto members = bin_members(frame, K);

    std::size_t smallest = 0;
    for (const auto& m : members) {
        if (!m.empty() && (smallest == 0 || m.size() < smallest)) smallest = m.size();
    }
    const long margin = std::max<long>(1, std::min<long>(params.n_thr, static_cast<long>(smallest)));

    std::vector<Vec3> out = mesh.vertices();
    for (std::size_t bit = 0; bit < nbits; ++bit) {
        const auto a = static_cast<std::size_t>(2 * bit + 1);
        const std::size_t b = a + 1;
        const double boundary = frame.r_min + static_cast<double>(b) * width;
        auto& low = members[a];
        auto& high = members[b];
        if (low.empty() && high.empty()) {
            result.report.failed_bits.push_back(static_cast<int>(bit));
            continue;
        }
        const bool one = params.payload[bit] != 0;
        auto& donor = one ? high : low;  // bit 1 wants the lower bin fuller
        const long diff = static_cast<long>(one ? low.size() : high.size()) - static_cast<long>(donor.size());
        long moves = diff >= margin ? 0 : (margin - diff + 1) / 2;
        moves = std::min<long>(moves, static_cast<long>(donor.size()));

        // Donor vertices closest to the shared boundary go first.
        std::sort(donor.begin(), donor.end(), [&](int x, int y) {
            const double dx = std::abs(frame.radius[static_cast<std::size_t>(x)] - boundary);
            const double dy = std::abs(frame.radius[static_cast<std::size_t>(y)] - boundary);
            return dx != dy ? dx < dy : x < y;
        });
        for (long m = 0; m < moves; ++m) {
            const auto i = static_cast<std::size_t>(donor[static_cast<std::size_t>(m)]);
            const double r = frame.radius[i];
            // Reflect across the boundary, at least `gap` past it.
            const double offset = std::max(std::abs(r - boundary), gap);
            const double new_r = one ? std::max(boundary - offset, boundary - width + gap)
                                     : std::min(boundary + offset, boundary + width - gap);
            out[i] = at_radius(mesh.vertices()[i], c, r, new_r);
        }
        auto& receiver = one ? low : high;
        receiver.insert(receiver.end(), donor.begin(), donor.begin() + moves);
        donor.erase(donor.begin(), donor.begin() + moves);
        const long final_diff = static_cast<long>(receiver.size()) - static_cast<long>(donor.size());
        if (final_diff <= 0) result.report.failed_bits.push_back(static_cast<int>(bit));
    }
    result.report.bin_width = width;
    result.report.displacement_bound = 2.0 * width;
    result.report.max_displacement = max_displacement(mesh, out);
    assert_bound(result.report, "yang");
    result.stego = mesh.with_vertices(std::move(out));
    return result;
}

Bits yang_hist_decode(const TriMesh& stego, std::size_t bit_count, int bins, const EmbedKey& key) {
    if (bit_count > yang_capacity(bins)) throw Error(ErrorCode::CapacityExceeded, "bit count exceeds histogram capacity");
    Bits bits(bit_count, 0);
    if (bit_count == 0) return bits;
    const RadialFrame frame = radial_frame(stego, key.center);
    if (!(frame.r_max > frame.r_min)) return bits;
    std::vector<long> counts(static_cast<std::size_t>(bins), 0);
    for (double r : frame.radius) ++counts[static_cast<std::size_t>(bin_of(r, frame, bins))];
    for (std::size_t bit = 0; bit < bit_count; ++bit) bits[bit] = counts[2 * bit + 1] > counts[2 * bit + 2] ? 1 : 0;
    return bits;
}

// ---------------------------------------------------------------------------
// Layered parity of sub-slot indices along the principal axis.

namespace {

struct AxisFrame {
    std::vector<double> projection;
    double p_min = 0.0;
    double span = 0.0;
    std::vector<int> carriers;
};

AxisFrame axis_frame(const TriMesh& mesh, const EmbedKey& key) {
    AxisFrame f;
    f.projection.resize(mesh.vertex_count());
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i) f.projection[i] = mesh.vertices()[i].dot(key.axis);
    f.p_min = f.projection[static_cast<std::size_t>(key.references[0])];
    f.span = f.projection[static_cast<std::size_t>(key.references[1])] - f.p_min;
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
        const int v = static_cast<int>(i);
        if (v != key.references[0] && v != key.references[1] && v != key.references[2]) f.carriers.push_back(v);
    }
    return f;
}

// Bits stored by carrier j: payload entries j, j + n, j + 2n, ... (layer order).
std::vector<std::uint8_t> carrier_digits(const Bits& payload, std::size_t j, std::size_t carriers) {
    std::vector<std::uint8_t> digits;
    for (std::size_t k = j; k < payload.size(); k += carriers) digits.push_back(payload[k]);
    return digits;
}

}  // namespace

EmbedResult chao_layer_embed(const TriMesh& mesh, const EmbedParams& params) {
    check_bits(params.payload);
    if (params.layers < 1 || params.layers > 10) throw Error(ErrorCode::InvalidArgument, "layers must lie in 1..10");
    if (params.intervals < 1) throw Error(ErrorCode::InvalidArgument, "intervals must be positive");
    if (mesh.vertex_count() <= 3) throw Error(ErrorCode::CapacityExceeded, "layered embedding needs more than 3 vertices");
    const std::size_t capacity = chao_capacity(mesh.vertex_count(), params.layers);
    if (params.payload.size() > capacity) {
        throw Error(ErrorCode::CapacityExceeded, std::to_string(params.payload.size()) + " bits exceed capacity " +
                                                     std::to_string(capacity));
    }

    EmbedResult result;
    const Vec3 c = mesh.centroid();
    result.key.center = c;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Vec3& v : mesh.vertices()) cov += (v - c) * (v - c).transpose();
    cov /= static_cast<double>(mesh.vertex_count());
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const double top = eig.eigenvalues()(2);
    if (!(top > 1e-14 * std::max(1.0, cov.trace()))) {
        throw Error(ErrorCode::DegenerateAxis, "vertex covariance has no principal direction");
    }
    Vec3 axis = eig.eigenvectors().col(2).normalized();
    for (int k = 0; k < 3; ++k) {
        if (std::abs(axis(k)) > 1e-12) {
            if (axis(k) < 0.0) axis = -axis;
            break;
        }
    }
    result.key.axis = axis;

    std::vector<int> order(mesh.vertex_count());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> proj(mesh.vertex_count());
    for (std::size_t i = 0; i < proj.size(); ++i) proj[i] = mesh.vertices()[i].dot(axis);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return proj[static_cast<std::size_t>(a)] < proj[static_cast<std::size_t>(b)]; });
    result.key.references = {order.front(), order.back(), order[order.size() - 2]};

    const AxisFrame frame = axis_frame(mesh, result.key);
    if (!(frame.span > 0.0)) throw Error(ErrorCode::DegenerateAxis, "zero extent along the principal axis");
    const double slot_width = frame.span / params.intervals;
    result.report.bin_width = slot_width;
    result.report.displacement_bound = slot_width;

    std::vector<Vec3> out = mesh.vertices();
    const std::size_t nc = frame.carriers.size();
    for (std::size_t j = 0; j < nc && j < params.payload.size(); ++j) {
        const auto digits = carrier_digits(params.payload, j, nc);
        const auto vi = static_cast<std::size_t>(frame.carriers[j]);
        const double t = (frame.projection[vi] - frame.p_min) / frame.span;
        const double scaled = t * params.intervals;
        const double slot = std::clamp(std::floor(scaled), 0.0, static_cast<double>(params.intervals - 1));
        const double frac = scaled - slot;

        double index = 0.0;
        for (auto d : digits) index = 2.0 * index + d;
        const double sub = std::ldexp(1.0, -static_cast<int>(digits.size()));
        const double lo = index * sub;
        const double hi = lo + sub;
        double target = frac;
        if (frac < lo + kEdgeGuard || frac > hi - kEdgeGuard) {
            const double inset = 0.01 * sub;
            target = std::clamp(frac, lo + inset, hi - inset);
        }
        if (target == frac) continue;
        const double new_t = (slot + target) / params.intervals;
        out[vi] = mesh.vertices()[vi] + (new_t - t) * frame.span * axis;
    }
    result.report.max_displacement = max_displacement(mesh, out);
    assert_bound(result.report, "chao");
    result.stego = mesh.with_vertices(std::move(out));
    return result;
}

Bits chao_layer_decode(const TriMesh& stego, std::size_t bit_count, int layers, int intervals, const EmbedKey& key) {
    if (bit_count > chao_capacity(stego.vertex_count(), layers)) {
        throw Error(ErrorCode::CapacityExceeded, "bit count exceeds layered capacity");
    }
    for (int r : key.references) {
        if (r < 0 || static_cast<std::size_t>(r) >= stego.vertex_count()) {
            throw Error(ErrorCode::InvalidArgument, "embedding key has invalid reference vertices");
        }
    }
    Bits bits(bit_count, 0);
    const AxisFrame frame = axis_frame(stego, key);
    if (!(frame.span > 0.0)) return bits;
    const std::size_t nc = frame.carriers.size();
    for (std::size_t k = 0; k < bit_count; ++k) {
        const std::size_t j = k % nc;
        const auto depth = static_cast<int>(k / nc) + 1;
        const auto vi = static_cast<std::size_t>(frame.carriers[j]);
        const double scaled = (frame.projection[vi] - frame.p_min) / frame.span * intervals;
        const double slot = std::clamp(std::floor(scaled), 0.0, static_cast<double>(intervals - 1));
        const double frac = scaled - slot;
        const auto sub_index = static_cast<long long>(std::floor(std::ldexp(frac, depth)));
        bits[k] = static_cast<std::uint8_t>(sub_index & 1);
    }
    return bits;
}

EmbedResult embed(const TriMesh& mesh, const EmbedParams& params) {
    switch (params.variant) {
        case EmbedVariant::ChoMean: return cho_mean_embed(mesh, params);
        case EmbedVariant::YangHist: return yang_hist_embed(mesh, params);
        case EmbedVariant::ChaoLayers: return chao_layer_embed(mesh, params);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown embedding variant");
}

}  // namespace meshsteg
