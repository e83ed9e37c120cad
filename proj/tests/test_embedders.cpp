#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "meshsteg/embedders.hpp"
#include "meshsteg/error.hpp"
#include "meshsteg/synthetic.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace meshsteg;
using namespace meshsteg::testing;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidArgument;
}

double max_displacement(const TriMesh& a, const TriMesh& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.vertex_count(); ++i) worst = std::max(worst, (a.vertices()[i] - b.vertices()[i]).norm());
    return worst;
}

void check_topology(const TriMesh& cover, const EmbedResult& r) {
    CHECK(r.stego.same_topology(cover));
    CHECK(r.stego.faces() == cover.faces());
    CHECK(r.stego.edge_count() == cover.edge_count());
}

EmbedParams params_for(EmbedVariant v, Bits payload) {
    EmbedParams p;
    p.variant = v;
    p.payload = std::move(payload);
    return p;
}

}  // namespace

TEST_CASE("payload helpers") {
    const Bits a = random_payload(64, 9);
    CHECK(a.size() == 64);
    CHECK(a == random_payload(64, 9));
    CHECK(a != random_payload(64, 10));
    CHECK(std::all_of(a.begin(), a.end(), [](auto b) { return b <= 1; }));
    CHECK(bits_to_string({1, 0, 1}) == "101");
    // FNV-1a of "1".
    CHECK(payload_hash({1}) == ((0xcbf29ce484222325ULL ^ '1') * 0x100000001b3ULL));
    CHECK(parse_embed_variant(to_string(EmbedVariant::YangHist)) == EmbedVariant::YangHist);
    CHECK(parse_embed_variant("chao") == EmbedVariant::ChaoLayers);
    CHECK_THROWS_AS(parse_embed_variant("lsb"), Error);
}

TEST_CASE("empty payload leaves the mesh unchanged") {
    const TriMesh m = random_cover(1);
    for (auto v : {EmbedVariant::ChoMean, EmbedVariant::YangHist, EmbedVariant::ChaoLayers}) {
        const EmbedResult r = embed(m, params_for(v, {}));
        CHECK(r.stego.vertices() == m.vertices());
    }
}

TEST_CASE("cho: margins, round trip, bound, determinism") {
    int clean = 0;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const TriMesh m = random_cover(seed);
        EmbedParams p = params_for(EmbedVariant::ChoMean, random_payload(64, seed));
        const EmbedResult r = cho_mean_embed(m, p);
        check_topology(m, r);
        CHECK(max_displacement(m, r.stego) <= r.report.bin_width * (1 + 1e-9));
        CHECK(r.report.max_displacement <= r.report.displacement_bound * (1 + 1e-9));

        const Bits decoded = cho_mean_decode(r.stego, 64, r.key);
        const auto means = cho_bin_means(r.stego, 64, r.key.center);
        REQUIRE(means.size() == 64);
        for (std::size_t b = 0; b < 64; ++b) {
            if (std::find(r.report.failed_bits.begin(), r.report.failed_bits.end(), static_cast<int>(b)) !=
                r.report.failed_bits.end()) {
                continue;
            }
            CHECK(decoded[b] == p.payload[b]);
            if (p.payload[b]) CHECK(means[b] > 0.5 + p.alpha - 1e-9);
            else CHECK(means[b] < 0.5 - p.alpha + 1e-9);
        }
        if (r.report.failed_bits.empty()) {
            ++clean;
            CHECK(decoded == p.payload);
        }
        CHECK(cho_mean_embed(m, p).stego.vertices() == r.stego.vertices());
    }
    CHECK(clean == 12);
}

TEST_CASE("cho: parameter checks") {
    const TriMesh m = random_cover(2);
    EmbedParams p = params_for(EmbedVariant::ChoMean, random_payload(8, 1));
    p.alpha = 0.6;
    CHECK(code_of([&] { cho_mean_embed(m, p); }) == ErrorCode::InvalidArgument);
    p.alpha = 0.04;
    p.payload = random_payload(m.vertex_count() + 1, 1);
    CHECK(code_of([&] { cho_mean_embed(m, p); }) == ErrorCode::CapacityExceeded);
}

TEST_CASE("yang: capacity and round trips") {
    CHECK(yang_capacity(32) == 15);
    CHECK(yang_capacity(64) == 31);
    CHECK(yang_capacity(128) == 63);
    for (int bins : {32, 128}) {
        for (std::uint64_t seed = 0; seed < 6; ++seed) {
            const TriMesh m = random_cover(100 + seed);
            EmbedParams p = params_for(EmbedVariant::YangHist, random_payload(yang_capacity(bins), seed));
            p.bins = bins;
            const EmbedResult r = yang_hist_embed(m, p);
            check_topology(m, r);
            CHECK(r.report.max_displacement <= 2.0 * r.report.bin_width * (1 + 1e-9));
            const Bits decoded = yang_hist_decode(r.stego, p.payload.size(), bins, r.key);
            const auto counts = radial_histogram(m, bins);
            for (std::size_t b = 0; b < decoded.size(); ++b) {
                const bool failed = std::find(r.report.failed_bits.begin(), r.report.failed_bits.end(),
                                              static_cast<int>(b)) != r.report.failed_bits.end();
                // Only a pair of empty bins may be infeasible.
                const bool empty_pair = counts[2 * b + 1] == 0 && counts[2 * b + 2] == 0;
                CHECK(failed == empty_pair);
                if (!failed) CHECK(decoded[b] == p.payload[b]);
            }
            if (bins == 32) CHECK(r.report.failed_bits.empty());
        }
        const TriMesh m = random_cover(7);
        EmbedParams over = params_for(EmbedVariant::YangHist, random_payload(yang_capacity(bins) + 1, 3));
        over.bins = bins;
        CHECK(code_of([&] { yang_hist_embed(m, over); }) == ErrorCode::CapacityExceeded);
    }
}

TEST_CASE("chao: capacity, round trips, fixed references") {
    CHECK(chao_capacity(100, 10) == 970);
    CHECK(chao_capacity(3, 1) == 0);
    for (int layers : {1, 2, 3}) {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            const TriMesh m = random_cover(200 + seed);
            EmbedParams p = params_for(EmbedVariant::ChaoLayers, random_payload(chao_capacity(m.vertex_count(), layers), seed));
            p.layers = layers;
            const EmbedResult r = chao_layer_embed(m, p);
            check_topology(m, r);
            CHECK(r.report.failed_bits.empty());
            CHECK(chao_layer_decode(r.stego, p.payload.size(), layers, p.intervals, r.key) == p.payload);
            for (int ref : r.key.references) {
                REQUIRE(ref >= 0);
                CHECK(r.stego.vertex(ref) == m.vertex(ref));
            }
            CHECK(r.report.max_displacement <= r.report.bin_width * (1 + 1e-9));
            CHECK(r.key.axis.norm() == doctest::Approx(1.0));
        }
    }
    const TriMesh m = random_cover(9);
    EmbedParams p = params_for(EmbedVariant::ChaoLayers, random_payload(chao_capacity(m.vertex_count(), 2) + 1, 1));
    p.layers = 2;
    CHECK(code_of([&] { chao_layer_embed(m, p); }) == ErrorCode::CapacityExceeded);
    p.layers = 11;
    CHECK(code_of([&] { chao_layer_embed(m, p); }) == ErrorCode::InvalidArgument);

    const TriMesh flat({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}}, {{0, 1, 2}, {2, 3, 4}});
    EmbedParams q = params_for(EmbedVariant::ChaoLayers, {1});
    CHECK(code_of([&] { chao_layer_embed(flat, q); }) == ErrorCode::DegenerateAxis);
}

TEST_CASE("embedding is deterministic for every variant") {
    const TriMesh m = random_cover(31);
    for (auto v : {EmbedVariant::ChoMean, EmbedVariant::YangHist, EmbedVariant::ChaoLayers}) {
        EmbedParams p = params_for(v, random_payload(v == EmbedVariant::YangHist ? 31 : 64, 4));
        CHECK(embed(m, p).stego.vertices() == embed(m, p).stego.vertices());
        CHECK(!p.describe().empty());
    }
}
