#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "meshsteg/mesh.hpp"

namespace meshsteg {

using Bits = std::vector<std::uint8_t>;

enum class EmbedVariant { ChoMean, YangHist, ChaoLayers };

std::string_view to_string(EmbedVariant v);
EmbedVariant parse_embed_variant(std::string_view name);  // "cho", "yang", "chao" (or full names)

struct EmbedParams {
    EmbedVariant variant = EmbedVariant::ChoMean;
    Bits payload;
    double alpha = 0.04;      // cho: bin-mean margin around 0.5
    double delta_k = 0.001;   // cho: power-map exponent step
    int bins = 64;            // yang: histogram bin count K
    int n_thr = 20;           // yang: robustness threshold
    int layers = 1;           // chao: 1..10
    int intervals = 10000;    // chao: slots along the principal axis
    std::uint64_t seed = 0;   // payload generation when none is supplied

    // Compact "key=value;..." rendering for manifests.
    std::string describe() const;
};

// What a decoder needs besides the stego mesh: the embedding centre, and for
// the layered scheme the principal axis and the three reference vertices.
struct EmbedKey {
    Vec3 center = Vec3::Zero();
    Vec3 axis = Vec3::UnitX();
    std::array<int, 3> references{-1, -1, -1};
};

struct EmbedReport {
    std::vector<int> failed_bits;     // bits that could not be enforced
    double max_displacement = 0.0;
    double displacement_bound = 0.0;  // per-variant limit, asserted after each run
    double bin_width = 0.0;           // widest radial group (cho), histogram bin (yang) or slot (chao)
};

struct EmbedResult {
    TriMesh stego;
    EmbedKey key;
    EmbedReport report;
};

std::size_t yang_capacity(int bins);                          // floor((K - 2) / 2)
std::size_t chao_capacity(std::size_t vertex_count, int layers);  // (|V| - 3) * L

Bits random_payload(std::size_t length, std::uint64_t seed);
std::string bits_to_string(const Bits& bits);
std::uint64_t payload_hash(const Bits& bits);  // FNV-1a over the '0'/'1' string

EmbedResult cho_mean_embed(const TriMesh& mesh, const EmbedParams& params);
EmbedResult yang_hist_embed(const TriMesh& mesh, const EmbedParams& params);
EmbedResult chao_layer_embed(const TriMesh& mesh, const EmbedParams& params);
EmbedResult embed(const TriMesh& mesh, const EmbedParams& params);

// Self-consistency decoders for unattacked stegos.
Bits cho_mean_decode(const TriMesh& stego, std::size_t bit_count, const EmbedKey& key);
Bits yang_hist_decode(const TriMesh& stego, std::size_t bit_count, int bins, const EmbedKey& key);
Bits chao_layer_decode(const TriMesh& stego, std::size_t bit_count, int layers, int intervals, const EmbedKey& key);

// Normalised mean of each radial bin, as seen by the cho decoder.
std::vector<double> cho_bin_means(const TriMesh& stego, std::size_t bit_count, const Vec3& center);

}  // namespace meshsteg
