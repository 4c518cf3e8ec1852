#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rastergen/model.hpp"

namespace rastergen {

constexpr int kQuantGroup = 128;

// Weight matrix stored as packed 4-bit codes with one asymmetric affine
// (scale, zero_point) pair per group of 128 consecutive elements along the
// input dimension. Rows pack independently; a short final group is
// quantized on its own rather than padded.
struct QuantizedTensor {
    int64_t rows = 0;
    int64_t cols = 0;
    std::vector<uint8_t> packed;      // rows * ceil(cols/2); low nibble = even col
    std::vector<float> scales;        // rows * groups_per_row
    std::vector<uint8_t> zero_points; // same shape as scales, values in [0,15]

    int64_t groups_per_row() const { return (cols + kQuantGroup - 1) / kQuantGroup; }
    int64_t packed_row_bytes() const { return (cols + 1) / 2; }

    // Stored bytes (codes + per-group metadata).
    int64_t storage_bytes() const {
        return static_cast<int64_t>(packed.size()) +
               static_cast<int64_t>(scales.size()) * sizeof(float) +
               static_cast<int64_t>(zero_points.size());
    }

    bool operator==(const QuantizedTensor&) const = default;
};

QuantizedTensor quantize_groupwise(std::span<const float> w, int64_t rows, int64_t cols);
std::vector<float> dequantize(const QuantizedTensor& qt);

// dequantized value of a single element (tests and spot checks)
float dequantize_at(const QuantizedTensor& qt, int64_t r, int64_t c);

// Parameters with every per-layer weight matrix quantized; embeddings,
// output projection and norm gains stay full precision.
struct QuantizedParameters {
    struct QLayer {
        QuantizedTensor wq, wk, wv, wo, w_gate, w_up, w_down;
        std::vector<float> attn_norm, ffn_norm;
    };
    std::vector<float> embedding;
    std::vector<QLayer> layers;
    std::vector<float> final_norm;
    std::vector<float> output;

    struct QTensorRef {
        std::string name;
        QuantizedTensor* tensor;
    };
    std::vector<QTensorRef> quantized_refs();
};

QuantizedParameters quantize_parameters(const Parameters& p, const ModelConfig& cfg);

// Bytes the quantized per-layer weights occupy vs what 16-bit storage would.
struct FootprintReport {
    int64_t quantized_bytes = 0;
    int64_t fp16_bytes = 0;
    double reduction() const {
        return 1.0 - static_cast<double>(quantized_bytes) / static_cast<double>(fp16_bytes);
    }
};
FootprintReport weight_footprint(const QuantizedParameters& qp, const ModelConfig& cfg);

// Forward pass with dequantize-on-use weights; computation graph is
// otherwise identical to forward_with_cache.
std::vector<float> quantized_forward(const QuantizedParameters& qp, const ModelConfig& cfg,
                                     StaticKVCache& cache, std::span<const TokenId> tokens,
                                     int64_t window_start, const StaticMaskView& view);

} // namespace rastergen
