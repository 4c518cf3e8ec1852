#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rastergen/kvcache.hpp"
#include "rastergen/vocab.hpp"

namespace rastergen {

struct ModelConfig {
    int vocab_size = 0;
    int hidden_size = 0;
    int intermediate_size = 0;
    int num_heads = 0;
    int num_kv_heads = 0;
    int num_layers = 0;
    int max_seq_len = 4096;
    float rope_base = 10000.0f;
    // Paper-scale presets tie the output projection to the embedding so the
    // advertised parameter counts hold; desk presets keep it untied.
    bool tied_output = false;

    int head_dim() const { return hidden_size / num_heads; }
    int kv_dim() const { return num_kv_heads * head_dim(); }

    void validate() const;

    // "2B", "7B" (paper scale), "tiny", "small" (desk scale); "toy" is a
    // 16-vocab model for distribution tests.
    static ModelConfig preset(std::string_view name);
};

struct LayerParams {
    std::vector<float> wq, wk, wv, wo;        // [out x hidden]
    std::vector<float> w_gate, w_up, w_down;  // gate/up: [inter x hidden], down: [hidden x inter]
    std::vector<float> attn_norm, ffn_norm;   // [hidden]
};

struct Parameters {
    std::vector<float> embedding;  // [vocab x hidden]
    std::vector<LayerParams> layers;
    std::vector<float> final_norm; // [hidden]
    std::vector<float> output;     // [vocab x hidden]; empty when tied

    struct TensorRef {
        std::string name;
        std::vector<float>* data;
        int64_t rows;
        int64_t cols; // 0 for 1-D gains
    };
    // Fixed-order enumeration of every tensor (drives optimizer, checkpoint,
    // quantization).
    std::vector<TensorRef> tensor_refs(const ModelConfig& cfg);
};

Parameters init_params(const ModelConfig& cfg, uint64_t seed);
Parameters alloc_params_like(const ModelConfig& cfg); // zero-filled, same shapes

int64_t param_count(const ModelConfig& cfg);

StaticKVCache allocate_cache(const ModelConfig& cfg, int64_t capacity = -1);

// Per-layer weight pointers the forward pass consumes; lets full-precision
// and dequantize-on-use sources share one code path.
struct LayerWeights {
    const float* wq;
    const float* wk;
    const float* wv;
    const float* wo;
    const float* w_gate;
    const float* w_up;
    const float* w_down;
    const float* attn_norm;
    const float* ffn_norm;
};

struct WeightSource {
    const float* embedding;
    const float* final_norm;
    const float* output; // null when tied (embedding reused)
    std::function<LayerWeights(int layer)> layer;
};

WeightSource weights_of(const Parameters& p);

// Runs the decoder over `tokens` occupying absolute positions
// [window_start, window_start+len), writing K/V into the cache and attending
// to committed history plus the causal window per the mask view. Returns
// logits [len x vocab]. Does not move the cache cursor.
std::vector<float> forward_with_cache(const WeightSource& w, const ModelConfig& cfg,
                                      StaticKVCache& cache,
                                      std::span<const TokenId> tokens,
                                      int64_t window_start, const StaticMaskView& view);

// Full-sequence forward through a scratch cache (window_start 0).
std::vector<float> forward_logits(const Parameters& params, const ModelConfig& cfg,
                                  std::span<const TokenId> tokens,
                                  const StaticMaskView& view);

} // namespace rastergen
