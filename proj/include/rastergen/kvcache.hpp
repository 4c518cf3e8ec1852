#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rastergen/common.hpp"

namespace rastergen {

// Pre-allocated per-layer key/value arenas with a committed-length cursor.
// Arenas never grow after allocation; rollback is cursor-only and positions
// at or beyond `committed` are semantically garbage.
struct StaticKVCache {
    int num_layers = 0;
    int kv_heads = 0;
    int head_dim = 0;
    int64_t capacity = 0;
    int64_t committed = 0;

    std::vector<std::vector<float>> keys;   // per layer: capacity * kv_heads * head_dim
    std::vector<std::vector<float>> values;

    int row_stride() const { return kv_heads * head_dim; }

    float* key_row(int layer, int64_t pos) {
        return keys[layer].data() + pos * row_stride();
    }
    const float* key_row(int layer, int64_t pos) const {
        return keys[layer].data() + pos * row_stride();
    }
    float* value_row(int layer, int64_t pos) {
        return values[layer].data() + pos * row_stride();
    }
    const float* value_row(int layer, int64_t pos) const {
        return values[layer].data() + pos * row_stride();
    }

    // Overwrites positions [start, start+len); does not move `committed`.
    void write_window(int layer, int64_t start, std::span<const float> k,
                      std::span<const float> v);

    void commit(int64_t n);
    void rollback(int64_t n);

    // Instrumentation for the zero-allocation invariant.
    struct ArenaFingerprint {
        std::vector<const float*> ptrs;
        std::vector<size_t> caps;
        bool operator==(const ArenaFingerprint&) const = default;
    };
    ArenaFingerprint fingerprint() const;
};

StaticKVCache allocate_kv_cache(int num_layers, int64_t capacity, int kv_heads,
                                int head_dim);

// One capacity x capacity lower-triangular mask, computed once and shared by
// every decode mode; views adjust it with cursors only.
struct CausalMask {
    int64_t capacity = 0;
    std::vector<uint8_t> allow; // capacity * capacity, allow[i*cap+j] = (j <= i)
};

CausalMask precompute_causal_mask(int64_t capacity);

// Rows [window_start, window_start+window_len) of the shared mask, columns
// [0, window_start+window_len). Row i admits column j iff j <= window_start+i.
struct StaticMaskView {
    const CausalMask* mask = nullptr;
    int64_t window_start = 0;
    int64_t window_len = 0;

    bool allows(int64_t row, int64_t col) const {
        return mask->allow[(window_start + row) * mask->capacity + col] != 0;
    }
};

StaticMaskView mask_view(const CausalMask& mask, int64_t window_start,
                         int64_t window_len);

} // namespace rastergen
