#include "rastergen/kvcache.hpp"

#include <algorithm>

namespace rastergen {

StaticKVCache allocate_kv_cache(int num_layers, int64_t capacity, int kv_heads,
                                int head_dim) {
    require(capacity >= 1, ErrorKind::invalid_argument, "cache capacity must be >= 1");
    require(num_layers >= 1 && kv_heads >= 1 && head_dim >= 1,
            ErrorKind::invalid_argument, "bad cache dimensions");
    StaticKVCache cache;
    cache.num_layers = num_layers;
    cache.kv_heads = kv_heads;
    cache.head_dim = head_dim;
    cache.capacity = capacity;
    const size_t arena = static_cast<size_t>(capacity) * kv_heads * head_dim;
    cache.keys.resize(num_layers);
    cache.values.resize(num_layers);
    for (int l = 0; l < num_layers; ++l) {
        cache.keys[l].assign(arena, 0.0f);
        cache.values[l].assign(arena, 0.0f);
    }
    return cache;
}

void StaticKVCache::write_window(int layer, int64_t start, std::span<const float> k,
                                 std::span<const float> v) {
    const int stride = row_stride();
    require(k.size() == v.size() && k.size() % stride == 0,
            ErrorKind::invalid_argument, "window payload size mismatch");
    const int64_t len = static_cast<int64_t>(k.size()) / stride;
    if (start < 0 || start + len > capacity) {
        fail(ErrorKind::capacity,
             "window [" + std::to_string(start) + ", " + std::to_string(start + len) +
                 ") exceeds cache capacity " + std::to_string(capacity));
    }
    std::copy(k.begin(), k.end(), keys[layer].begin() + start * stride);
    std::copy(v.begin(), v.end(), values[layer].begin() + start * stride);
}

void StaticKVCache::commit(int64_t n) {
    require(n >= 0 && committed + n <= capacity, ErrorKind::invalid_argument,
            "commit beyond capacity");
    committed += n;
}

void StaticKVCache::rollback(int64_t n) {
    require(n >= 0 && n <= committed, ErrorKind::invalid_argument,
            "rollback beyond committed length");
    committed -= n;
}

StaticKVCache::ArenaFingerprint StaticKVCache::fingerprint() const {
    ArenaFingerprint fp;
    for (int l = 0; l < num_layers; ++l) {
        fp.ptrs.push_back(keys[l].data());
        fp.ptrs.push_back(values[l].data());
        fp.caps.push_back(keys[l].capacity());
        fp.caps.push_back(values[l].capacity());
    }
    return fp;
}

CausalMask precompute_causal_mask(int64_t capacity) {
    require(capacity >= 1, ErrorKind::invalid_argument, "mask capacity must be >= 1");
    CausalMask m;
    m.capacity = capacity;
    m.allow.assign(static_cast<size_t>(capacity) * capacity, 0);
    for (int64_t i = 0; i < capacity; ++i) {
        std::fill_n(m.allow.begin() + i * capacity, i + 1, uint8_t{1});
    }
    return m;
}

StaticMaskView mask_view(const CausalMask& mask, int64_t window_start,
                         int64_t window_len) {
    require(window_start >= 0 && window_len >= 0 &&
                window_start + window_len <= mask.capacity,
            ErrorKind::invalid_argument, "mask view outside capacity");
    return {&mask, window_start, window_len};
}

} // namespace rastergen
