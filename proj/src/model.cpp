#include "rastergen/model.hpp"

#include <cmath>

#include "rastergen/common.hpp"
#include "rastergen/kernels.hpp"

namespace rastergen {

void ModelConfig::validate() const {
    require(vocab_size >= 1 && hidden_size >= 1 && intermediate_size >= 1 &&
                num_heads >= 1 && num_kv_heads >= 1 && num_layers >= 1 &&
                max_seq_len >= 1,
            ErrorKind::invalid_argument, "model config fields must be positive");
    require(hidden_size % num_heads == 0, ErrorKind::invalid_argument,
            "hidden_size must be divisible by num_heads");
    require(num_heads % num_kv_heads == 0, ErrorKind::invalid_argument,
            "num_kv_heads must divide num_heads");
    require(head_dim() % 2 == 0, ErrorKind::invalid_argument,
            "head_dim must be even for rotary positions");
    require(rope_base > 0.0f, ErrorKind::invalid_argument, "rope_base must be positive");
}

ModelConfig ModelConfig::preset(std::string_view name) {
    ModelConfig c;
    if (name == "2B") {
        c = {171385, 2048, 8192, 32, 32, 32, 4096, 10000.0f, true};
    } else if (name == "7B") {
        c = {171385, 4096, 11008, 32, 32, 32, 4096, 10000.0f, true};
    } else if (name == "tiny") {
        c = {1296, 128, 352, 4, 4, 4, 4096, 10000.0f, false};
    } else if (name == "small") {
        c = {1296, 256, 704, 8, 8, 8, 4096, 10000.0f, false};
    } else if (name == "toy") {
        c = {16, 32, 64, 2, 2, 2, 256, 10000.0f, false};
    } else {
        fail(ErrorKind::invalid_argument, "unknown model preset '" + std::string(name) + "'");
    }
    c.validate();
    return c;
}

std::vector<Parameters::TensorRef> Parameters::tensor_refs(const ModelConfig& cfg) {
    std::vector<TensorRef> refs;
    refs.push_back({"embedding", &embedding, cfg.vocab_size, cfg.hidden_size});
    for (size_t l = 0; l < layers.size(); ++l) {
        const std::string p = "layers." + std::to_string(l) + ".";
        LayerParams& lp = layers[l];
        refs.push_back({p + "attn_norm", &lp.attn_norm, cfg.hidden_size, 0});
        refs.push_back({p + "wq", &lp.wq, cfg.hidden_size, cfg.hidden_size});
        refs.push_back({p + "wk", &lp.wk, cfg.kv_dim(), cfg.hidden_size});
        refs.push_back({p + "wv", &lp.wv, cfg.kv_dim(), cfg.hidden_size});
        refs.push_back({p + "wo", &lp.wo, cfg.hidden_size, cfg.hidden_size});
        refs.push_back({p + "ffn_norm", &lp.ffn_norm, cfg.hidden_size, 0});
        refs.push_back({p + "w_gate", &lp.w_gate, cfg.intermediate_size, cfg.hidden_size});
        refs.push_back({p + "w_up", &lp.w_up, cfg.intermediate_size, cfg.hidden_size});
        refs.push_back({p + "w_down", &lp.w_down, cfg.hidden_size, cfg.intermediate_size});
    }
    refs.push_back({"final_norm", &final_norm, cfg.hidden_size, 0});
    if (!cfg.tied_output) {
        refs.push_back({"output", &output, cfg.vocab_size, cfg.hidden_size});
    }
    return refs;
}

Parameters alloc_params_like(const ModelConfig& cfg) {
    cfg.validate();
    Parameters p;
    p.layers.resize(cfg.num_layers);
    for (auto& ref : p.tensor_refs(const_cast<ModelConfig&>(cfg))) {
        const int64_t n = ref.rows * (ref.cols == 0 ? 1 : ref.cols);
        ref.data->assign(static_cast<size_t>(n), 0.0f);
    }
    return p;
}

Parameters init_params(const ModelConfig& cfg, uint64_t seed) {
    Parameters p = alloc_params_like(cfg);
    auto refs = p.tensor_refs(const_cast<ModelConfig&>(cfg));
    for (size_t i = 0; i < refs.size(); ++i) {
        auto& ref = refs[i];
        if (ref.cols == 0) {
            std::fill(ref.data->begin(), ref.data->end(), 1.0f); // norm gains
            continue;
        }
        // one stream per tensor keeps init independent of iteration order
        CounterRng rng(seed, 0x70617261 + i);
        for (float& w : *ref.data) {
            double z;
            do {
                z = rng.next_gaussian();
            } while (std::fabs(z) > 3.0);
            w = static_cast<float>(z * 0.02);
        }
    }
    return p;
}

int64_t param_count(const ModelConfig& cfg) {
    cfg.validate();
    const int64_t h = cfg.hidden_size;
    const int64_t kv = cfg.kv_dim();
    const int64_t inter = cfg.intermediate_size;
    int64_t per_layer = h * h        // wq
                        + 2 * kv * h // wk, wv
                        + h * h      // wo
                        + 2 * inter * h + h * inter // gate, up, down
                        + 2 * h;     // norms
    int64_t total = static_cast<int64_t>(cfg.vocab_size) * h // embedding
                    + cfg.num_layers * per_layer + h;        // final norm
    if (!cfg.tied_output) {
        total += static_cast<int64_t>(cfg.vocab_size) * h;
    }
    return total;
}

StaticKVCache allocate_cache(const ModelConfig& cfg, int64_t capacity) {
    cfg.validate();
    if (capacity < 0) {
        capacity = cfg.max_seq_len;
    }
    return allocate_kv_cache(cfg.num_layers, capacity, cfg.num_kv_heads, cfg.head_dim());
}

WeightSource weights_of(const Parameters& p) {
    WeightSource w;
    w.embedding = p.embedding.data();
    w.final_norm = p.final_norm.data();
    w.output = p.output.empty() ? nullptr : p.output.data();
    w.layer = [&p](int l) {
        const LayerParams& lp = p.layers[l];
        return LayerWeights{lp.wq.data(),     lp.wk.data(),   lp.wv.data(),
                            lp.wo.data(),     lp.w_gate.data(), lp.w_up.data(),
                            lp.w_down.data(), lp.attn_norm.data(), lp.ffn_norm.data()};
    };
    return w;
}

namespace {
constexpr float kNormEps = 1e-5f;

// Masked attention read over the cache: window rows attend to committed
// history plus the in-window causal prefix, all through the mask view.
void attention_from_cache(const StaticKVCache& cache, int layer, const float* q,
                          float* out, int64_t rows, int64_t window_start,
                          const ModelConfig& cfg, const StaticMaskView& view) {
    const int hd = cfg.head_dim();
    const int heads = cfg.num_heads;
    const int group = cfg.num_heads / cfg.num_kv_heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(hd));
    const int kv_stride = cache.row_stride();

#pragma omp parallel for schedule(static)
    for (int64_t idx = 0; idx < rows * heads; ++idx) {
        const int64_t r = idx / heads;
        const int h = static_cast<int>(idx % heads);
        const int kvh = h / group;
        const float* qv = q + (r * heads + h) * hd;
        const int64_t limit = window_start + r + 1; // causal upper bound
        std::vector<float> scores(static_cast<size_t>(limit));
        float maxs = -1e30f;
        for (int64_t j = 0; j < limit; ++j) {
            if (!view.allows(r, j)) {
                scores[j] = -1e30f;
                continue;
            }
            const float* kv = cache.key_row(layer, j) + kvh * hd;
            float s = 0.0f;
            for (int d = 0; d < hd; ++d) {
                s += qv[d] * kv[d];
            }
            scores[j] = s * scale;
            maxs = std::max(maxs, scores[j]);
        }
        float denom = 0.0f;
        for (int64_t j = 0; j < limit; ++j) {
            scores[j] = std::exp(scores[j] - maxs);
            denom += scores[j];
        }
        float* o = out + (r * heads + h) * hd;
        for (int d = 0; d < hd; ++d) {
            o[d] = 0.0f;
        }
        for (int64_t j = 0; j < limit; ++j) {
            const float wgt = scores[j] / denom;
            if (wgt == 0.0f) {
                continue;
            }
            const float* vv = cache.value_row(layer, j) + kvh * hd;
            for (int d = 0; d < hd; ++d) {
                o[d] += wgt * vv[d];
            }
        }
    }
}
} // namespace

std::vector<float> forward_with_cache(const WeightSource& w, const ModelConfig& cfg,
                                      StaticKVCache& cache,
                                      std::span<const TokenId> tokens,
                                      int64_t window_start, const StaticMaskView& view) {
    const int64_t n = static_cast<int64_t>(tokens.size());
    require(n >= 1, ErrorKind::invalid_argument, "empty forward window");
    require(window_start + n <= cfg.max_seq_len, ErrorKind::invalid_argument,
            "input exceeds max_seq_len");
    if (window_start + n > cache.capacity) {
        fail(ErrorKind::capacity, "forward window exceeds cache capacity");
    }
    require(view.window_start == window_start && view.window_len == n,
            ErrorKind::invalid_argument, "mask view inconsistent with window");

    const int64_t h = cfg.hidden_size;
    const int64_t kvd = cfg.kv_dim();
    const int64_t inter = cfg.intermediate_size;

    std::vector<float> x(static_cast<size_t>(n) * h);
    for (int64_t t = 0; t < n; ++t) {
        const TokenId tok = tokens[t];
        require(tok >= 0 && tok < cfg.vocab_size, ErrorKind::invalid_argument,
                "token id outside vocabulary");
        std::copy_n(w.embedding + static_cast<int64_t>(tok) * h, h, x.begin() + t * h);
    }

    std::vector<float> normed(static_cast<size_t>(n) * h);
    std::vector<float> q(static_cast<size_t>(n) * h);
    std::vector<float> kbuf(static_cast<size_t>(n) * kvd);
    std::vector<float> vbuf(static_cast<size_t>(n) * kvd);
    std::vector<float> attn(static_cast<size_t>(n) * h);
    std::vector<float> proj(static_cast<size_t>(n) * h);
    std::vector<float> gate(static_cast<size_t>(n) * inter);
    std::vector<float> up(static_cast<size_t>(n) * inter);

    for (int layer = 0; layer < cfg.num_layers; ++layer) {
        const LayerWeights lw = w.layer(layer);

        rmsnorm_forward(x.data(), lw.attn_norm, normed.data(), nullptr, n, h, kNormEps);
        linear_forward(normed.data(), lw.wq, q.data(), n, h, h);
        linear_forward(normed.data(), lw.wk, kbuf.data(), n, h, kvd);
        linear_forward(normed.data(), lw.wv, vbuf.data(), n, h, kvd);
        rope_apply(q.data(), n, cfg.num_heads, cfg.head_dim(), window_start, cfg.rope_base);
        rope_apply(kbuf.data(), n, cfg.num_kv_heads, cfg.head_dim(), window_start,
                   cfg.rope_base);
        cache.write_window(layer, window_start, kbuf, vbuf);

        attention_from_cache(cache, layer, q.data(), attn.data(), n, window_start, cfg,
                             view);
        linear_forward(attn.data(), lw.wo, proj.data(), n, h, h);
        for (size_t i = 0; i < x.size(); ++i) {
            x[i] += proj[i];
        }

        rmsnorm_forward(x.data(), lw.ffn_norm, normed.data(), nullptr, n, h, kNormEps);
        linear_forward(normed.data(), lw.w_gate, gate.data(), n, h, inter);
        linear_forward(normed.data(), lw.w_up, up.data(), n, h, inter);
        for (size_t i = 0; i < gate.size(); ++i) {
            gate[i] = silu(gate[i]) * up[i];
        }
        linear_forward(gate.data(), lw.w_down, proj.data(), n, inter, h);
        for (size_t i = 0; i < x.size(); ++i) {
            x[i] += proj[i];
        }
    }

    rmsnorm_forward(x.data(), w.final_norm, normed.data(), nullptr, n, h, kNormEps);
    std::vector<float> logits(static_cast<size_t>(n) * cfg.vocab_size);
    const float* out_w = w.output != nullptr ? w.output : w.embedding;
    linear_forward(normed.data(), out_w, logits.data(), n, h, cfg.vocab_size);
    return logits;
}

std::vector<float> forward_logits(const Parameters& params, const ModelConfig& cfg,
                                  std::span<const TokenId> tokens,
                                  const StaticMaskView& view) {
    StaticKVCache scratch = allocate_cache(cfg, static_cast<int64_t>(tokens.size()));
    return forward_with_cache(weights_of(params), cfg, scratch, tokens, 0, view);
}

} // namespace rastergen
