#include "rastergen/quant.hpp"

#include <algorithm>
#include <cmath>

#include "rastergen/common.hpp"

namespace rastergen {

QuantizedTensor quantize_groupwise(std::span<const float> w, int64_t rows, int64_t cols) {
    require(rows >= 1 && cols >= 1, ErrorKind::invalid_argument, "empty matrix");
    require(static_cast<int64_t>(w.size()) == rows * cols, ErrorKind::invalid_argument,
            "matrix size mismatch");
    for (float v : w) {
        if (!std::isfinite(v)) {
            fail(ErrorKind::numeric, "non-finite weight value");
        }
    }
    QuantizedTensor qt;
    qt.rows = rows;
    qt.cols = cols;
    const int64_t gpr = qt.groups_per_row();
    qt.packed.assign(static_cast<size_t>(rows) * qt.packed_row_bytes(), 0);
    qt.scales.assign(static_cast<size_t>(rows) * gpr, 0.0f);
    qt.zero_points.assign(static_cast<size_t>(rows) * gpr, 0);

    for (int64_t r = 0; r < rows; ++r) {
        const float* row = w.data() + r * cols;
        uint8_t* prow = qt.packed.data() + r * qt.packed_row_bytes();
        for (int64_t g = 0; g < gpr; ++g) {
            const int64_t begin = g * kQuantGroup;
            const int64_t end = std::min(cols, begin + kQuantGroup);
            float lo = row[begin], hi = row[begin];
            for (int64_t c = begin; c < end; ++c) {
                lo = std::min(lo, row[c]);
                hi = std::max(hi, row[c]);
            }
            float scale = (hi - lo) / 15.0f;
            if (scale == 0.0f) {
                scale = 1.0f;
            }
            const int zp = std::clamp(
                static_cast<int>(std::lround(-static_cast<double>(lo) / scale)), 0, 15);
            qt.scales[r * gpr + g] = scale;
            qt.zero_points[r * gpr + g] = static_cast<uint8_t>(zp);
            for (int64_t c = begin; c < end; ++c) {
                const int code = std::clamp(
                    static_cast<int>(std::lround(static_cast<double>(row[c]) / scale + zp)),
                    0, 15);
                uint8_t& byte = prow[c / 2];
                if (c % 2 == 0) {
                    byte = static_cast<uint8_t>((byte & 0xF0) | code);
                } else {
                    byte = static_cast<uint8_t>((byte & 0x0F) | (code << 4));
                }
            }
        }
    }
    return qt;
}

float dequantize_at(const QuantizedTensor& qt, int64_t r, int64_t c) {
    const uint8_t byte = qt.packed[r * qt.packed_row_bytes() + c / 2];
    const int code = (c % 2 == 0) ? (byte & 0x0F) : (byte >> 4);
    const int64_t g = c / kQuantGroup;
    const float scale = qt.scales[r * qt.groups_per_row() + g];
    const int zp = qt.zero_points[r * qt.groups_per_row() + g];
    return scale * static_cast<float>(code - zp);
}

std::vector<float> dequantize(const QuantizedTensor& qt) {
    std::vector<float> out(static_cast<size_t>(qt.rows) * qt.cols);
    const int64_t gpr = qt.groups_per_row();
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < qt.rows; ++r) {
        const uint8_t* prow = qt.packed.data() + r * qt.packed_row_bytes();
        float* orow = out.data() + r * qt.cols;
        for (int64_t g = 0; g < gpr; ++g) {
            const float scale = qt.scales[r * gpr + g];
            const int zp = qt.zero_points[r * gpr + g];
            const int64_t begin = g * kQuantGroup;
            const int64_t end = std::min(qt.cols, begin + kQuantGroup);
            for (int64_t c = begin; c < end; ++c) {
                const uint8_t byte = prow[c / 2];
                const int code = (c % 2 == 0) ? (byte & 0x0F) : (byte >> 4);
                orow[c] = scale * static_cast<float>(code - zp);
            }
        }
    }
    return out;
}

std::vector<QuantizedParameters::QTensorRef> QuantizedParameters::quantized_refs() {
    std::vector<QTensorRef> refs;
    for (size_t l = 0; l < layers.size(); ++l) {
        const std::string p = "layers." + std::to_string(l) + ".";
        QLayer& ql = layers[l];
        refs.push_back({p + "wq", &ql.wq});
        refs.push_back({p + "wk", &ql.wk});
        refs.push_back({p + "wv", &ql.wv});
        refs.push_back({p + "wo", &ql.wo});
        refs.push_back({p + "w_gate", &ql.w_gate});
        refs.push_back({p + "w_up", &ql.w_up});
        refs.push_back({p + "w_down", &ql.w_down});
    }
    return refs;
}

QuantizedParameters quantize_parameters(const Parameters& p, const ModelConfig& cfg) {
    cfg.validate();
    require(static_cast<int>(p.layers.size()) == cfg.num_layers, ErrorKind::config,
            "parameters missing layers");
    QuantizedParameters qp;
    qp.embedding = p.embedding;
    qp.final_norm = p.final_norm;
    qp.output = p.output;
    qp.layers.resize(p.layers.size());
    const int64_t h = cfg.hidden_size;
    const int64_t kv = cfg.kv_dim();
    const int64_t inter = cfg.intermediate_size;
    for (size_t l = 0; l < p.layers.size(); ++l) {
        const LayerParams& lp = p.layers[l];
        QuantizedParameters::QLayer& ql = qp.layers[l];
        ql.wq = quantize_groupwise(lp.wq, h, h);
        ql.wk = quantize_groupwise(lp.wk, kv, h);
        ql.wv = quantize_groupwise(lp.wv, kv, h);
        ql.wo = quantize_groupwise(lp.wo, h, h);
        ql.w_gate = quantize_groupwise(lp.w_gate, inter, h);
        ql.w_up = quantize_groupwise(lp.w_up, inter, h);
        ql.w_down = quantize_groupwise(lp.w_down, h, inter);
        ql.attn_norm = lp.attn_norm;
        ql.ffn_norm = lp.ffn_norm;
    }
    return qp;
}

FootprintReport weight_footprint(const QuantizedParameters& qp, const ModelConfig& cfg) {
    FootprintReport r;
    for (auto& ref : const_cast<QuantizedParameters&>(qp).quantized_refs()) {
        r.quantized_bytes += ref.tensor->storage_bytes();
        r.fp16_bytes += ref.tensor->rows * ref.tensor->cols * 2;
    }
    (void)cfg;
    return r;
}

std::vector<float> quantized_forward(const QuantizedParameters& qp, const ModelConfig& cfg,
                                     StaticKVCache& cache, std::span<const TokenId> tokens,
                                     int64_t window_start, const StaticMaskView& view) {
    require(static_cast<int>(qp.layers.size()) == cfg.num_layers, ErrorKind::config,
            "quantized parameters missing layers");
    // dequantize-on-use: materialize each layer's weights for this pass only
    struct Scratch {
        std::vector<std::vector<float>> mats;
    };
    Scratch scratch;
    scratch.mats.resize(static_cast<size_t>(cfg.num_layers) * 7);

    WeightSource w;
    w.embedding = qp.embedding.data();
    w.final_norm = qp.final_norm.data();
    w.output = qp.output.empty() ? nullptr : qp.output.data();
    w.layer = [&qp, &scratch](int l) {
        const QuantizedParameters::QLayer& ql = qp.layers[l];
        auto* m = &scratch.mats[static_cast<size_t>(l) * 7];
        m[0] = dequantize(ql.wq);
        m[1] = dequantize(ql.wk);
        m[2] = dequantize(ql.wv);
        m[3] = dequantize(ql.wo);
        m[4] = dequantize(ql.w_gate);
        m[5] = dequantize(ql.w_up);
        m[6] = dequantize(ql.w_down);
        return LayerWeights{m[0].data(), m[1].data(), m[2].data(), m[3].data(),
                            m[4].data(), m[5].data(), m[6].data(),
                            ql.attn_norm.data(), ql.ffn_norm.data()};
    };
    return forward_with_cache(w, cfg, cache, tokens, window_start, view);
}

} // namespace rastergen
