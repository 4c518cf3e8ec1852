#include "rastergen/kernels.hpp"

#include <cmath>

namespace rastergen {

namespace {
// Four accumulators give the vectorizer room without -ffast-math.
inline float dot(const float* a, const float* b, int64_t n) {
    float s0 = 0.0f, s1 = 0.0f, s2 = 0.0f, s3 = 0.0f;
    int64_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) {
        s0 += a[i] * b[i];
    }
    return (s0 + s1) + (s2 + s3);
}
} // namespace

void linear_forward(const float* x, const float* w, float* out, int64_t m,
                    int64_t k, int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t idx = 0; idx < m * n; ++idx) {
        const int64_t r = idx / n;
        const int64_t c = idx % n;
        out[idx] = dot(x + r * k, w + c * k, k);
    }
}

void linear_backward_input(const float* dout, const float* w, float* dx, int64_t m,
                           int64_t k, int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < m; ++r) {
        float* dst = dx + r * k;
        for (int64_t j = 0; j < k; ++j) {
            dst[j] = 0.0f;
        }
        const float* g = dout + r * n;
        for (int64_t c = 0; c < n; ++c) {
            const float gv = g[c];
            if (gv == 0.0f) {
                continue;
            }
            const float* wrow = w + c * k;
            for (int64_t j = 0; j < k; ++j) {
                dst[j] += gv * wrow[j];
            }
        }
    }
}

void linear_backward_weight(const float* dout, const float* x, float* dw, int64_t m,
                            int64_t k, int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t c = 0; c < n; ++c) {
        float* dst = dw + c * k;
        for (int64_t r = 0; r < m; ++r) {
            const float gv = dout[r * n + c];
            if (gv == 0.0f) {
                continue;
            }
            const float* xr = x + r * k;
            for (int64_t j = 0; j < k; ++j) {
                dst[j] += gv * xr[j];
            }
        }
    }
}

void rmsnorm_forward(const float* x, const float* gain, float* out, float* inv_rms,
                     int64_t rows, int64_t dim, float eps) {
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < rows; ++r) {
        const float* xr = x + r * dim;
        float ss = 0.0f;
        for (int64_t j = 0; j < dim; ++j) {
            ss += xr[j] * xr[j];
        }
        const float inv = 1.0f / std::sqrt(ss / static_cast<float>(dim) + eps);
        if (inv_rms != nullptr) {
            inv_rms[r] = inv;
        }
        float* o = out + r * dim;
        for (int64_t j = 0; j < dim; ++j) {
            o[j] = xr[j] * inv * gain[j];
        }
    }
}

void rope_apply(float* qk, int64_t rows, int heads, int head_dim, int64_t pos0,
                float base) {
    const int half = head_dim / 2;
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < rows; ++r) {
        const double pos = static_cast<double>(pos0 + r);
        for (int h = 0; h < heads; ++h) {
            float* v = qk + (r * heads + h) * head_dim;
            for (int i = 0; i < half; ++i) {
                const double freq =
                    std::pow(static_cast<double>(base),
                             -2.0 * static_cast<double>(i) / head_dim);
                const float c = static_cast<float>(std::cos(pos * freq));
                const float s = static_cast<float>(std::sin(pos * freq));
                const float a = v[2 * i];
                const float b = v[2 * i + 1];
                v[2 * i] = a * c - b * s;
                v[2 * i + 1] = a * s + b * c;
            }
        }
    }
}

} // namespace rastergen
