#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace rastergen {

// Dense kernels shared by the inference and training paths. Weight matrices
// are row-major [out_features x in_features]; activations row-major
// [rows x features]. All loops write disjoint outputs, so OpenMP threading
// keeps results bit-identical across thread counts.

// out[m x n] = x[m x k] . w^T   (w is [n x k])
void linear_forward(const float* x, const float* w, float* out, int64_t m,
                    int64_t k, int64_t n);

// dx[m x k] = dout[m x n] . w   (w is [n x k])
void linear_backward_input(const float* dout, const float* w, float* dx, int64_t m,
                           int64_t k, int64_t n);

// dw[n x k] += dout^T[n x m] . x[m x k]
void linear_backward_weight(const float* dout, const float* x, float* dw, int64_t m,
                            int64_t k, int64_t n);

// out = x / rms(x) * gain per row; inv_rms (len rows) saved for backward when
// non-null.
void rmsnorm_forward(const float* x, const float* gain, float* out, float* inv_rms,
                     int64_t rows, int64_t dim, float eps);

// Rotary rotation applied in place to q-or-k laid out [rows x heads x head_dim];
// row r sits at absolute position pos0 + r.
void rope_apply(float* qk, int64_t rows, int heads, int head_dim, int64_t pos0,
                float base);

inline float silu(float x) { return x / (1.0f + std::exp(-x)); }

} // namespace rastergen
