#include "rastergen/imgcodec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rastergen/common.hpp"

namespace rastergen {

namespace {

void extract_patch(const ImageGrid& img, int py, int px, int patch_size, float* out) {
    int k = 0;
    for (int y = 0; y < patch_size; ++y) {
        for (int x = 0; x < patch_size; ++x) {
            for (int c = 0; c < 3; ++c) {
                out[k++] = img.at(py * patch_size + y, px * patch_size + x, c);
            }
        }
    }
}

std::vector<float> corpus_patches(std::span<const ImageGrid> corpus, int patch_size,
                                  size_t* count_out) {
    size_t count = 0;
    for (const ImageGrid& img : corpus) {
        require(img.width % patch_size == 0 && img.height % patch_size == 0,
                ErrorKind::invalid_argument,
                "image dimensions must be multiples of patch_size");
        count += static_cast<size_t>(img.width / patch_size) * (img.height / patch_size);
    }
    const int dim = patch_size * patch_size * 3;
    std::vector<float> patches(count * dim);
    size_t i = 0;
    for (const ImageGrid& img : corpus) {
        const int rows = img.height / patch_size;
        const int cols = img.width / patch_size;
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                extract_patch(img, r, c, patch_size, patches.data() + i * dim);
                ++i;
            }
        }
    }
    *count_out = count;
    return patches;
}

double sq_dist(const float* a, const float* b, int dim) {
    double d = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double diff = static_cast<double>(a[i]) - b[i];
        d += diff * diff;
    }
    return d;
}

} // namespace

Codebook fit_codebook(std::span<const ImageGrid> corpus, int codebook_size,
                      int patch_size, int iterations, uint64_t seed) {
    require(!corpus.empty(), ErrorKind::invalid_argument, "empty corpus");
    require(codebook_size >= 1, ErrorKind::invalid_argument, "codebook_size must be >= 1");
    require(patch_size >= 1, ErrorKind::invalid_argument, "patch_size must be >= 1");

    const int dim = patch_size * patch_size * 3;
    size_t n = 0;
    std::vector<float> patches = corpus_patches(corpus, patch_size, &n);
    const int k = codebook_size;

    CounterRng rng(seed, 0x636f6465);

    // k-means++ seeding: spreads initial centroids, so distinct corpus
    // colors land in distinct clusters from the start.
    Codebook cb;
    cb.patch_size = patch_size;
    cb.entries.assign(static_cast<size_t>(k) * dim, 0.0f);
    std::vector<double> best_d(n, std::numeric_limits<double>::max());
    {
        const size_t first = rng.next_below(n);
        std::copy_n(patches.data() + first * dim, dim, cb.entries.begin());
        for (int j = 1; j < k; ++j) {
            const float* prev = cb.entries.data() + static_cast<size_t>(j - 1) * dim;
            double total = 0.0;
            for (size_t i = 0; i < n; ++i) {
                best_d[i] = std::min(best_d[i], sq_dist(patches.data() + i * dim, prev, dim));
                total += best_d[i];
            }
            size_t pick = 0;
            if (total > 0.0) {
                const double r = rng.next_double() * total;
                double acc = 0.0;
                for (size_t i = 0; i < n; ++i) {
                    acc += best_d[i];
                    if (r < acc) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = rng.next_below(n); // all patches identical
            }
            std::copy_n(patches.data() + pick * dim,
                        dim, cb.entries.begin() + static_cast<size_t>(j) * dim);
        }
    }

    std::vector<int> assign(n, 0);
    std::vector<double> sums(static_cast<size_t>(k) * dim);
    std::vector<size_t> counts(static_cast<size_t>(k));
    for (int it = 0; it < iterations; ++it) {
        // assignment step (ties to the lowest entry index)
        for (size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            int arg = 0;
            for (int j = 0; j < k; ++j) {
                const double d =
                    sq_dist(patches.data() + i * dim,
                            cb.entries.data() + static_cast<size_t>(j) * dim, dim);
                if (d < best) {
                    best = d;
                    arg = j;
                }
            }
            assign[i] = arg;
        }
        // update step
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (size_t i = 0; i < n; ++i) {
            double* s = sums.data() + static_cast<size_t>(assign[i]) * dim;
            const float* p = patches.data() + i * dim;
            for (int d = 0; d < dim; ++d) {
                s[d] += p[d];
            }
            counts[assign[i]] += 1;
        }
        for (int j = 0; j < k; ++j) {
            float* e = cb.entries.data() + static_cast<size_t>(j) * dim;
            if (counts[j] > 0) {
                for (int d = 0; d < dim; ++d) {
                    e[d] = static_cast<float>(sums[static_cast<size_t>(j) * dim + d] /
                                              static_cast<double>(counts[j]));
                }
            } else {
                // re-seed empty cluster to the patch farthest from its centroid
                double far_d = -1.0;
                size_t far_i = 0;
                for (size_t i = 0; i < n; ++i) {
                    const double d = sq_dist(
                        patches.data() + i * dim,
                        cb.entries.data() + static_cast<size_t>(assign[i]) * dim, dim);
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                std::copy_n(patches.data() + far_i * dim, dim, e);
            }
        }
    }
    return cb;
}

TokenMap encode_image(const ImageGrid& img, const Codebook& cb) {
    require(img.width % cb.patch_size == 0 && img.height % cb.patch_size == 0,
            ErrorKind::invalid_argument,
            "image dimensions must be multiples of patch_size");
    const int dim = cb.dim();
    const int k = cb.size();
    TokenMap tm;
    tm.rows = img.height / cb.patch_size;
    tm.cols = img.width / cb.patch_size;
    tm.ids.resize(static_cast<size_t>(tm.rows) * tm.cols);
    std::vector<float> patch(dim);
    for (int r = 0; r < tm.rows; ++r) {
        for (int c = 0; c < tm.cols; ++c) {
            extract_patch(img, r, c, cb.patch_size, patch.data());
            double best = std::numeric_limits<double>::max();
            int arg = 0;
            for (int j = 0; j < k; ++j) {
                const double d = sq_dist(patch.data(),
                                         cb.entries.data() + static_cast<size_t>(j) * dim, dim);
                if (d < best) { // strict: ties stay at the lowest index
                    best = d;
                    arg = j;
                }
            }
            tm.ids[static_cast<size_t>(r) * tm.cols + c] = arg;
        }
    }
    return tm;
}

ImageGrid decode_tokens(const TokenMap& tm, const Codebook& cb) {
    require(tm.ids.size() == static_cast<size_t>(tm.rows) * tm.cols,
            ErrorKind::invalid_argument, "token map ids/shape mismatch");
    ImageGrid img(tm.cols * cb.patch_size, tm.rows * cb.patch_size);
    for (int r = 0; r < tm.rows; ++r) {
        for (int c = 0; c < tm.cols; ++c) {
            const size_t pos = static_cast<size_t>(r) * tm.cols + c;
            const int id = tm.ids[pos];
            if (id < 0 || id >= cb.size()) {
                fail(ErrorKind::invalid_argument,
                     "token id " + std::to_string(id) + " at position " +
                         std::to_string(pos) + " outside codebook of size " +
                         std::to_string(cb.size()),
                     pos);
            }
            const float* e = cb.entries.data() + static_cast<size_t>(id) * cb.dim();
            int kidx = 0;
            for (int y = 0; y < cb.patch_size; ++y) {
                for (int x = 0; x < cb.patch_size; ++x) {
                    for (int ch = 0; ch < 3; ++ch) {
                        img.at(r * cb.patch_size + y, c * cb.patch_size + x, ch) = e[kidx++];
                    }
                }
            }
        }
    }
    return img;
}

double psnr(const ImageGrid& a, const ImageGrid& b) {
    require(a.same_shape(b), ErrorKind::invalid_argument, "psnr: shape mismatch");
    double mse = 0.0;
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.pixels.size());
    if (mse <= 0.0) {
        return kPsnrCap;
    }
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const ImageGrid& a, const ImageGrid& b) {
    require(a.same_shape(b), ErrorKind::invalid_argument, "ssim: shape mismatch");
    constexpr int win = 8;
    require(a.width >= win && a.height >= win, ErrorKind::invalid_argument,
            "ssim: images must be at least 8x8");
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    double total = 0.0;
    int windows = 0;
    for (int wy = 0; wy + win <= a.height; wy += win) {
        for (int wx = 0; wx + win <= a.width; wx += win) {
            for (int c = 0; c < 3; ++c) {
                double ma = 0.0, mb = 0.0;
                for (int y = 0; y < win; ++y) {
                    for (int x = 0; x < win; ++x) {
                        ma += a.at(wy + y, wx + x, c);
                        mb += b.at(wy + y, wx + x, c);
                    }
                }
                ma /= win * win;
                mb /= win * win;
                double va = 0.0, vb = 0.0, cov = 0.0;
                for (int y = 0; y < win; ++y) {
                    for (int x = 0; x < win; ++x) {
                        const double da = a.at(wy + y, wx + x, c) - ma;
                        const double db = b.at(wy + y, wx + x, c) - mb;
                        va += da * da;
                        vb += db * db;
                        cov += da * db;
                    }
                }
                va /= win * win;
                vb /= win * win;
                cov /= win * win;
                total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                         ((ma * ma + mb * mb + c1) * (va + vb + c2));
                windows += 1;
            }
        }
    }
    return total / windows;
}

} // namespace rastergen
