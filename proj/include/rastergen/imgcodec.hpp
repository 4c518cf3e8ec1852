#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rastergen/image.hpp"

namespace rastergen {

// Nearest-entry patch codebook. Entries are flattened patch_size x patch_size
// RGB patches (patch-row-major, RGB interleaved), every component in [0,1].
struct Codebook {
    int patch_size = 2;
    std::vector<float> entries; // size() * dim()

    int dim() const { return patch_size * patch_size * 3; }
    int size() const {
        return dim() == 0 ? 0 : static_cast<int>(entries.size()) / dim();
    }
    std::span<const float> entry(int i) const {
        return {entries.data() + static_cast<size_t>(i) * dim(),
                static_cast<size_t>(dim())};
    }
};

// Grid of codebook indices (0..codebook_size), row-major.
struct TokenMap {
    int rows = 0;
    int cols = 0;
    std::vector<int> ids;

    bool operator==(const TokenMap&) const = default;
};

// k-means over all patches of the corpus. Deterministic for a fixed seed;
// empty clusters are re-seeded to the farthest patch from its centroid.
Codebook fit_codebook(std::span<const ImageGrid> corpus, int codebook_size,
                      int patch_size, int iterations, uint64_t seed);

// Arg-min squared-distance entry per patch; ties break to the lowest index.
TokenMap encode_image(const ImageGrid& img, const Codebook& cb);
ImageGrid decode_tokens(const TokenMap& tm, const Codebook& cb);

// 10*log10(1/MSE) over [0,1]-scaled values, capped at 100 dB.
double psnr(const ImageGrid& a, const ImageGrid& b);
constexpr double kPsnrCap = 100.0;

// SSIM with non-overlapping 8x8 windows, population statistics,
// C1=(0.01)^2, C2=(0.03)^2, averaged over windows and channels.
double ssim(const ImageGrid& a, const ImageGrid& b);

} // namespace rastergen
