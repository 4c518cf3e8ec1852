#pragma once

#include <string>
#include <vector>

#include "rastergen/common.hpp"

namespace rastergen {

// RGB image, row-major, values in [0,1]. channels is fixed at 3.
struct ImageGrid {
    int width = 0;
    int height = 0;
    std::vector<float> pixels; // height*width*3

    ImageGrid() = default;
    ImageGrid(int w, int h, float fill = 0.0f)
        : width(w), height(h), pixels(static_cast<size_t>(w) * h * 3, fill) {}

    static constexpr int channels = 3;

    float& at(int y, int x, int c) {
        return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    float at(int y, int x, int c) const {
        return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
    }

    bool same_shape(const ImageGrid& o) const {
        return width == o.width && height == o.height;
    }
};

// Binary PPM (P6, maxval 255).
ImageGrid load_ppm(const std::string& path);
void save_ppm(const ImageGrid& img, const std::string& path);

} // namespace rastergen
