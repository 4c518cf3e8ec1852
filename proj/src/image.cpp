#include "rastergen/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace rastergen {

namespace {
// Skips whitespace and '#' comments between PPM header fields.
int read_ppm_int(std::istream& in) {
    int c = in.get();
    while (c != EOF && (std::isspace(c) || c == '#')) {
        if (c == '#') {
            while (c != EOF && c != '\n') {
                c = in.get();
            }
        }
        c = in.get();
    }
    require(c != EOF, ErrorKind::io, "truncated PPM header");
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    require(any, ErrorKind::io, "malformed PPM header field");
    return value;
}
} // namespace

ImageGrid load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::io, "cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    require(m0 == 'P' && m1 == '6', ErrorKind::io, path + ": not a binary PPM (P6)");
    const int w = read_ppm_int(in);
    const int h = read_ppm_int(in);
    const int maxval = read_ppm_int(in);
    require(maxval == 255, ErrorKind::io, path + ": PPM maxval must be 255");
    require(w > 0 && h > 0, ErrorKind::io, path + ": bad dimensions");

    std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(static_cast<size_t>(in.gcount()) == raw.size(), ErrorKind::io,
            path + ": truncated pixel data");

    ImageGrid img(w, h);
    for (size_t i = 0; i < raw.size(); ++i) {
        img.pixels[i] = static_cast<float>(raw[i]) / 255.0f;
    }
    return img;
}

void save_ppm(const ImageGrid& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::io, "cannot write " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.pixels.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        const float v = std::clamp(img.pixels[i], 0.0f, 1.0f);
        raw[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
    require(out.good(), ErrorKind::io, "write failed for " + path);
}

} // namespace rastergen
