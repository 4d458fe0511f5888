#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "racig/errors.hpp"
#include "racig/tensor.hpp"

namespace racig {

// 8-bit grayscale raster. Masks use the values {0, 255} only.
struct Raster {
    size_t width = 0;
    size_t height = 0;
    std::vector<uint8_t> pixels;

    Raster() = default;
    Raster(size_t w, size_t h, uint8_t fill = 0) : width(w), height(h), pixels(w * h, fill) {}

    size_t size() const { return pixels.size(); }
    bool empty() const { return width == 0 || height == 0; }
    uint8_t& at(size_t x, size_t y) { return pixels[y * width + x]; }
    uint8_t at(size_t x, size_t y) const { return pixels[y * width + x]; }
};

inline bool is_binary_mask(const Raster& r) {
    for (uint8_t p : r.pixels) {
        if (p != 0 && p != 255) return false;
    }
    return true;
}

inline bool mask_empty(const Raster& r) {
    for (uint8_t p : r.pixels) {
        if (p != 0) return false;
    }
    return true;
}

inline bool masks_disjoint(const Raster& a, const Raster& b) {
    if (a.width != b.width || a.height != b.height) return false;
    for (size_t i = 0; i < a.pixels.size(); i++) {
        if (a.pixels[i] != 0 && b.pixels[i] != 0) return false;
    }
    return true;
}

inline void write_pgm(std::ostream& os, const Raster& r) {
    os << "P5\n" << r.width << " " << r.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(r.pixels.data()),
             static_cast<std::streamsize>(r.pixels.size()));
}

inline void save_pgm(const std::string& path, const Raster& r) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("cannot open " + path + " for writing");
    }
    write_pgm(os, r);
}

namespace detail {

inline size_t pgm_number(std::istream& is, const std::string& name) {
    int c = is.get();
    while (c != EOF && std::isspace(c)) c = is.get();
    if (c == EOF || !std::isdigit(c)) {
        throw FormatError(name + ": malformed PGM header");
    }
    size_t v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + static_cast<size_t>(c - '0');
        c = is.get();
    }
    if (c != EOF && !std::isspace(c)) {
        throw FormatError(name + ": malformed PGM header");
    }
    return v;
}

}  // namespace detail

inline Raster read_pgm(std::istream& is, const std::string& name = "pgm stream") {
    char m0 = static_cast<char>(is.get());
    char m1 = static_cast<char>(is.get());
    if (!is || m0 != 'P' || m1 != '5') {
        throw FormatError(name + ": not a binary PGM (P5) file");
    }
    size_t w = detail::pgm_number(is, name);
    size_t h = detail::pgm_number(is, name);
    size_t maxval = detail::pgm_number(is, name);
    if (maxval != 255) {
        throw FormatError(name + ": PGM maxval must be 255");
    }
    Raster r(w, h);
    if (!is.read(reinterpret_cast<char*>(r.pixels.data()),
                 static_cast<std::streamsize>(r.pixels.size()))) {
        throw FormatError(name + ": truncated PGM payload");
    }
    return r;
}

inline Raster load_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open " + path);
    }
    return read_pgm(is, path);
}

// Majority-vote downsample onto a (grid_h x grid_w) cell grid. Every pixel
// votes into the cell that contains it; a cell switches on when at least
// half of its pixels are set. Cells that receive no pixels stay 0.
inline Tensor downsample_majority(const Raster& mask, size_t grid_h, size_t grid_w) {
    if (grid_h == 0 || grid_w == 0) {
        throw ShapeError("downsample_majority: grid dimensions must be positive");
    }
    std::vector<double> set_count(grid_h * grid_w, 0.0);
    std::vector<double> total_count(grid_h * grid_w, 0.0);
    for (size_t y = 0; y < mask.height; y++) {
        size_t cr = y * grid_h / mask.height;
        for (size_t x = 0; x < mask.width; x++) {
            size_t cc = x * grid_w / mask.width;
            size_t cell = cr * grid_w + cc;
            total_count[cell] += 1.0;
            if (mask.at(x, y) != 0) set_count[cell] += 1.0;
        }
    }
    std::vector<double> out(grid_h * grid_w, 0.0);
    for (size_t i = 0; i < out.size(); i++) {
        if (total_count[i] > 0.0 && set_count[i] * 2.0 >= total_count[i]) {
            out[i] = 1.0;
        }
    }
    return Tensor({grid_h, grid_w}, std::move(out));
}

}  // namespace racig
