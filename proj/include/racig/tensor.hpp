#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "racig/errors.hpp"

namespace racig {

// Dense row-major tensor of 64-bit reals. All dimensions are positive and
// every entry is finite at construction; operations treat values as
// immutable and return fresh tensors.
struct Tensor {
    std::vector<size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    Tensor(std::vector<size_t> shape_in, std::vector<double> data_in)
        : shape(std::move(shape_in)), data(std::move(data_in)) {
        size_t expected = 1;
        for (size_t i = 0; i < shape.size(); i++) {
            if (shape[i] == 0) {
                throw ShapeError("tensor dimension " + std::to_string(i) + " must be positive");
            }
            expected *= shape[i];
        }
        if (shape.empty()) {
            expected = 0;
        }
        if (expected != data.size()) {
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape product " + std::to_string(expected));
        }
        for (double v : data) {
            if (!std::isfinite(v)) {
                throw ValidationError("tensor entries must be finite");
            }
        }
    }

    static Tensor zeros(std::vector<size_t> shape_in) {
        size_t n = 1;
        for (size_t d : shape_in) n *= d;
        if (shape_in.empty()) n = 0;
        return Tensor(std::move(shape_in), std::vector<double>(n, 0.0));
    }

    size_t rank() const { return shape.size(); }
    size_t size() const { return data.size(); }

    // Rank-2 accessors.
    size_t rows() const { return shape.at(0); }
    size_t cols() const { return shape.at(1); }
    double& at(size_t r, size_t c) { return data[r * shape[1] + c]; }
    double at(size_t r, size_t c) const { return data[r * shape[1] + c]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": operand shapes differ");
    }
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = a;
    for (size_t i = 0; i < out.data.size(); i++) out.data[i] += b.data[i];
    return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a;
    for (size_t i = 0; i < out.data.size(); i++) out.data[i] -= b.data[i];
    return out;
}

inline Tensor scale(const Tensor& a, double s) {
    Tensor out = a;
    for (double& v : out.data) v *= s;
    return out;
}

// (n x k) * (k x m) -> (n x m), ikj loop order for cache-friendly rows.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw ShapeError("matmul expects rank-2 tensors");
    }
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner axes disagree (" + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()) + ")");
    }
    const size_t n = a.rows(), k = a.cols(), m = b.cols();
    std::vector<double> out(n * m, 0.0);
    for (size_t i = 0; i < n; i++) {
        const double* arow = &a.data[i * k];
        double* orow = &out[i * m];
        for (size_t p = 0; p < k; p++) {
            const double av = arow[p];
            const double* brow = &b.data[p * m];
            for (size_t j = 0; j < m; j++) {
                orow[j] += av * brow[j];
            }
        }
    }
    return Tensor({n, m}, std::move(out));
}

inline Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) {
        throw ShapeError("transpose expects a rank-2 tensor");
    }
    const size_t n = a.rows(), m = a.cols();
    std::vector<double> out(n * m);
    for (size_t i = 0; i < n; i++) {
        for (size_t j = 0; j < m; j++) {
            out[j * n + i] = a.data[i * m + j];
        }
    }
    return Tensor({m, n}, std::move(out));
}

inline double l2_norm(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data) s += v * v;
    return std::sqrt(s);
}

inline double sum(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data) s += v;
    return s;
}

// Binary tensor format:
//   magic   8 bytes  "RCTENSR\0"
//   rank    u32 LE
//   dims    rank x u32 LE
//   payload product(dims) x f64 LE, row-major
inline constexpr char kTensorMagic[8] = {'R', 'C', 'T', 'E', 'N', 'S', 'R', '\0'};

namespace detail {

inline void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline uint32_t get_u32(std::istream& is, const std::string& ctx) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) {
        throw FormatError(ctx + ": truncated header");
    }
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline void put_u64(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; i++) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline uint64_t get_u64(std::istream& is, const std::string& ctx) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) {
        throw FormatError(ctx + ": truncated header");
    }
    uint64_t v = 0;
    for (int i = 0; i < 8; i++) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

inline void put_f64(std::ostream& os, double d) {
    uint64_t v;
    std::memcpy(&v, &d, sizeof(v));
    put_u64(os, v);
}

inline double get_f64(std::istream& is, const std::string& ctx) {
    uint64_t v = get_u64(is, ctx);
    double d;
    std::memcpy(&d, &v, sizeof(d));
    return d;
}

}  // namespace detail

inline void write_tensor(std::ostream& os, const Tensor& t) {
    os.write(kTensorMagic, 8);
    detail::put_u32(os, static_cast<uint32_t>(t.rank()));
    for (size_t d : t.shape) {
        detail::put_u32(os, static_cast<uint32_t>(d));
    }
    for (double v : t.data) {
        detail::put_f64(os, v);
    }
}

inline Tensor read_tensor(std::istream& is, const std::string& name = "tensor stream") {
    char magic[8];
    if (!is.read(magic, 8)) {
        throw FormatError(name + ": truncated magic");
    }
    if (std::memcmp(magic, kTensorMagic, 8) != 0) {
        throw FormatError(name + ": bad magic, not a tensor file");
    }
    uint32_t rank = detail::get_u32(is, name);
    std::vector<size_t> shape(rank);
    size_t count = rank == 0 ? 0 : 1;
    for (uint32_t i = 0; i < rank; i++) {
        shape[i] = detail::get_u32(is, name);
        count *= shape[i];
    }
    std::vector<double> data(count);
    for (size_t i = 0; i < count; i++) {
        data[i] = detail::get_f64(is, name + ": truncated payload");
    }
    return Tensor(std::move(shape), std::move(data));
}

inline void save_tensor(const std::string& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("cannot open " + path + " for writing");
    }
    write_tensor(os, t);
}

inline Tensor load_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open " + path);
    }
    return read_tensor(is, path);
}

}  // namespace racig
