#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "racig/rng.hpp"
#include "racig/tensor.hpp"

namespace racig {

// Row-wise softmax with max-subtraction, stable for entries up to ~1e300.
inline Tensor softmax_rows(const Tensor& x) {
    if (x.rank() != 2) {
        throw ShapeError("softmax_rows expects a rank-2 tensor");
    }
    if (x.rows() == 0 || x.cols() == 0) {
        throw ShapeError("softmax_rows: degenerate shape");
    }
    Tensor out = x;
    const size_t n = x.rows(), m = x.cols();
    for (size_t i = 0; i < n; i++) {
        double* row = &out.data[i * m];
        double mx = row[0];
        for (size_t j = 1; j < m; j++) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (size_t j = 0; j < m; j++) {
            row[j] = std::exp(row[j] - mx);
            denom += row[j];
        }
        for (size_t j = 0; j < m; j++) row[j] /= denom;
    }
    return out;
}

// Softmax(Q K^T / sqrt(d)) V for already-projected Q (n x d), K (m x d),
// V (m x dv). Returns (n x dv); each output row is a convex combination of
// rows of V.
inline Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, size_t d) {
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2) {
        throw ShapeError("attention expects rank-2 q, k, v");
    }
    if (d == 0) {
        throw ShapeError("attention: scale dimension d must be positive");
    }
    if (q.cols() != d) {
        throw ShapeError("attention: query feature axis is " + std::to_string(q.cols()) +
                         ", expected d=" + std::to_string(d));
    }
    if (k.cols() != d) {
        throw ShapeError("attention: key feature axis is " + std::to_string(k.cols()) +
                         ", expected d=" + std::to_string(d));
    }
    if (v.rows() != k.rows()) {
        throw ShapeError("attention: value row axis is " + std::to_string(v.rows()) +
                         ", expected m=" + std::to_string(k.rows()));
    }
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    Tensor scores = matmul(q, transpose(k));
    for (double& s : scores.data) s *= inv_sqrt_d;
    return matmul(softmax_rows(scores), v);
}

// Projection weights for one decoupled cross-attention block: a text branch
// (w_k, w_v) and an image branch (w_k_prime, w_v_prime) sharing the query
// projection w_q. Stub initialization draws entries from a seeded
// SplitMix64 uniform(-0.1, 0.1) stream in the order
// w_q, w_k, w_v, w_k_prime, w_v_prime, each filled row-major.
struct AttentionWeights {
    Tensor w_q, w_k, w_v, w_k_prime, w_v_prime;

    static AttentionWeights from_seed(uint64_t seed, size_t d_model, size_t d) {
        SplitMix64 rng(seed);
        auto fill = [&](size_t r, size_t c) {
            std::vector<double> data(r * c);
            for (double& v : data) v = rng.next_uniform(-0.1, 0.1);
            return Tensor({r, c}, std::move(data));
        };
        AttentionWeights w;
        w.w_q = fill(d_model, d);
        w.w_k = fill(d_model, d);
        w.w_v = fill(d_model, d);
        w.w_k_prime = fill(d_model, d);
        w.w_v_prime = fill(d_model, d);
        return w;
    }

    size_t model_dim() const { return w_q.rows(); }
    size_t inner_dim() const { return w_q.cols(); }

    void validate() const {
        const size_t dm = w_q.rows(), d = w_q.cols();
        for (const Tensor* t : {&w_k, &w_v, &w_k_prime, &w_v_prime}) {
            if (t->rank() != 2 || t->rows() != dm || t->cols() != d) {
                throw ShapeError("attention weights: all five matrices must be " +
                                 std::to_string(dm) + "x" + std::to_string(d));
            }
        }
    }
};

// Z' = Attention(ZWq, c_t Wk, c_t Wv) + Attention(ZWq, c_i W'k, c_i W'v).
// The image branch keys/values come from the image feature c_img.
inline Tensor decoupled_cross_attention(const Tensor& z, const Tensor& c_text,
                                        const Tensor& c_img, const AttentionWeights& w) {
    w.validate();
    const size_t d_model = w.model_dim();
    auto check = [&](const Tensor& t, const char* name) {
        if (t.rank() != 2 || t.cols() != d_model) {
            throw ShapeError(std::string("decoupled_cross_attention: ") + name +
                             " feature axis must be d_model=" + std::to_string(d_model));
        }
    };
    check(z, "z");
    check(c_text, "c_text");
    check(c_img, "c_img");
    const size_t d = w.inner_dim();
    Tensor q = matmul(z, w.w_q);
    Tensor text_term = attention(q, matmul(c_text, w.w_k), matmul(c_text, w.w_v), d);
    Tensor image_term = attention(q, matmul(c_img, w.w_k_prime), matmul(c_img, w.w_v_prime), d);
    return add(text_term, image_term);
}

}  // namespace racig
