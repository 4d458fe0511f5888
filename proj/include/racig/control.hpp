#pragma once

#include <string>

#include "racig/tensor.hpp"

namespace racig {

// Two readings of the zero-conv combination. paper_literal keeps the raw
// conditioning feature inside f_c, so conditioning flows even at zero
// initialization; strict_preserve routes only the zero-conv output, which
// makes the combination an exact identity on f_original while the weights
// stay zero.
enum class ControlMode {
    paper_literal,
    strict_preserve,
};

inline const char* to_string(ControlMode m) {
    return m == ControlMode::paper_literal ? "paper_literal" : "strict";
}

// Conditioning-strength scale plus a square zero-initialized linear map
// standing in for the 1x1 zero convolution.
struct ControlConfig {
    double lambda = 1.0;
    Tensor zero_conv_weights;

    static ControlConfig make(double lambda, size_t channels) {
        ControlConfig cfg;
        cfg.lambda = lambda;
        cfg.zero_conv_weights = Tensor::zeros({channels, channels});
        return cfg;
    }

    size_t channels() const { return zero_conv_weights.rows(); }
};

namespace detail {

// Rank-1 tensors are treated as a single row over the channel axis.
inline Tensor as_rows(const Tensor& t, size_t channels, const char* name) {
    if (t.rank() == 1) {
        if (t.shape[0] != channels) {
            throw ShapeError(std::string(name) + ": channel axis is " + std::to_string(t.shape[0]) +
                             ", expected " + std::to_string(channels));
        }
        return Tensor({1, channels}, t.data);
    }
    if (t.rank() == 2) {
        if (t.cols() != channels) {
            throw ShapeError(std::string(name) + ": channel axis is " + std::to_string(t.cols()) +
                             ", expected " + std::to_string(channels));
        }
        return t;
    }
    throw ShapeError(std::string(name) + ": expected rank 1 or 2");
}

}  // namespace detail

// f_out = f_original + lambda * f_c where
//   paper_literal:    f_c = c_feature + ZeroConv(c_feature)
//   strict_preserve:  f_c = ZeroConv(c_feature)
inline Tensor control_combine(const Tensor& f_original, const Tensor& c_feature,
                              const ControlConfig& cfg, ControlMode mode) {
    if (!f_original.same_shape(c_feature)) {
        throw ShapeError("control_combine: f_original and c_feature shapes differ");
    }
    const size_t channels = cfg.channels();
    Tensor rows = detail::as_rows(c_feature, channels, "control_combine");
    Tensor conv = matmul(rows, cfg.zero_conv_weights);
    Tensor f_c = mode == ControlMode::paper_literal ? add(rows, conv) : conv;
    Tensor out = f_original;
    for (size_t i = 0; i < out.data.size(); i++) {
        out.data[i] += cfg.lambda * f_c.data[i];
    }
    return out;
}

// Classifier-free-guidance blend. Computed as (1 - scale) * uncond +
// scale * cond so that scale 0 and scale 1 return the operands exactly;
// algebraically equal to uncond + scale * (cond - uncond).
inline Tensor cfg_mix(const Tensor& eps_uncond, const Tensor& eps_cond, double scale) {
    if (!eps_uncond.same_shape(eps_cond)) {
        throw ShapeError("cfg_mix: operand shapes differ");
    }
    Tensor out = eps_uncond;
    const double a = 1.0 - scale;
    for (size_t i = 0; i < out.data.size(); i++) {
        out.data[i] = a * eps_uncond.data[i] + scale * eps_cond.data[i];
    }
    return out;
}

}  // namespace racig
