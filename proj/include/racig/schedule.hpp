#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "racig/rng.hpp"
#include "racig/tensor.hpp"

namespace racig {

inline constexpr size_t kDefaultSteps = 17;
inline constexpr double kDefaultAlphaBarHigh = 0.9999;
inline constexpr double kDefaultAlphaBarLow = 0.002;

// Cumulative noise-scaling schedule: alpha_bar[t] weighs the clean latent at
// timestep t, non-increasing over t with every entry in [0, 1].
struct Schedule {
    std::vector<double> alpha_bar;

    Schedule() = default;

    explicit Schedule(std::vector<double> ab) : alpha_bar(std::move(ab)) {
        if (alpha_bar.empty()) {
            throw ValidationError("schedule must have at least one step");
        }
        for (size_t t = 0; t < alpha_bar.size(); t++) {
            if (!(alpha_bar[t] >= 0.0 && alpha_bar[t] <= 1.0)) {
                throw ValidationError("alpha_bar[" + std::to_string(t) + "] outside [0, 1]");
            }
            if (t > 0 && alpha_bar[t] > alpha_bar[t - 1]) {
                throw ValidationError("alpha_bar must be non-increasing (violated at t=" +
                                      std::to_string(t) + ")");
            }
        }
    }

    static Schedule linear(size_t t_max, double hi, double lo) {
        std::vector<double> ab(t_max);
        for (size_t t = 0; t < t_max; t++) {
            double frac = t_max == 1 ? 0.0 : static_cast<double>(t) / static_cast<double>(t_max - 1);
            ab[t] = hi + (lo - hi) * frac;
        }
        return Schedule(std::move(ab));
    }

    static Schedule make_default() {
        return linear(kDefaultSteps, kDefaultAlphaBarHigh, kDefaultAlphaBarLow);
    }

    size_t t_max() const { return alpha_bar.size(); }
};

// z_t = sqrt(alpha_bar_t) z_0 + sqrt(1 - alpha_bar_t) eps, elementwise.
inline Tensor forward_noise(const Tensor& z0, size_t t, const Schedule& sched, const Tensor& eps) {
    if (t >= sched.t_max()) {
        throw RangeError("timestep " + std::to_string(t) + " outside [0, " +
                         std::to_string(sched.t_max()) + ")");
    }
    if (!z0.same_shape(eps)) {
        throw ShapeError("forward_noise: eps shape must match z0");
    }
    const double ab = sched.alpha_bar[t];
    const double w0 = std::sqrt(ab);
    const double we = std::sqrt(1.0 - ab);
    Tensor out = z0;
    for (size_t i = 0; i < out.data.size(); i++) {
        out.data[i] = w0 * z0.data[i] + we * eps.data[i];
    }
    return out;
}

// Noise predictor evaluated at (z_t, t, c_text); output shape must equal the
// input latent shape.
using ToyDenoiser = std::function<Tensor(const Tensor& z_t, size_t t, const Tensor& c_text)>;

inline ToyDenoiser zero_denoiser() {
    return [](const Tensor& z_t, size_t, const Tensor&) { return Tensor::zeros(z_t.shape); };
}

// Echoes a captured noise tensor; predicts perfectly when handed the same eps.
inline ToyDenoiser echo_denoiser(Tensor eps) {
    return [eps = std::move(eps)](const Tensor&, size_t, const Tensor&) { return eps; };
}

// Elementwise linear map: out[i] = c[i] * z_t[i] with coefficients drawn
// uniform(-1, 1) from a fresh SplitMix64(seed) stream on every call.
inline ToyDenoiser seeded_linear_denoiser(uint64_t seed) {
    return [seed](const Tensor& z_t, size_t, const Tensor&) {
        SplitMix64 rng(seed);
        Tensor out = z_t;
        for (double& v : out.data) v *= rng.next_uniform(-1.0, 1.0);
        return out;
    };
}

// Single-sample squared-error diffusion loss:
// || eps - denoiser(forward_noise(z0, t, eps), t, c_text) ||^2.
inline double dm_loss(const Tensor& z0, size_t t, const Tensor& c_text, const Schedule& sched,
                      const ToyDenoiser& denoiser, const Tensor& eps) {
    Tensor z_t = forward_noise(z0, t, sched, eps);
    Tensor pred = denoiser(z_t, t, c_text);
    if (!pred.same_shape(z0)) {
        throw ShapeError("dm_loss: denoiser output shape must match the latent");
    }
    double loss = 0.0;
    for (size_t i = 0; i < eps.data.size(); i++) {
        double diff = eps.data[i] - pred.data[i];
        loss += diff * diff;
    }
    return loss;
}

}  // namespace racig
