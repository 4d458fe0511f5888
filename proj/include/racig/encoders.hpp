#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "racig/raster.hpp"
#include "racig/rng.hpp"
#include "racig/tensor.hpp"

namespace racig {

// Deterministic stand-in for a text feature extractor. The prompt is split
// on whitespace; each token contributes a pseudo-random direction keyed by
// SplitMix64(seed ^ fnv1a64(token)) with dim uniform(-1, 1) draws, and the
// accumulated bag is normalized to unit length. Identical prompts produce
// bitwise-identical vectors.
struct TextEncoder {
    uint64_t seed = 0;
    size_t dim = 64;

    std::vector<double> encode(const std::string& prompt) const {
        std::vector<double> acc(dim, 0.0);
        size_t i = 0, tokens = 0;
        while (i < prompt.size()) {
            while (i < prompt.size() && std::isspace(static_cast<unsigned char>(prompt[i]))) i++;
            size_t start = i;
            while (i < prompt.size() && !std::isspace(static_cast<unsigned char>(prompt[i]))) i++;
            if (i == start) break;
            tokens++;
            SplitMix64 rng(seed ^ fnv1a64(prompt.data() + start, i - start));
            for (size_t j = 0; j < dim; j++) {
                acc[j] += rng.next_uniform(-1.0, 1.0);
            }
        }
        if (tokens == 0) {
            throw ValidationError("empty prompt");
        }
        double norm = 0.0;
        for (double v : acc) norm += v * v;
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            throw ValidationError("degenerate embedding for prompt");
        }
        for (double& v : acc) v /= norm;
        return acc;
    }
};

inline std::vector<double> embed_text(const std::string& prompt, const TextEncoder& encoder) {
    return encoder.encode(prompt);
}

// Deterministic stand-in for an image feature extractor: mean-pools the
// crop to a scalar mu = sum(pixels) / (count * 255), then scales a seeded
// projection matrix P (tokens x d_model, SplitMix64 uniform(-1, 1),
// row-major) to produce mu * P. Linear in the crop pixels.
struct ImageEncoder {
    uint64_t seed = 0;
    size_t tokens = 4;
    size_t d_model = 64;

    Tensor encode(const Raster& crop) const {
        if (crop.empty()) {
            throw ValidationError("empty reference crop");
        }
        double total = 0.0;
        for (uint8_t p : crop.pixels) total += p;
        const double mu = total / (static_cast<double>(crop.size()) * 255.0);
        SplitMix64 rng(seed);
        std::vector<double> data(tokens * d_model);
        for (double& v : data) v = mu * rng.next_uniform(-1.0, 1.0);
        return Tensor({tokens, d_model}, std::move(data));
    }
};

}  // namespace racig
