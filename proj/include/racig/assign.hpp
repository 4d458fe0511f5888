#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "racig/encoders.hpp"
#include "racig/msdb.hpp"
#include "racig/rng.hpp"
#include "racig/tensor.hpp"

namespace racig {

// perm[k] = region index assigned to the k-th character mentioned in the
// prompt; scores is the full (character x region) matrix the choice was
// made from.
struct Assignment {
    std::vector<size_t> perm;
    Tensor scores;
};

// Scores placing the prompt's k-th mentioned character into region
// `region` of `record`. Implementations must be deterministic and
// stateless; assign may be called concurrently.
struct RegionScorer {
    virtual ~RegionScorer() = default;
    virtual double score(const std::string& prompt, size_t character, const MsdbRecord& record,
                         size_t region) const = 0;
};

// Reads the planted ground-truth labels carried by fixture records.
struct OracleScorer final : RegionScorer {
    double score(const std::string& prompt, size_t character, const MsdbRecord& record,
                 size_t region) const override {
        (void)prompt;
        if (record.gt_perm.empty()) {
            throw ValidationError("record " + record.id + " carries no ground-truth labels");
        }
        return record.gt_perm[character] == region ? 1.0 : 0.0;
    }
};

// Substring covering the k-th character mention: from its "Character n"
// token up to the next mention (or end of prompt), trailing spaces trimmed.
inline std::string character_span(const std::string& prompt, size_t mention) {
    std::vector<size_t> starts;
    static const std::string kWord = "Character";
    size_t pos = 0;
    while ((pos = prompt.find(kWord, pos)) != std::string::npos) {
        bool starts_token = pos == 0 || std::isspace(static_cast<unsigned char>(prompt[pos - 1]));
        size_t after = pos + kWord.size();
        bool has_digit = after + 1 < prompt.size() && prompt[after] == ' ' &&
                         std::isdigit(static_cast<unsigned char>(prompt[after + 1]));
        if (starts_token && has_digit) {
            starts.push_back(pos);
        }
        pos += kWord.size();
    }
    if (mention >= starts.size()) {
        throw RangeError("prompt has " + std::to_string(starts.size()) +
                         " character mentions, mention " + std::to_string(mention) + " requested");
    }
    size_t begin = starts[mention];
    size_t end = mention + 1 < starts.size() ? starts[mention + 1] : prompt.size();
    while (end > begin && std::isspace(static_cast<unsigned char>(prompt[end - 1]))) end--;
    return prompt.substr(begin, end - begin);
}

// Cosine between a seeded embedding of the character's prompt span and a
// seeded embedding derived from the region's reference crops. A learned
// backbone would sit behind the same interface.
struct StubScorer final : RegionScorer {
    uint64_t seed = 0;
    size_t dim = 64;

    StubScorer() = default;
    StubScorer(uint64_t s, size_t d) : seed(s), dim(d) {}

    double score(const std::string& prompt, size_t character, const MsdbRecord& record,
                 size_t region) const override {
        TextEncoder enc{seed, dim};
        std::vector<double> text = enc.encode(character_span(prompt, character));

        const CharacterRegion& cr = record.characters.at(region);
        uint64_t h = UINT64_C(14695981039346656037);
        for (const Raster* crop : {&cr.ref_face, &cr.ref_body}) {
            for (uint8_t p : crop->pixels) {
                h ^= p;
                h *= UINT64_C(1099511628211);
            }
        }
        SplitMix64 rng(seed ^ h);
        std::vector<double> ref(dim);
        double norm = 0.0;
        for (double& v : ref) {
            v = rng.next_gaussian();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        double dot = 0.0;
        for (size_t i = 0; i < dim; i++) {
            dot += text[i] * ref[i] / norm;
        }
        return dot;
    }
};

// Exhaustive maximization of sum_k scores(k, perm[k]) over all N!
// permutations, ties broken by lexicographically smallest permutation.
// N is at most 2 here; swap exhaustion for Hungarian assignment if larger
// N is ever needed.
inline std::vector<size_t> best_permutation(const Tensor& scores) {
    size_t n = scores.rows();
    if (scores.cols() != n) {
        throw ShapeError("score matrix must be square, got " + std::to_string(n) + " x " +
                         std::to_string(scores.cols()));
    }
    std::vector<size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<size_t> best = perm;
    double best_total = 0.0;
    for (size_t k = 0; k < n; k++) best_total += scores.at(k, perm[k]);
    while (std::next_permutation(perm.begin(), perm.end())) {
        double total = 0.0;
        for (size_t k = 0; k < n; k++) total += scores.at(k, perm[k]);
        if (total > best_total) {
            best_total = total;
            best = perm;
        }
    }
    return best;
}

inline Assignment assign(const std::string& prompt, const MsdbRecord& record,
                         const RegionScorer& scorer, size_t max_characters = 2) {
    std::vector<size_t> mentions = extract_character_tokens(prompt);
    size_t n = mentions.size();
    if (n == 0) {
        throw ValidationError("prompt mentions no characters");
    }
    if (n != record.characters.size()) {
        throw ValidationError("arity mismatch: prompt mentions " + std::to_string(n) +
                              " characters but record " + record.id + " has " +
                              std::to_string(record.characters.size()) + " regions");
    }
    if (n > max_characters) {
        throw ValidationError("prompt mentions " + std::to_string(n) +
                              " characters, more than the configured maximum of " +
                              std::to_string(max_characters));
    }
    Assignment out;
    out.scores = Tensor::zeros({n, n});
    for (size_t k = 0; k < n; k++) {
        for (size_t r = 0; r < n; r++) {
            double s = scorer.score(prompt, k, record, r);
            if (!std::isfinite(s)) {
                throw RangeError("non-finite score for character " + std::to_string(k) +
                                 ", region " + std::to_string(r));
            }
            out.scores.at(k, r) = s;
        }
    }
    out.perm = best_permutation(out.scores);
    return out;
}

}  // namespace racig
