#pragma once

// Independent reference implementations used to check the library. Kept
// deliberately separate from include/racig: scalar loops, long double
// accumulation, no shared helpers beyond the standard library.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline std::vector<double> softmax_row(const std::vector<double>& row) {
    long double mx = row[0];
    for (double v : row) {
        if (v > mx) mx = v;
    }
    std::vector<long double> es(row.size());
    long double total = 0.0L;
    for (size_t i = 0; i < row.size(); i++) {
        es[i] = std::exp(static_cast<long double>(row[i]) - mx);
        total += es[i];
    }
    std::vector<double> out(row.size());
    for (size_t i = 0; i < row.size(); i++) {
        out[i] = static_cast<double>(es[i] / total);
    }
    return out;
}

inline Mat attention(const Mat& q, const Mat& k, const Mat& v, double d) {
    const size_t n = q.size();
    const size_t m = k.size();
    const size_t dv = v[0].size();
    const long double scale = 1.0L / std::sqrt(static_cast<long double>(d));
    Mat out(n, std::vector<double>(dv, 0.0));
    for (size_t i = 0; i < n; i++) {
        std::vector<double> logits(m);
        for (size_t j = 0; j < m; j++) {
            long double dot = 0.0L;
            for (size_t c = 0; c < q[i].size(); c++) {
                dot += static_cast<long double>(q[i][c]) * k[j][c];
            }
            logits[j] = static_cast<double>(dot * scale);
        }
        std::vector<double> weights = softmax_row(logits);
        for (size_t c = 0; c < dv; c++) {
            long double acc = 0.0L;
            for (size_t j = 0; j < m; j++) {
                acc += static_cast<long double>(weights[j]) * v[j][c];
            }
            out[i][c] = static_cast<double>(acc);
        }
    }
    return out;
}

inline Mat matmul(const Mat& a, const Mat& b) {
    const size_t n = a.size(), k = b.size(), m = b[0].size();
    Mat out(n, std::vector<double>(m, 0.0));
    for (size_t i = 0; i < n; i++) {
        for (size_t j = 0; j < m; j++) {
            long double acc = 0.0L;
            for (size_t x = 0; x < k; x++) acc += static_cast<long double>(a[i][x]) * b[x][j];
            out[i][j] = static_cast<double>(acc);
        }
    }
    return out;
}

// Reference SplitMix64, written from the declared algorithm, not shared
// with the library.
struct Rng {
    uint64_t s;

    explicit Rng(uint64_t seed) : s(seed) {}

    uint64_t raw() {
        s += UINT64_C(0x9E3779B97F4A7C15);
        uint64_t z = s;
        z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
        return z ^ (z >> 31);
    }

    double uniform01() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    uint64_t below(uint64_t n) {
        uint64_t r = (UINT64_MAX % n + 1) % n;
        uint64_t limit = UINT64_MAX - r;
        uint64_t x = raw();
        while (x > limit) x = raw();
        return x % n;
    }

    // Declared Box-Muller form: u1 in (0, 1], u2 in [0, 1), two raw draws.
    double gaussian() {
        double u1 = static_cast<double>((raw() >> 11) + 1) * 0x1.0p-53;
        double u2 = static_cast<double>(raw() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }
};

inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = UINT64_C(14695981039346656037);
    for (unsigned char c : s) {
        h ^= c;
        h *= UINT64_C(1099511628211);
    }
    return h;
}

// Declared text stub: whitespace tokens, per-token stream seeded by
// seed ^ fnv1a(token), dim uniform(-1,1) draws accumulated, normalized.
inline std::vector<double> embed_text(const std::string& prompt, uint64_t seed, size_t dim) {
    std::vector<long double> acc(dim, 0.0L);
    size_t i = 0;
    while (i < prompt.size()) {
        while (i < prompt.size() && std::isspace(static_cast<unsigned char>(prompt[i]))) i++;
        size_t start = i;
        while (i < prompt.size() && !std::isspace(static_cast<unsigned char>(prompt[i]))) i++;
        if (i == start) continue;
        Rng rng(seed ^ fnv1a(prompt.substr(start, i - start)));
        for (size_t c = 0; c < dim; c++) {
            acc[c] += rng.uniform(-1.0, 1.0);
        }
    }
    long double norm = 0.0L;
    for (long double v : acc) norm += v * v;
    norm = std::sqrt(norm);
    std::vector<double> out(dim);
    for (size_t c = 0; c < dim; c++) {
        out[c] = static_cast<double>(acc[c] / norm);
    }
    return out;
}

// Declared image stub: mu = sum(pixels) / (count * 255), output mu * P
// with P (tokens x d_model) from a seeded uniform(-1,1) stream.
inline Mat image_encode(const std::vector<uint8_t>& pixels, uint64_t seed, size_t tokens,
                        size_t d_model) {
    long double total = 0.0L;
    for (uint8_t p : pixels) total += p;
    double mu = static_cast<double>(total / (static_cast<long double>(pixels.size()) * 255.0L));
    Rng rng(seed);
    Mat out(tokens, std::vector<double>(d_model));
    for (size_t r = 0; r < tokens; r++) {
        for (size_t c = 0; c < d_model; c++) {
            out[r][c] = mu * rng.uniform(-1.0, 1.0);
        }
    }
    return out;
}

// Full-sort ranking oracle: descending score, ascending id on ties.
struct RankedHit {
    std::string id;
    double score;
};

inline std::vector<RankedHit> brute_force_rank(const std::vector<std::string>& ids,
                                               const std::vector<std::vector<double>>& features,
                                               const std::vector<double>& query) {
    std::vector<RankedHit> hits;
    for (size_t i = 0; i < ids.size(); i++) {
        long double dot = 0.0L;
        for (size_t c = 0; c < query.size(); c++) {
            dot += static_cast<long double>(query[c]) * features[i][c];
        }
        hits.push_back({ids[i], static_cast<double>(dot)});
    }
    for (size_t i = 1; i < hits.size(); i++) {  // insertion sort, no library tie subtleties
        RankedHit key = hits[i];
        size_t j = i;
        while (j > 0 && (hits[j - 1].score < key.score ||
                         (hits[j - 1].score == key.score && hits[j - 1].id > key.id))) {
            hits[j] = hits[j - 1];
            j--;
        }
        hits[j] = key;
    }
    return hits;
}

}  // namespace oracle
