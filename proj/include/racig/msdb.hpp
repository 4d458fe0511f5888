#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "racig/errors.hpp"
#include "racig/raster.hpp"

namespace racig {

inline constexpr size_t kCocoKeypointCount = 17;
inline constexpr double kFeatureNormTolerance = 1e-9;

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    double confidence = 0.0;
};

using Skeleton = std::array<Keypoint, kCocoKeypointCount>;

// One segmented person: disjoint face/body masks at full image resolution
// plus the reference crops cut from the source image.
struct CharacterRegion {
    Raster face_mask;
    Raster body_mask;
    Raster ref_face;
    Raster ref_body;
};

// One retrieval unit. Captions use the symbolic tokens "Character 1",
// "Character 2", ... as appearance-free person identifiers; gt_perm, when
// present, maps prompt character k (0-based) to the region index that
// depicts it (planted by the fixture generator, read by the oracle scorer).
struct MsdbRecord {
    std::string id;
    std::string caption;
    std::vector<double> feature;
    std::vector<Skeleton> skeleton;
    std::vector<CharacterRegion> characters;
    size_t image_width = 0;
    size_t image_height = 0;
    std::vector<size_t> gt_perm;
};

// Indices of all "Character k" tokens in order of first appearance.
// The set of mentioned indices must be exactly {1..N}.
inline std::vector<size_t> extract_character_tokens(const std::string& prompt) {
    static const std::string kWord = "Character";
    std::vector<size_t> order;
    std::set<size_t> seen;
    size_t pos = 0;
    while ((pos = prompt.find(kWord, pos)) != std::string::npos) {
        bool starts_token = pos == 0 || std::isspace(static_cast<unsigned char>(prompt[pos - 1]));
        size_t after = pos + kWord.size();
        if (!starts_token || after >= prompt.size() || prompt[after] != ' ') {
            pos += kWord.size();
            continue;
        }
        size_t digits = after + 1;
        size_t end = digits;
        while (end < prompt.size() && std::isdigit(static_cast<unsigned char>(prompt[end]))) end++;
        if (end == digits) {
            pos += kWord.size();
            continue;
        }
        size_t k = std::stoul(prompt.substr(digits, end - digits));
        if (k == 0) {
            throw ValidationError("character numbering starts at 1, found \"Character 0\"");
        }
        if (seen.insert(k).second) {
            order.push_back(k);
        }
        pos = end;
    }
    for (size_t k = 1; k <= seen.size(); k++) {
        if (!seen.count(k)) {
            throw ValidationError("non-consecutive character numbering: missing \"Character " +
                                  std::to_string(k) + "\"");
        }
    }
    return order;
}

inline void validate_record(const MsdbRecord& rec) {
    auto fail = [&](const std::string& what) {
        throw ValidationError(what + " for record " + rec.id);
    };
    if (rec.id.empty()) {
        throw ValidationError("record id must be non-empty");
    }
    double norm = 0.0;
    for (double v : rec.feature) norm += v * v;
    norm = std::sqrt(norm);
    if (std::abs(norm - 1.0) > kFeatureNormTolerance) {
        fail("non-unit feature");
    }
    std::vector<size_t> tokens;
    try {
        tokens = extract_character_tokens(rec.caption);
    } catch (const ValidationError& e) {
        fail(std::string("bad caption (") + e.what() + ")");
    }
    if (tokens.size() != rec.characters.size()) {
        fail("caption mentions " + std::to_string(tokens.size()) + " characters but record has " +
             std::to_string(rec.characters.size()) + " regions");
    }
    for (size_t i = 0; i < rec.characters.size(); i++) {
        const CharacterRegion& region = rec.characters[i];
        for (const Raster* mask : {&region.face_mask, &region.body_mask}) {
            if (mask->width != rec.image_width || mask->height != rec.image_height) {
                fail("mask size mismatch (region " + std::to_string(i) + ")");
            }
            if (!is_binary_mask(*mask)) {
                fail("non-binary mask (region " + std::to_string(i) + ")");
            }
        }
        if (!masks_disjoint(region.face_mask, region.body_mask)) {
            fail("face and body masks overlap (region " + std::to_string(i) + ")");
        }
        if (mask_empty(region.face_mask) && mask_empty(region.body_mask)) {
            fail("empty union mask (region " + std::to_string(i) + ")");
        }
        if (region.ref_face.empty() || region.ref_body.empty()) {
            fail("empty reference crop (region " + std::to_string(i) + ")");
        }
    }
    for (const Skeleton& person : rec.skeleton) {
        for (const Keypoint& kp : person) {
            if (kp.confidence < 0.0 || kp.confidence > 1.0) {
                fail("keypoint confidence outside [0, 1]");
            }
        }
    }
    if (!rec.gt_perm.empty()) {
        if (rec.gt_perm.size() != rec.characters.size()) {
            fail("gt_perm arity mismatch");
        }
        std::set<size_t> targets(rec.gt_perm.begin(), rec.gt_perm.end());
        if (targets.size() != rec.gt_perm.size() || *targets.rbegin() >= rec.characters.size()) {
            fail("gt_perm is not a permutation of region indices");
        }
    }
}

// Two-layer keyword grid: subject counts cross verbs.
struct KeywordGrid {
    std::vector<size_t> subject_counts;
    std::vector<std::string> verbs;
};

inline std::vector<std::pair<size_t, std::string>> enumerate_pairs(const KeywordGrid& grid) {
    if (grid.subject_counts.empty() || grid.verbs.empty()) {
        throw ValidationError("empty keyword layer");
    }
    std::set<std::string> unique_verbs(grid.verbs.begin(), grid.verbs.end());
    if (unique_verbs.size() != grid.verbs.size()) {
        throw ValidationError("duplicate verbs in keyword grid");
    }
    for (size_t s : grid.subject_counts) {
        if (s == 0) {
            throw ValidationError("subject counts must be positive");
        }
    }
    std::vector<std::pair<size_t, std::string>> pairs;
    pairs.reserve(grid.subject_counts.size() * grid.verbs.size());
    for (size_t s : grid.subject_counts) {
        for (const std::string& v : grid.verbs) {
            pairs.emplace_back(s, v);
        }
    }
    return pairs;
}

}  // namespace racig
